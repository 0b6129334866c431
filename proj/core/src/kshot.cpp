#include "fame/kshot.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace fame {

std::size_t KShotSample::total_labels() const {
    std::size_t n = 0;
    for (const auto& [event, sample] : per_event) n += sample.total();
    return n;
}

nlohmann::json KShotSample::to_json() const {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& [event, sample] : per_event) {
        nlohmann::json entry{{"event_id", event_id_to_hex(event)},
                             {"train_ordinals", sample.train_ordinals},
                             {"calib_ordinals", sample.calib_ordinals},
                             {"has_normal", sample.has_normal},
                             {"has_anomaly", sample.has_anomaly}};
        if (sample.rep_normal) entry["rep_normal"] = *sample.rep_normal;
        if (sample.rep_anomaly) entry["rep_anomaly"] = *sample.rep_anomaly;
        events.push_back(std::move(entry));
    }
    return nlohmann::json{{"k", k}, {"events", std::move(events)}};
}

KShotSample sample_kshot(const Corpus& corpus, std::size_t offline_end, std::size_t k) {
    if (k == 0) throw std::runtime_error("kshot: budget must be positive");
    KShotSample out;
    out.k = k;

    // Group labeled offline lines per EventID, in ordinal order.
    std::map<EventId, std::vector<std::uint64_t>> labeled;
    for (std::size_t i = 0; i < offline_end && i < corpus.size(); ++i) {
        const LogRecord& rec = corpus[i];
        if (!rec.event_id)
            throw std::runtime_error("kshot: offline record without event_id");
        auto& bucket = labeled[*rec.event_id]; // ensure presence even if unlabeled
        if (rec.label != Label::unlabeled) bucket.push_back(rec.ordinal);
    }

    for (auto& [event, ordinals] : labeled) {
        EventSample sample;
        // K most recent labeled lines, kept in ascending ordinal order.
        std::vector<std::uint64_t> taken;
        if (ordinals.size() > k)
            taken.assign(ordinals.end() - static_cast<std::ptrdiff_t>(k), ordinals.end());
        else
            taken = ordinals;

        for (std::uint64_t ord : taken) {
            const LogRecord& rec = corpus[ord];
            if (rec.label == Label::anomaly) {
                sample.has_anomaly = true;
                sample.rep_anomaly = ord; // ascending scan leaves the most recent
            } else {
                sample.has_normal = true;
                sample.rep_normal = ord;
            }
        }

        const std::size_t m = taken.size();
        if (m == 1) {
            sample.train_ordinals = taken;
        } else if (m >= 2) {
            std::size_t train_n =
                std::max<std::size_t>(1, static_cast<std::size_t>(0.8 * static_cast<double>(m)));
            sample.train_ordinals.assign(taken.begin(),
                                         taken.begin() + static_cast<std::ptrdiff_t>(train_n));
            sample.calib_ordinals.assign(taken.begin() + static_cast<std::ptrdiff_t>(train_n),
                                         taken.end());
        }
        out.per_event.emplace(event, std::move(sample));
    }
    return out;
}

PuNormalPool build_pu_pool(const Corpus& corpus, std::size_t offline_end,
                           const KShotSample& sample) {
    std::unordered_set<std::uint64_t> sampled_anomalies;
    for (const auto& [event, es] : sample.per_event) {
        for (std::uint64_t ord : es.train_ordinals)
            if (corpus[ord].label == Label::anomaly) sampled_anomalies.insert(ord);
        for (std::uint64_t ord : es.calib_ordinals)
            if (corpus[ord].label == Label::anomaly) sampled_anomalies.insert(ord);
    }
    PuNormalPool pool;
    pool.ordinals.reserve(offline_end - sampled_anomalies.size());
    for (std::size_t i = 0; i < offline_end && i < corpus.size(); ++i) {
        if (!sampled_anomalies.count(corpus[i].ordinal)) pool.ordinals.push_back(corpus[i].ordinal);
    }
    return pool;
}

std::vector<LabelingCostRow> labeling_cost_report(const Corpus& corpus,
                                                  std::size_t offline_end,
                                                  const std::vector<std::size_t>& k_grid) {
    // Count labeled lines per EventID once; per-k totals follow from min(k, n_e).
    std::map<EventId, std::size_t> labeled_counts;
    for (std::size_t i = 0; i < offline_end && i < corpus.size(); ++i) {
        const LogRecord& rec = corpus[i];
        if (!rec.event_id)
            throw std::runtime_error("kshot: offline record without event_id");
        if (rec.label != Label::unlabeled) ++labeled_counts[*rec.event_id];
    }
    std::vector<LabelingCostRow> rows;
    rows.reserve(k_grid.size());
    for (std::size_t k : k_grid) {
        LabelingCostRow row;
        row.k = k;
        for (const auto& [event, n] : labeled_counts) row.labels += std::min(k, n);
        row.reduction = row.labels == 0
                            ? 0
                            : static_cast<std::uint64_t>(std::llround(
                                  static_cast<double>(offline_end) / static_cast<double>(row.labels)));
        rows.push_back(row);
    }
    return rows;
}

} // namespace fame
