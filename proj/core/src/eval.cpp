#include "fame/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fame/calibration.hpp"
#include "fame/rng.hpp"

namespace fame {

namespace {

std::string format2(const std::optional<double>& value) {
    if (!value) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *value);
    return buf;
}

MetricsReport metrics_from_scores(std::span<const double> scores,
                                  std::span<const std::uint8_t> decisions,
                                  std::span<const Label> truth) {
    MetricsReport report;
    std::vector<int> labels(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == Label::unlabeled)
            throw std::runtime_error("eval: unlabeled record in the test region");
        labels[i] = truth[i] == Label::anomaly ? 1 : 0;
        bool positive = decisions[i] != 0;
        if (labels[i] == 1)
            (positive ? report.counts.tp : report.counts.fn) += 1;
        else
            (positive ? report.counts.fp : report.counts.tn) += 1;
    }
    auto scale = [](std::optional<double> v) -> std::optional<double> {
        if (!v) return std::nullopt;
        return *v * 100.0;
    };
    report.precision = scale(precision_of(report.counts));
    report.recall = scale(recall_of(report.counts));
    report.f1 = scale(f1_of(report.counts));
    report.auroc = scale(auroc(scores, labels));
    return report;
}

} // namespace

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json doc{{"tp", counts.tp},
                       {"fp", counts.fp},
                       {"fn", counts.fn},
                       {"tn", counts.tn},
                       {"paths",
                        {{"universal", path_universal}, {"pure", path_pure}, {"mixed", path_mixed}}}};
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v)
            doc[key] = *v;
        else
            doc[key] = nullptr;
    };
    put("precision", precision);
    put("recall", recall);
    put("f1", f1);
    put("auroc", auroc);
    if (!per_domain.empty()) doc["per_domain"] = per_domain;
    return doc;
}

std::string render_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
    std::size_t name_width = 6;
    for (const auto& [name, report] : rows) name_width = std::max(name_width, name.size());
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-*s  %8s %8s %8s %8s\n",
                  static_cast<int>(name_width), "Method", "Prec.", "Rec.", "F1", "AUROC");
    out += line;
    for (const auto& [name, report] : rows) {
        std::snprintf(line, sizeof line, "%-*s  %8s %8s %8s %8s\n",
                      static_cast<int>(name_width), name.c_str(),
                      format2(report.precision).c_str(), format2(report.recall).c_str(),
                      format2(report.f1).c_str(), format2(report.auroc).c_str());
        out += line;
    }
    return out;
}

MetricsReport compute_metrics(std::span<const Verdict> verdicts, std::span<const Label> truth,
                              const std::vector<std::string>& domain_names) {
    if (verdicts.size() != truth.size())
        throw std::runtime_error("eval: verdicts/truth size mismatch");
    std::vector<double> scores(verdicts.size());
    std::vector<std::uint8_t> decisions(verdicts.size());
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        // Pure-path verdicts are hard decisions; they enter AUROC at maximal
        // confidence.
        scores[i] = verdicts[i].score ? *verdicts[i].score : 1.0;
        decisions[i] = verdicts[i].anomaly ? 1 : 0;
    }
    MetricsReport report = metrics_from_scores(scores, decisions, truth);
    for (const Verdict& v : verdicts) {
        switch (v.path) {
        case Path::universal: ++report.path_universal; break;
        case Path::pure: ++report.path_pure; break;
        case Path::mixed: ++report.path_mixed; break;
        }
        if (v.domain) {
            std::string name = v.domain && *v.domain < domain_names.size()
                                   ? domain_names[*v.domain]
                                   : "domain_" + std::to_string(*v.domain);
            ++report.per_domain[name];
        }
    }
    return report;
}

nlohmann::json UnseenAnalysis::to_json() const {
    nlohmann::json doc{{"test_anomalies", test_anomalies},
                       {"unseen_anomalies", unseen_anomalies},
                       {"unseen_fraction", unseen_fraction},
                       {"unseen_universal_fraction", unseen_universal_fraction}};
    doc["unseen_recall"] = unseen_recall ? nlohmann::json(*unseen_recall) : nlohmann::json();
    doc["seen_recall"] = seen_recall ? nlohmann::json(*seen_recall) : nlohmann::json();
    return doc;
}

UnseenAnalysis unseen_eventid_analysis(const Corpus& corpus, const CorpusSplit& split,
                                       const TemplateTable& table,
                                       std::span<const Verdict> verdicts) {
    if (verdicts.size() != split.test_count())
        throw std::runtime_error("eval: verdict count does not match the test region");
    UnseenAnalysis out;
    std::uint64_t unseen_detected = 0, seen_detected = 0, seen_anomalies = 0;
    std::uint64_t unseen_universal = 0;
    for (std::size_t i = split.offline_end; i < split.size; ++i) {
        const LogRecord& rec = corpus[i];
        if (rec.label != Label::anomaly) continue;
        ++out.test_anomalies;
        const Verdict& v = verdicts[i - split.offline_end];
        const bool seen = table.match(rec.raw).has_value();
        if (seen) {
            ++seen_anomalies;
            seen_detected += v.anomaly;
        } else {
            ++out.unseen_anomalies;
            unseen_detected += v.anomaly;
            unseen_universal += (v.path == Path::universal);
        }
    }
    if (out.test_anomalies > 0)
        out.unseen_fraction = static_cast<double>(out.unseen_anomalies) /
                              static_cast<double>(out.test_anomalies);
    if (out.unseen_anomalies > 0) {
        out.unseen_recall = 100.0 * static_cast<double>(unseen_detected) /
                            static_cast<double>(out.unseen_anomalies);
        out.unseen_universal_fraction = static_cast<double>(unseen_universal) /
                                        static_cast<double>(out.unseen_anomalies);
    }
    if (seen_anomalies > 0)
        out.seen_recall =
            100.0 * static_cast<double>(seen_detected) / static_cast<double>(seen_anomalies);
    return out;
}

EvalOutcome evaluate_bundle(const ModelBundle& bundle, const Corpus& corpus,
                            const CorpusSplit& split) {
    EvalOutcome out;
    out.verdicts.reserve(split.test_count());
    std::vector<Label> truth;
    truth.reserve(split.test_count());
    for (std::size_t i = split.offline_end; i < split.size; ++i) {
        out.verdicts.push_back(classify(bundle, corpus[i].raw));
        truth.push_back(corpus[i].label);
    }
    out.pipeline = compute_metrics(out.verdicts, truth, bundle.partition.domain_names);
    out.unseen = unseen_eventid_analysis(corpus, split, bundle.templates, out.verdicts);
    return out;
}

namespace {

// Hashed word-bigram TF-IDF vectors for the outlier baseline.
std::vector<std::pair<std::uint32_t, float>> bigram_counts(std::string_view raw,
                                                           const FeaturizerConfig& cfg) {
    std::vector<std::pair<std::uint32_t, float>> entries;
    std::string_view prev;
    std::size_t i = 0;
    const std::uint64_t basis = fnv1a64(std::string_view("\x02", 1), cfg.seed);
    while (i < raw.size()) {
        while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
        std::size_t start = i;
        while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
        if (i == start) continue;
        std::string_view word = raw.substr(start, i - start);
        if (!prev.empty()) {
            std::uint64_t h = fnv1a64(prev, basis);
            h = fnv1a64(std::string_view("\x1f", 1), h);
            h = fnv1a64(word, h);
            entries.emplace_back(static_cast<std::uint32_t>(h % cfg.dim), 1.0f);
        }
        prev = word;
    }
    std::sort(entries.begin(), entries.end());
    std::size_t out_n = 0;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (out_n > 0 && entries[out_n - 1].first == entries[k].first)
            entries[out_n - 1].second += entries[k].second;
        else
            entries[out_n++] = entries[k];
    }
    entries.resize(out_n);
    return entries;
}

struct BigramTfIdf {
    FeaturizerConfig cfg;
    std::vector<float> idf;
    std::vector<double> centroid; // dense over dim

    std::vector<std::pair<std::uint32_t, float>> vector_of(std::string_view raw) const {
        auto entries = bigram_counts(raw, cfg);
        double norm_sq = 0.0;
        for (auto& [b, v] : entries) {
            v *= idf[b];
            norm_sq += static_cast<double>(v) * v;
        }
        if (norm_sq > 0.0) {
            float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
            for (auto& [b, v] : entries) v *= inv;
        }
        return entries;
    }

    double outlier_score(std::string_view raw) const {
        auto entries = vector_of(raw);
        double dot = 0.0;
        for (const auto& [b, v] : entries) dot += centroid[b] * v;
        return 1.0 - std::clamp(dot, 0.0, 1.0);
    }
};

BigramTfIdf fit_bigram_model(const Corpus& corpus, const PuNormalPool& pool,
                             const FeaturizerConfig& features, std::size_t cap,
                             std::uint64_t seed) {
    BigramTfIdf model;
    model.cfg = features;
    Rng rng(seed);
    std::vector<std::size_t> chosen =
        rng.sample_indices(pool.ordinals.size(), std::min(cap, pool.ordinals.size()));
    std::sort(chosen.begin(), chosen.end());

    std::vector<std::uint32_t> df(features.dim, 0);
    for (std::size_t idx : chosen)
        for (const auto& entry : bigram_counts(corpus[pool.ordinals[idx]].raw, features))
            ++df[entry.first];
    const double n = static_cast<double>(chosen.size());
    model.idf.resize(features.dim);
    for (std::uint32_t b = 0; b < features.dim; ++b)
        model.idf[b] = static_cast<float>(std::log((1.0 + n) / (1.0 + df[b])) + 1.0);

    model.centroid.assign(features.dim, 0.0);
    for (std::size_t idx : chosen)
        for (const auto& [b, v] : model.vector_of(corpus[pool.ordinals[idx]].raw))
            model.centroid[b] += v;
    double norm_sq = 0.0;
    for (double v : model.centroid) norm_sq += v * v;
    if (norm_sq > 0.0) {
        double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : model.centroid) v *= inv;
    }
    return model;
}

} // namespace

std::map<std::string, BaselineOutcome> run_baselines(const Corpus& corpus,
                                                     const CorpusSplit& split,
                                                     const TemplateTable& table,
                                                     const KShotSample& sample,
                                                     const PuNormalPool& pool,
                                                     const BaselineConfig& config) {
    std::map<std::string, BaselineOutcome> out;

    std::vector<Label> truth;
    truth.reserve(split.test_count());
    for (std::size_t i = split.offline_end; i < split.size; ++i) truth.push_back(corpus[i].label);

    // Calibration lines shared by all score-based baselines: the 20% K-shot
    // calibration split, byte-identical with the pipeline's.
    std::vector<std::uint64_t> calib_ordinals;
    for (const auto& [event, es] : sample.per_event)
        calib_ordinals.insert(calib_ordinals.end(), es.calib_ordinals.begin(),
                              es.calib_ordinals.end());
    std::sort(calib_ordinals.begin(), calib_ordinals.end());
    std::vector<int> calib_labels;
    calib_labels.reserve(calib_ordinals.size());
    for (std::uint64_t ord : calib_ordinals)
        calib_labels.push_back(corpus[ord].label == Label::anomaly ? 1 : 0);

    CalibrationConfig calibration{config.recall_floor, 1000};

    auto finish = [&](const std::string& name, const std::string& note,
                      const std::vector<double>& scores, double tau) {
        std::vector<std::uint8_t> decisions(scores.size());
        std::vector<Verdict> verdicts(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) {
            decisions[i] = scores[i] >= tau ? 1 : 0;
            verdicts[i] = Verdict{decisions[i] != 0, Path::universal, std::nullopt, scores[i]};
        }
        BaselineOutcome outcome;
        outcome.report = metrics_from_scores(scores, decisions, truth);
        outcome.note = note;
        outcome.verdicts = std::move(verdicts);
        out.emplace(name, std::move(outcome));
    };

    // (a) EventID-only majority vote over the K-shot labels; stands in for
    // Drain+RForest. Unmatched test templates default to normal.
    {
        std::map<EventId, double> anomaly_frac;
        for (const auto& [event, es] : sample.per_event) {
            std::size_t total = es.total(), anomalies = 0;
            for (std::uint64_t ord : es.train_ordinals)
                anomalies += corpus[ord].label == Label::anomaly;
            for (std::uint64_t ord : es.calib_ordinals)
                anomalies += corpus[ord].label == Label::anomaly;
            if (total > 0)
                anomaly_frac[event] =
                    static_cast<double>(anomalies) / static_cast<double>(total);
        }
        std::vector<double> scores;
        scores.reserve(split.test_count());
        for (std::size_t i = split.offline_end; i < split.size; ++i) {
            auto event = table.match(corpus[i].raw);
            double score = 0.0;
            if (event) {
                auto it = anomaly_frac.find(*event);
                if (it != anomaly_frac.end()) score = it->second;
            }
            scores.push_back(score);
        }
        finish("eventid_majority", "per-EventID majority vote, stand-in for Drain+RForest",
               scores, 0.5);
    }

    // (b) TF-IDF bigram centroid distance over the PU pool; stands in for
    // TF-IDF+IForest. Threshold calibrated on the shared calibration split.
    {
        BigramTfIdf model =
            fit_bigram_model(corpus, pool, config.features, config.idf_pool_cap, config.seed);
        std::vector<double> calib_scores;
        calib_scores.reserve(calib_ordinals.size());
        for (std::uint64_t ord : calib_ordinals)
            calib_scores.push_back(model.outlier_score(corpus[ord].raw));
        ThresholdResult tau = calibrate_threshold(calib_scores, calib_labels, calibration);

        std::vector<double> scores;
        scores.reserve(split.test_count());
        for (std::size_t i = split.offline_end; i < split.size; ++i)
            scores.push_back(model.outlier_score(corpus[i].raw));
        finish("tfidf_centroid_outlier",
               "centroid-distance outlier score, stand-in for TF-IDF+IForest", scores, tau.tau);
    }

    // (c) Global supervised linear model on the reference features; stands in
    // for SBERT+LR and doubles as the single-model comparison point.
    {
        std::vector<TrainExample> train;
        for (const auto& [event, es] : sample.per_event) {
            for (std::uint64_t ord : es.train_ordinals) {
                train.push_back(TrainExample{featurize(corpus[ord].raw, config.features),
                                             corpus[ord].label == Label::anomaly ? 1u : 0u, 1.0f,
                                             ord});
            }
        }
        std::sort(train.begin(), train.end(),
                  [](const TrainExample& a, const TrainExample& b) {
                      return a.ordinal < b.ordinal;
                  });
        TrainOptions options;
        options.loss = config.loss;
        options.learning_rate = config.learning_rate;
        options.batch_size = config.batch_size;
        options.max_epochs = config.max_epochs;
        options.seed = config.seed;
        TrainResult trained = train_linear(train, config.features.dim, 2, options);

        std::vector<double> calib_scores;
        calib_scores.reserve(calib_ordinals.size());
        for (std::uint64_t ord : calib_ordinals)
            calib_scores.push_back(
                trained.model.score_binary(featurize(corpus[ord].raw, config.features)));
        ThresholdResult tau = calibrate_threshold(calib_scores, calib_labels, calibration);

        std::vector<double> scores;
        scores.reserve(split.test_count());
        for (std::size_t i = split.offline_end; i < split.size; ++i)
            scores.push_back(
                trained.model.score_binary(featurize(corpus[i].raw, config.features)));
        finish("global_linear", "global linear model on reference features, stand-in for SBERT+LR",
               scores, tau.tau);
    }

    return out;
}

} // namespace fame
