#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fame/corpus.hpp"

namespace fame {

// Labeled lines drawn for one EventID; ordinals index into the host corpus.
// Train precedes calibration chronologically by construction.
struct EventSample {
    std::vector<std::uint64_t> train_ordinals;
    std::vector<std::uint64_t> calib_ordinals;
    bool has_normal = false;
    bool has_anomaly = false;
    std::optional<std::uint64_t> rep_normal;  // most recent sampled normal line
    std::optional<std::uint64_t> rep_anomaly; // most recent sampled anomaly line

    std::size_t total() const { return train_ordinals.size() + calib_ordinals.size(); }
};

struct KShotSample {
    std::map<EventId, EventSample> per_event;
    std::size_t k = 0;

    std::size_t total_labels() const;
    nlohmann::json to_json() const;
};

// At most K most-recent labeled lines per EventID, split 80/20 chronologically.
KShotSample sample_kshot(const Corpus& corpus, std::size_t offline_end, std::size_t k);

// Offline line ordinals not labeled anomalous in the K-shot sample. Positive-
// unlabeled by construction: hidden anomalies may remain.
struct PuNormalPool {
    std::vector<std::uint64_t> ordinals; // ascending
};

PuNormalPool build_pu_pool(const Corpus& corpus, std::size_t offline_end,
                           const KShotSample& sample);

struct LabelingCostRow {
    std::size_t k = 0;
    std::size_t labels = 0;
    std::uint64_t reduction = 0; // offline size / labels, rounded to integer x
};

std::vector<LabelingCostRow> labeling_cost_report(const Corpus& corpus,
                                                  std::size_t offline_end,
                                                  const std::vector<std::size_t>& k_grid);

} // namespace fame
