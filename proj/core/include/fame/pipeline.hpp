#pragma once

#include <optional>

#include "fame/bundle.hpp"
#include "fame/config.hpp"
#include "fame/eval.hpp"
#include "fame/partition.hpp"

namespace fame {

struct SetupOutputs {
    CorpusSplit split;
    KShotSample sample;
    PuNormalPool pool;
    ModelBundle bundle;
    nlohmann::json report;
};

// The full offline stage: parse, K-shot sample, partition + certify, train
// gate/selector/experts, calibrate. Fills event ids on the corpus.
SetupOutputs run_setup(Corpus& corpus, const PipelineConfig& config,
                       const std::optional<ProposedPartition>& imported = std::nullopt);

struct SweepCell {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    MetricsReport pipeline;
    std::size_t labels_used = 0;
    std::uint64_t reduction = 0;
};

struct SweepSummary {
    std::vector<SweepCell> cells;
    nlohmann::json to_json() const;
};

// Full pipeline per (k, seed) cell on one corpus; mean/std aggregated in the
// JSON report. The partition source is the built-in TF-IDF grouping.
SweepSummary k_sweep(const Corpus& corpus, const PipelineConfig& base,
                     const std::vector<std::size_t>& k_grid,
                     const std::vector<std::uint64_t>& seeds);

} // namespace fame
