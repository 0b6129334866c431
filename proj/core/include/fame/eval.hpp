#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fame/bundle.hpp"
#include "fame/inference.hpp"
#include "fame/kshot.hpp"
#include "fame/metrics.hpp"

namespace fame {

// Percentages on the 0-100 scale, full precision internally; rendering rounds
// to two decimals. Absent values mean "not applicable", never silent zero.
struct MetricsReport {
    ConfusionCounts counts;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> auroc;
    std::uint64_t path_universal = 0;
    std::uint64_t path_pure = 0;
    std::uint64_t path_mixed = 0;
    std::map<std::string, std::uint64_t> per_domain;

    nlohmann::json to_json() const;
};

std::string render_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

// Anomaly is the positive class; pure-path verdicts contribute score 1.0 to
// AUROC. Every truth label must be normal or anomaly.
MetricsReport compute_metrics(std::span<const Verdict> verdicts, std::span<const Label> truth,
                              const std::vector<std::string>& domain_names = {});

struct UnseenAnalysis {
    std::uint64_t test_anomalies = 0;
    std::uint64_t unseen_anomalies = 0;
    double unseen_fraction = 0.0;      // of test anomalies
    std::optional<double> unseen_recall;
    std::optional<double> seen_recall;
    double unseen_universal_fraction = 0.0; // unseen anomalies taking the universal path

    nlohmann::json to_json() const;
};

UnseenAnalysis unseen_eventid_analysis(const Corpus& corpus, const CorpusSplit& split,
                                       const TemplateTable& table,
                                       std::span<const Verdict> verdicts);

// Desk-scale stand-ins for the statistical baselines; each substitution is
// named in the report key so results are not over-read.
struct BaselineConfig {
    FeaturizerConfig features;
    double recall_floor = 0.90;
    std::size_t idf_pool_cap = 50000;
    FocalLossConfig loss;
    double learning_rate = 0.1;
    std::uint32_t batch_size = 256;
    int max_epochs = 20;
    std::uint64_t seed = 1;
};

struct BaselineOutcome {
    MetricsReport report;
    std::string note; // what the stand-in replaces
    std::vector<Verdict> verdicts;
};

std::map<std::string, BaselineOutcome> run_baselines(const Corpus& corpus,
                                                     const CorpusSplit& split,
                                                     const TemplateTable& table,
                                                     const KShotSample& sample,
                                                     const PuNormalPool& pool,
                                                     const BaselineConfig& config);

// Pipeline metrics for the chronological test region of an annotated corpus.
struct EvalOutcome {
    MetricsReport pipeline;
    UnseenAnalysis unseen;
    std::vector<Verdict> verdicts;
};

EvalOutcome evaluate_bundle(const ModelBundle& bundle, const Corpus& corpus,
                            const CorpusSplit& split);

} // namespace fame
