#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fame/backbone.hpp"
#include "fame/corpus.hpp"
#include "fame/drain.hpp"
#include "fame/rng.hpp"

namespace fame {

// One document drives the whole run; every constant the method fixes is a
// named key, and the hash of the canonical dump is recorded in each artifact.
struct PipelineConfig {
    std::string dataset_path;
    CorpusFormat dataset_format = CorpusFormat::loghub_labeled;
    double offline_fraction = 0.85;
    std::size_t k = 100;
    std::uint64_t seed = 1;

    DrainConfig drain;
    FeaturizerConfig features;
    std::size_t phase1_cap = 200000;

    FocalLossConfig loss; // gamma 2, alpha 0.75
    double learning_rate = 0.1;
    std::uint32_t batch_size = 256;
    int max_epochs = 20;

    double gate_subsample_ratio = 3.0;
    double gate_recall_target = 0.95;
    double selector_accuracy_target = 0.80;
    int selector_patience = 1;

    std::size_t expert_small_dataset_limit = 4000;
    int expert_fixed_steps = 500;
    int expert_check_every = 50;
    int expert_patience = 3;
    double expert_negative_cap = 20.0;
    double universal_negative_cap = 10.0;

    std::string partition_mode = "tfidf"; // "tfidf" | "import"
    std::string partition_import_path;
    double cosine_link_threshold = 0.5;
    double distinctness_threshold = 0.7;
    std::size_t certification_pool_sample = 10000;

    double recall_floor = 0.90;
    std::size_t percentile_candidates = 1000;
    std::vector<double> fusion_grid = {0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0};

    std::string output_dir = "fame_out";

    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& doc);
    static PipelineConfig load(const std::string& path);

    std::string hash() const;
    std::uint64_t stage_seed(std::string_view stage) const { return derive_seed(seed, stage); }
    void validate() const;
};

} // namespace fame
