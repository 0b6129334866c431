#pragma once

#include <cstdint>
#include <vector>

#include "fame/backbone.hpp"
#include "fame/corpus.hpp"
#include "fame/kshot.hpp"
#include "fame/partition.hpp"

namespace fame {

// Per-domain binary classifier. Pure-anomaly domains carry none: routing is
// the detector there.
struct ExpertModel {
    std::uint32_t domain = 0;
    bool trained = false;
    LinearClassifier classifier;
    double validation_auroc = 0.0;
    int steps_run = 0;
    bool step_regime = false; // true when the <4000-line fixed-step rule applied
};

struct ExpertDataset {
    std::vector<TrainExample> lines; // ascending ordinal, labels mixed in
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    std::uint32_t feature_dim = 0;
};

struct ExpertTrainConfig {
    std::size_t small_dataset_limit = 4000;
    int fixed_steps = 500;
    int check_every = 50;
    int patience = 3;
    FocalLossConfig loss;
    double learning_rate = 0.1;
    std::uint32_t batch_size = 256;
    int max_epochs = 20;
    std::uint64_t seed = 1;
};

// Positives: the domain's K-shot train-split anomaly lines (for the universal
// expert, every domain's). Negatives: seeded draw from the PU pool restricted
// to universal events plus, for mixed experts, the domain's own events;
// capped at negative_cap x positives.
ExpertDataset build_expert_dataset(std::uint32_t domain, const Corpus& corpus,
                                   const KShotSample& sample, const PuNormalPool& pool,
                                   const CertifiedPartition& partition,
                                   const BackboneState& backbone, double negative_cap,
                                   std::uint64_t seed);

ExpertModel train_expert(std::uint32_t domain, const ExpertDataset& dataset,
                         const ExpertTrainConfig& config);

double score_line(const ExpertModel& expert, const FeatureVector& x);

} // namespace fame
