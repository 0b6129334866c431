#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fame/backbone.hpp"
#include "fame/corpus.hpp"
#include "fame/partition.hpp"

namespace fame {

// Binary gate g_phi; the routing threshold is fixed at 0.5 and never calibrated.
struct GateModel {
    LinearClassifier classifier;
    double threshold = 0.5;
    bool recall_target_reached = true;
    double validation_recall = 0.0;
    int epochs_run = 0;
};

// Multiclass selector h_psi over non-universal domains. With a single expert
// domain the selector degenerates to a constant.
struct SelectorModel {
    std::optional<LinearClassifier> classifier;
    std::vector<std::uint32_t> class_to_domain; // selector class -> partition domain
    std::vector<double> class_weights;
    bool constant = false;
    bool accuracy_target_reached = true;
    double validation_accuracy = 0.0;
    int epochs_run = 0;

    std::size_t n_classes() const { return class_to_domain.size(); }
    std::vector<double> distribution(const FeatureVector& x) const;
};

struct RouterDataset {
    std::vector<TrainExample> train;
    std::vector<TrainExample> validation;
    std::uint32_t feature_dim = 0;
    std::size_t n_expert_lines = 0;
    std::size_t n_universal_lines = 0; // after subsampling
};

struct GateTrainConfig {
    double subsample_ratio = 3.0; // universal : expert cap
    double recall_target = 0.95;
    FocalLossConfig loss;
    double learning_rate = 0.1;
    std::uint32_t batch_size = 256;
    int max_epochs = 20;
    std::uint64_t seed = 1;
};

// All expert-domain offline lines labeled 1; UNIVERSAL_NORMAL lines seeded-
// subsampled to ratio x expert count, labeled 0. Last 10% per class by
// ordinal is reserved as the router validation split.
RouterDataset build_gate_dataset(const Corpus& corpus, std::size_t offline_end,
                                 const CertifiedPartition& partition,
                                 const FeaturizerConfig& features,
                                 double subsample_ratio, std::uint64_t seed);

GateModel train_gate(const RouterDataset& dataset, const GateTrainConfig& config);

// Eq. 1: w_c = N_total / ((C-1) * count_c).
std::vector<double> class_weights(const std::vector<std::size_t>& counts);

struct SelectorTrainConfig {
    double accuracy_target = 0.80;
    int patience = 1;
    FocalLossConfig loss;
    double learning_rate = 0.1;
    std::uint32_t batch_size = 256;
    int max_epochs = 20;
    std::uint64_t seed = 1;
};

SelectorModel train_selector(const Corpus& corpus, std::size_t offline_end,
                             const CertifiedPartition& partition,
                             const FeaturizerConfig& features,
                             const SelectorTrainConfig& config);

// Eq. 5 routing: gate score < 0.5 -> universal, else selector argmax (ties to
// the lowest domain index).
std::uint32_t route(const GateModel& gate, const SelectorModel& selector,
                    const CertifiedPartition& partition, const FeatureVector& x);

} // namespace fame
