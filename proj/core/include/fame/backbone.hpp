#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fame {

// Sparse L2-normalized feature vector; entries sorted by bucket, unique.
struct FeatureVector {
    std::vector<std::pair<std::uint32_t, float>> entries;

    bool empty() const { return entries.empty(); }
};

struct FeaturizerConfig {
    std::uint32_t dim = 1u << 18;
    std::uint64_t seed = 0x5eedf00dull;
};

// Raw hashed term counts (word unigrams + bigrams, char trigrams), not yet
// normalized. One hashing pass feeds both the plain and the IDF-weighted view.
std::vector<std::pair<std::uint32_t, float>> hash_term_counts(std::string_view raw,
                                                              const FeaturizerConfig& cfg);

FeatureVector featurize(std::string_view raw, const FeaturizerConfig& cfg);

// Shared unsupervised adaptation state: IDF statistics fitted once on the
// PU-normal pool and reused by every expert. A transformer plugin would hang
// its domain-adaptive pre-trained checkpoint on this same hook.
struct BackboneState {
    FeaturizerConfig featurizer;
    std::vector<float> idf; // dense, length dim; empty = identity

    FeatureVector transform(std::string_view raw) const;
    bool adapted() const { return !idf.empty(); }
};

BackboneState adapt_unsupervised(const std::vector<std::string_view>& pool_lines,
                                 std::size_t cap, const FeaturizerConfig& cfg,
                                 std::uint64_t seed);

struct FocalLossConfig {
    double gamma = 2.0;
    double alpha = 0.75;
};

double focal_loss(double p_hat, int y, const FocalLossConfig& cfg);
double focal_loss_gradient(double logit, int y, const FocalLossConfig& cfg);

double sigmoid(double z);
double clamp_probability(double p);
double clamp_logit(double z);

// Dense linear model: one weight row for binary, one per class for softmax.
struct LinearClassifier {
    std::uint32_t dim = 0;
    std::uint32_t n_classes = 2; // 2 => single-row binary model
    std::vector<float> weights;  // rows() x dim
    std::vector<float> bias;     // rows()

    std::uint32_t rows() const { return n_classes == 2 ? 1 : n_classes; }
    double logit(const FeatureVector& x) const;
    double score_binary(const FeatureVector& x) const;
    std::vector<double> score_multi(const FeatureVector& x) const;
};

struct TrainExample {
    FeatureVector x;
    std::uint32_t label = 0;
    float weight = 1.0f;
    std::uint64_t ordinal = 0;
};

struct TrainOptions {
    FocalLossConfig loss;
    double learning_rate = 0.1;
    std::uint32_t batch_size = 256;
    std::uint64_t seed = 1;
    int max_epochs = 20;
    int fixed_steps = 0;  // > 0: run exactly this many mini-batch steps
    int check_every = 50; // validation cadence in fixed-step mode
    int patience = 0;     // epochs mode: stop after this many non-improving checks (0 = off)
    std::optional<double> stop_at; // stop once the validation metric reaches this
};

struct TrainResult {
    LinearClassifier model; // best checkpoint when a validator is supplied
    double best_metric = 0.0;
    int epochs_run = 0;
    int steps_run = 0;
    bool reached_target = false;
};

// Mini-batch SGD on (class-)weighted focal loss. `validate` is called once per
// epoch (or every check_every steps in fixed-step mode); NaN metrics are
// ignored for checkpointing.
TrainResult train_linear(std::span<const TrainExample> train, std::uint32_t dim,
                         std::uint32_t n_classes, const TrainOptions& options,
                         const std::function<double(const LinearClassifier&)>& validate = {});

} // namespace fame
