#include "fame/backbone.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fame/rng.hpp"

namespace fame {

namespace {

constexpr double kProbEps = 1e-7;
constexpr double kLogitClamp = 16.0;

inline std::uint32_t bucket_of(std::uint64_t h, std::uint32_t dim) {
    return static_cast<std::uint32_t>(h % dim);
}

inline void sort_and_merge(std::vector<std::pair<std::uint32_t, float>>& entries) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (out > 0 && entries[out - 1].first == entries[i].first)
            entries[out - 1].second += entries[i].second;
        else
            entries[out++] = entries[i];
    }
    entries.resize(out);
}

inline void l2_normalize(std::vector<std::pair<std::uint32_t, float>>& entries) {
    double norm_sq = 0.0;
    for (const auto& [b, v] : entries) norm_sq += static_cast<double>(v) * v;
    if (norm_sq <= 0.0) return;
    float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
    for (auto& [b, v] : entries) v *= inv;
}

} // namespace

std::vector<std::pair<std::uint32_t, float>> hash_term_counts(std::string_view raw,
                                                              const FeaturizerConfig& cfg) {
    std::vector<std::pair<std::uint32_t, float>> entries;
    if (raw.empty()) return entries;
    entries.reserve(raw.size() / 2 + 8);

    const std::uint64_t basis = fnv1a64(std::string_view("\x01", 1), cfg.seed);
    auto add = [&](char kind, std::string_view a, std::string_view b = {}) {
        std::uint64_t h = fnv1a64(std::string_view(&kind, 1), basis);
        h = fnv1a64(a, h);
        if (!b.empty()) {
            h = fnv1a64(std::string_view("\x1f", 1), h);
            h = fnv1a64(b, h);
        }
        entries.emplace_back(bucket_of(h, cfg.dim), 1.0f);
    };

    // Word unigrams + bigrams.
    std::string_view prev;
    std::size_t i = 0;
    while (i < raw.size()) {
        while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
        std::size_t start = i;
        while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
        if (i == start) continue;
        std::string_view word = raw.substr(start, i - start);
        add('u', word);
        if (!prev.empty()) add('b', prev, word);
        prev = word;
    }

    // Char trigrams over the sentinel-padded line: ^raw$.
    std::string padded;
    padded.reserve(raw.size() + 2);
    padded.push_back('^');
    padded.append(raw);
    padded.push_back('$');
    for (std::size_t k = 0; k + 3 <= padded.size(); ++k)
        add('c', std::string_view(padded).substr(k, 3));

    sort_and_merge(entries);
    return entries;
}

FeatureVector featurize(std::string_view raw, const FeaturizerConfig& cfg) {
    FeatureVector fv;
    fv.entries = hash_term_counts(raw, cfg);
    l2_normalize(fv.entries);
    return fv;
}

FeatureVector BackboneState::transform(std::string_view raw) const {
    FeatureVector fv;
    fv.entries = hash_term_counts(raw, featurizer);
    if (!idf.empty()) {
        for (auto& [b, v] : fv.entries) v *= idf[b];
    }
    l2_normalize(fv.entries);
    return fv;
}

BackboneState adapt_unsupervised(const std::vector<std::string_view>& pool_lines,
                                 std::size_t cap, const FeaturizerConfig& cfg,
                                 std::uint64_t seed) {
    if (pool_lines.empty())
        throw std::runtime_error("backbone: adaptation pool is empty");
    Rng rng(seed);
    std::vector<std::size_t> chosen =
        rng.sample_indices(pool_lines.size(), std::min(cap, pool_lines.size()));
    std::sort(chosen.begin(), chosen.end());

    std::vector<std::uint32_t> df(cfg.dim, 0);
    for (std::size_t idx : chosen) {
        auto counts = hash_term_counts(pool_lines[idx], cfg);
        for (const auto& entry : counts) ++df[entry.first]; // entries are unique per line
    }
    const double n = static_cast<double>(chosen.size());
    BackboneState state;
    state.featurizer = cfg;
    state.idf.resize(cfg.dim);
    for (std::uint32_t b = 0; b < cfg.dim; ++b)
        state.idf[b] = static_cast<float>(std::log((1.0 + n) / (1.0 + df[b])) + 1.0);
    return state;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double clamp_probability(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

double clamp_logit(double z) { return std::clamp(z, -kLogitClamp, kLogitClamp); }

double focal_loss(double p_hat, int y, const FocalLossConfig& cfg) {
    double p_t = clamp_probability(y == 1 ? p_hat : 1.0 - p_hat);
    double alpha_t = y == 1 ? cfg.alpha : 1.0 - cfg.alpha;
    return -alpha_t * std::pow(1.0 - p_t, cfg.gamma) * std::log(p_t);
}

double focal_loss_gradient(double logit, int y, const FocalLossConfig& cfg) {
    double p = clamp_probability(sigmoid(logit));
    if (y == 1) {
        // d/dz [-a (1-p)^g log p] = a (1-p)^g (g p log p - (1-p))
        return cfg.alpha * std::pow(1.0 - p, cfg.gamma) *
               (cfg.gamma * p * std::log(p) - (1.0 - p));
    }
    return (1.0 - cfg.alpha) * std::pow(p, cfg.gamma) *
           (p - cfg.gamma * (1.0 - p) * std::log(1.0 - p));
}

double LinearClassifier::logit(const FeatureVector& x) const {
    if (n_classes != 2) throw std::runtime_error("backbone: logit() is binary-only");
    double z = bias.empty() ? 0.0 : bias[0];
    for (const auto& [b, v] : x.entries) {
        if (b >= dim) throw std::runtime_error("backbone: feature dimension mismatch");
        z += static_cast<double>(weights[b]) * v;
    }
    return z;
}

double LinearClassifier::score_binary(const FeatureVector& x) const {
    return sigmoid(logit(x));
}

std::vector<double> LinearClassifier::score_multi(const FeatureVector& x) const {
    const std::uint32_t r = rows();
    std::vector<double> z(r);
    for (std::uint32_t c = 0; c < r; ++c) {
        double acc = bias[c];
        const float* row = weights.data() + static_cast<std::size_t>(c) * dim;
        for (const auto& [b, v] : x.entries) {
            if (b >= dim) throw std::runtime_error("backbone: feature dimension mismatch");
            acc += static_cast<double>(row[b]) * v;
        }
        z[c] = acc;
    }
    double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return z;
}

namespace {

// Accumulates one mini-batch gradient into a dense scratch buffer, tracking
// touched buckets so clearing stays O(active features).
struct GradientScratch {
    std::vector<double> grad;
    std::vector<std::size_t> touched;

    explicit GradientScratch(std::size_t size) : grad(size, 0.0) {}

    void add(std::size_t index, double value) {
        if (grad[index] == 0.0) touched.push_back(index);
        grad[index] += value;
    }

    template <typename Apply>
    void flush(Apply&& apply) {
        for (std::size_t index : touched) {
            apply(index, grad[index]);
            grad[index] = 0.0;
        }
        touched.clear();
    }
};

} // namespace

TrainResult train_linear(std::span<const TrainExample> train, std::uint32_t dim,
                         std::uint32_t n_classes, const TrainOptions& options,
                         const std::function<double(const LinearClassifier&)>& validate) {
    if (train.empty()) throw std::runtime_error("backbone: empty training set");
    if (n_classes < 2) throw std::runtime_error("backbone: need at least 2 classes");
    if (n_classes == 2) {
        bool has0 = false, has1 = false;
        for (const TrainExample& ex : train) (ex.label == 1 ? has1 : has0) = true;
        if (!has0 || !has1)
            throw std::runtime_error("backbone: binary training set has a single class");
    }

    LinearClassifier model;
    model.dim = dim;
    model.n_classes = n_classes;
    model.weights.assign(static_cast<std::size_t>(model.rows()) * dim, 0.0f);
    model.bias.assign(model.rows(), 0.0f);

    TrainResult result;
    result.best_metric = std::numeric_limits<double>::quiet_NaN();
    LinearClassifier best = model;
    bool have_best = false;
    int bad_checks = 0;
    bool stop = false;

    Rng rng(options.seed);
    std::vector<std::uint32_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);

    const std::uint32_t rows = model.rows();
    GradientScratch scratch(static_cast<std::size_t>(rows) * dim);
    std::vector<double> bias_grad(rows, 0.0);

    auto run_batch = [&](std::span<const std::uint32_t> batch) {
        std::fill(bias_grad.begin(), bias_grad.end(), 0.0);
        for (std::uint32_t idx : batch) {
            const TrainExample& ex = train[idx];
            if (n_classes == 2) {
                double g = focal_loss_gradient(model.logit(ex.x), static_cast<int>(ex.label),
                                               options.loss) *
                           ex.weight;
                for (const auto& [b, v] : ex.x.entries) scratch.add(b, g * v);
                bias_grad[0] += g;
            } else {
                std::vector<double> q = model.score_multi(ex.x);
                double p_t = clamp_probability(q[ex.label]);
                // dL/dp_t of the focal term, then chain through softmax.
                double dldp = -ex.weight *
                              (-options.loss.gamma *
                                   std::pow(1.0 - p_t, options.loss.gamma - 1.0) *
                                   std::log(p_t) +
                               std::pow(1.0 - p_t, options.loss.gamma) / p_t);
                for (std::uint32_t c = 0; c < rows; ++c) {
                    double indicator = (c == ex.label) ? 1.0 : 0.0;
                    double g = dldp * p_t * (indicator - q[c]);
                    if (g == 0.0) continue;
                    const std::size_t base = static_cast<std::size_t>(c) * dim;
                    for (const auto& [b, v] : ex.x.entries) scratch.add(base + b, g * v);
                    bias_grad[c] += g;
                }
            }
        }
        // Summed batch gradient: per-example-scale steps, so sparse text
        // features converge within the first epochs and the per-epoch
        // stopping checks see a trained model rather than the zero init.
        const double scale = options.learning_rate;
        scratch.flush([&](std::size_t index, double g) {
            model.weights[index] = static_cast<float>(model.weights[index] - scale * g);
        });
        for (std::uint32_t c = 0; c < rows; ++c)
            model.bias[c] = static_cast<float>(model.bias[c] - scale * bias_grad[c]);
        ++result.steps_run;
    };

    auto check = [&]() {
        if (!validate) return;
        double metric = validate(model);
        if (!std::isnan(metric) && (!have_best || metric > result.best_metric)) {
            result.best_metric = metric;
            best = model;
            have_best = true;
            bad_checks = 0;
        } else {
            ++bad_checks;
        }
        if (options.stop_at && !std::isnan(metric) && metric >= *options.stop_at) {
            result.reached_target = true;
            stop = true;
        }
        if (options.patience > 0 && bad_checks >= options.patience) stop = true;
    };

    if (options.fixed_steps > 0) {
        std::size_t cursor = order.size(); // trigger reshuffle on first use
        std::vector<std::uint32_t> batch;
        for (int step = 0; step < options.fixed_steps && !stop; ++step) {
            batch.clear();
            for (std::uint32_t i = 0; i < options.batch_size; ++i) {
                if (cursor == order.size()) {
                    rng.shuffle(order);
                    cursor = 0;
                }
                batch.push_back(order[cursor++]);
            }
            run_batch(batch);
            if ((step + 1) % options.check_every == 0) check();
        }
        if (result.steps_run % options.check_every != 0) check();
    } else {
        for (int epoch = 0; epoch < options.max_epochs && !stop; ++epoch) {
            rng.shuffle(order);
            for (std::size_t off = 0; off < order.size() && !stop; off += options.batch_size) {
                std::size_t len = std::min<std::size_t>(options.batch_size, order.size() - off);
                run_batch(std::span<const std::uint32_t>(order.data() + off, len));
            }
            ++result.epochs_run;
            check();
        }
    }

    result.model = have_best ? std::move(best) : std::move(model);
    if (!have_best) result.best_metric = std::numeric_limits<double>::quiet_NaN();
    return result;
}

} // namespace fame
