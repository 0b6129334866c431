#include "fame/router.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "fame/rng.hpp"

namespace fame {

namespace {

// Reserve the last `fraction` of each class (by position in a chronologically
// ordered list) as validation.
void split_tail(std::vector<TrainExample>& all, std::vector<TrainExample>& train,
                std::vector<TrainExample>& validation, std::uint32_t n_classes) {
    for (std::uint32_t cls = 0; cls < n_classes; ++cls) {
        std::vector<TrainExample> of_class;
        for (TrainExample& ex : all)
            if (ex.label == cls) of_class.push_back(std::move(ex));
        std::size_t n_val = of_class.size() / 10;
        for (std::size_t i = 0; i < of_class.size(); ++i) {
            if (i + n_val >= of_class.size())
                validation.push_back(std::move(of_class[i]));
            else
                train.push_back(std::move(of_class[i]));
        }
    }
    all.clear();
}

double recall_at(const LinearClassifier& model, std::span<const TrainExample> validation,
                 double threshold) {
    std::uint64_t tp = 0, fn = 0;
    for (const TrainExample& ex : validation) {
        if (ex.label != 1) continue;
        (model.score_binary(ex.x) >= threshold ? tp : fn) += 1;
    }
    if (tp + fn == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double accuracy_of(const LinearClassifier& model, std::span<const TrainExample> validation) {
    if (validation.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::uint64_t hit = 0;
    for (const TrainExample& ex : validation) {
        std::size_t arg;
        if (model.n_classes == 2) {
            arg = model.score_binary(ex.x) >= 0.5 ? 1 : 0;
        } else {
            std::vector<double> dist = model.score_multi(ex.x);
            arg = 0;
            for (std::size_t c = 1; c < dist.size(); ++c)
                if (dist[c] > dist[arg]) arg = c;
        }
        hit += (arg == ex.label);
    }
    return static_cast<double>(hit) / static_cast<double>(validation.size());
}

} // namespace

std::vector<double> SelectorModel::distribution(const FeatureVector& x) const {
    if (constant) return std::vector<double>{1.0};
    if (!classifier) throw std::runtime_error("router: selector has no classifier");
    // Two expert domains train as a binary model; expand to a 2-class
    // distribution so routing sees one shape everywhere.
    if (classifier->n_classes == 2) {
        double p = classifier->score_binary(x);
        return {1.0 - p, p};
    }
    return classifier->score_multi(x);
}

RouterDataset build_gate_dataset(const Corpus& corpus, std::size_t offline_end,
                                 const CertifiedPartition& partition,
                                 const FeaturizerConfig& features,
                                 double subsample_ratio, std::uint64_t seed) {
    std::vector<std::uint64_t> expert_lines;
    std::vector<std::uint64_t> universal_lines;
    for (std::size_t i = 0; i < offline_end && i < corpus.size(); ++i) {
        const LogRecord& rec = corpus[i];
        if (!rec.event_id) throw std::runtime_error("router: offline record without event_id");
        if (partition.is_universal(partition.domain_of(*rec.event_id)))
            universal_lines.push_back(rec.ordinal);
        else
            expert_lines.push_back(rec.ordinal);
    }
    if (expert_lines.empty())
        throw std::runtime_error("router: no expert-domain lines (no domains certified)");

    const std::size_t cap = static_cast<std::size_t>(
        subsample_ratio * static_cast<double>(expert_lines.size()));
    if (universal_lines.size() > cap) {
        Rng rng(seed);
        std::vector<std::size_t> chosen = rng.sample_indices(universal_lines.size(), cap);
        std::sort(chosen.begin(), chosen.end());
        std::vector<std::uint64_t> kept;
        kept.reserve(cap);
        for (std::size_t idx : chosen) kept.push_back(universal_lines[idx]);
        universal_lines = std::move(kept);
    }

    RouterDataset dataset;
    dataset.feature_dim = features.dim;
    dataset.n_expert_lines = expert_lines.size();
    dataset.n_universal_lines = universal_lines.size();

    std::vector<TrainExample> all;
    all.reserve(expert_lines.size() + universal_lines.size());
    for (std::uint64_t ord : expert_lines)
        all.push_back(TrainExample{featurize(corpus[ord].raw, features), 1, 1.0f, ord});
    for (std::uint64_t ord : universal_lines)
        all.push_back(TrainExample{featurize(corpus[ord].raw, features), 0, 1.0f, ord});
    split_tail(all, dataset.train, dataset.validation, 2);
    return dataset;
}

GateModel train_gate(const RouterDataset& dataset, const GateTrainConfig& config) {
    bool val_has_positive =
        std::any_of(dataset.validation.begin(), dataset.validation.end(),
                    [](const TrainExample& ex) { return ex.label == 1; });
    if (!val_has_positive)
        throw std::runtime_error("router: gate validation split has no expert lines");

    TrainOptions options;
    options.loss = config.loss;
    options.learning_rate = config.learning_rate;
    options.batch_size = config.batch_size;
    options.max_epochs = config.max_epochs;
    options.seed = config.seed;
    options.stop_at = config.recall_target;

    GateModel gate;
    TrainResult result = train_linear(
        dataset.train, dataset.feature_dim, 2, options, [&](const LinearClassifier& m) {
            return recall_at(m, dataset.validation, 0.5);
        });
    gate.classifier = std::move(result.model);
    gate.validation_recall = result.best_metric;
    gate.recall_target_reached = result.reached_target;
    gate.epochs_run = result.epochs_run;
    return gate;
}

std::vector<double> class_weights(const std::vector<std::size_t>& counts) {
    if (counts.empty()) throw std::runtime_error("router: no classes for Eq. 1 weights");
    std::size_t total = 0;
    for (std::size_t c : counts) {
        if (c == 0)
            throw std::runtime_error("router: zero-count domain; should have been dissolved");
        total += c;
    }
    std::vector<double> weights(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        weights[i] = static_cast<double>(total) /
                     (static_cast<double>(counts.size()) * static_cast<double>(counts[i]));
    return weights;
}

SelectorModel train_selector(const Corpus& corpus, std::size_t offline_end,
                             const CertifiedPartition& partition,
                             const FeaturizerConfig& features,
                             const SelectorTrainConfig& config) {
    SelectorModel selector;
    selector.class_to_domain = partition.expert_domains();
    if (selector.class_to_domain.empty()) return selector; // omitted from the bundle

    std::map<std::uint32_t, std::uint32_t> domain_to_class;
    for (std::uint32_t cls = 0; cls < selector.class_to_domain.size(); ++cls)
        domain_to_class[selector.class_to_domain[cls]] = cls;

    if (selector.class_to_domain.size() == 1) {
        selector.constant = true;
        selector.class_weights = {1.0};
        return selector;
    }

    std::vector<TrainExample> all;
    for (std::size_t i = 0; i < offline_end && i < corpus.size(); ++i) {
        const LogRecord& rec = corpus[i];
        std::uint32_t domain = partition.domain_of(*rec.event_id);
        if (partition.is_universal(domain)) continue;
        all.push_back(TrainExample{featurize(rec.raw, features), domain_to_class[domain], 1.0f,
                                   rec.ordinal});
    }

    const std::uint32_t n_classes = static_cast<std::uint32_t>(selector.class_to_domain.size());
    std::vector<TrainExample> train, validation;
    split_tail(all, train, validation, n_classes);

    std::vector<std::size_t> counts(n_classes, 0);
    for (const TrainExample& ex : train) ++counts[ex.label];
    for (std::size_t c : counts)
        if (c == 0)
            throw std::runtime_error(
                "router: selector training class with zero lines; certification should "
                "have dissolved it");
    selector.class_weights = class_weights(counts);
    for (TrainExample& ex : train)
        ex.weight = static_cast<float>(selector.class_weights[ex.label]);

    TrainOptions options;
    options.loss = config.loss;
    options.learning_rate = config.learning_rate;
    options.batch_size = config.batch_size;
    options.max_epochs = config.max_epochs;
    options.seed = config.seed;
    options.stop_at = config.accuracy_target;
    options.patience = config.patience;

    TrainResult result = train_linear(train, features.dim, n_classes, options,
                                      [&](const LinearClassifier& m) {
                                          return accuracy_of(m, validation);
                                      });
    selector.classifier = std::move(result.model);
    selector.validation_accuracy = result.best_metric;
    selector.accuracy_target_reached = result.reached_target;
    selector.epochs_run = result.epochs_run;
    return selector;
}

std::uint32_t route(const GateModel& gate, const SelectorModel& selector,
                    const CertifiedPartition& partition, const FeatureVector& x) {
    if (gate.classifier.score_binary(x) < gate.threshold) return partition.universal_index;
    if (selector.class_to_domain.empty()) return partition.universal_index;
    std::vector<double> dist = selector.distribution(x);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < dist.size(); ++c)
        if (dist[c] > dist[arg]) arg = c;
    return selector.class_to_domain[arg];
}

} // namespace fame
