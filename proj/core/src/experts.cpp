#include "fame/experts.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "fame/metrics.hpp"
#include "fame/rng.hpp"

namespace fame {

ExpertDataset build_expert_dataset(std::uint32_t domain, const Corpus& corpus,
                                   const KShotSample& sample, const PuNormalPool& pool,
                                   const CertifiedPartition& partition,
                                   const BackboneState& backbone, double negative_cap,
                                   std::uint64_t seed) {
    const bool universal = partition.is_universal(domain);

    std::vector<std::uint64_t> positives;
    for (const auto& [event, es] : sample.per_event) {
        std::uint32_t event_domain = partition.domain_of(event);
        // The universal expert doubles as the fallback detector, so its
        // anomaly set spans every domain.
        if (!universal && event_domain != domain) continue;
        for (std::uint64_t ord : es.train_ordinals)
            if (corpus[ord].label == Label::anomaly) positives.push_back(ord);
    }
    std::sort(positives.begin(), positives.end());
    if (positives.empty())
        throw std::runtime_error(
            "experts: no anomaly training lines for domain '" +
            partition.domain_names[domain] +
            "' despite certification; sample and partition disagree");

    // Negative pool: universal-event lines, plus the domain's own PU lines for
    // mixed experts. Without the latter a mixed template's normal instances
    // never appear as negatives and the within-template boundary is
    // unlearnable.
    std::vector<std::uint64_t> negative_pool;
    negative_pool.reserve(pool.ordinals.size());
    for (std::uint64_t ord : pool.ordinals) {
        const auto& event = corpus[ord].event_id;
        if (!event) continue;
        std::uint32_t event_domain = partition.domain_of(*event);
        if (partition.is_universal(event_domain) || (!universal && event_domain == domain))
            negative_pool.push_back(ord);
    }

    const std::size_t cap = static_cast<std::size_t>(
        negative_cap * static_cast<double>(positives.size()));
    std::vector<std::uint64_t> negatives;
    if (negative_pool.size() > cap) {
        Rng rng(seed);
        std::vector<std::size_t> chosen = rng.sample_indices(negative_pool.size(), cap);
        std::sort(chosen.begin(), chosen.end());
        negatives.reserve(cap);
        for (std::size_t idx : chosen) negatives.push_back(negative_pool[idx]);
    } else {
        negatives = std::move(negative_pool);
    }

    ExpertDataset dataset;
    dataset.feature_dim = backbone.featurizer.dim;
    dataset.n_pos = positives.size();
    dataset.n_neg = negatives.size();
    dataset.lines.reserve(positives.size() + negatives.size());

    std::size_t pi = 0, ni = 0;
    while (pi < positives.size() || ni < negatives.size()) {
        bool take_pos = ni == negatives.size() ||
                        (pi < positives.size() && positives[pi] < negatives[ni]);
        std::uint64_t ord = take_pos ? positives[pi++] : negatives[ni++];
        dataset.lines.push_back(TrainExample{backbone.transform(corpus[ord].raw),
                                             take_pos ? 1u : 0u, 1.0f, ord});
    }
    return dataset;
}

ExpertModel train_expert(std::uint32_t domain, const ExpertDataset& dataset,
                         const ExpertTrainConfig& config) {
    if (dataset.n_pos == 0 || dataset.n_neg == 0)
        throw std::runtime_error("experts: single-class dataset for domain " +
                                 std::to_string(domain));

    // AUROC validation slice: the last 10% of each class by ordinal. A single
    // global tail frequently holds only negatives (anomalies are K-shot lines
    // that stop before the stream's end), which leaves AUROC undefined.
    const std::size_t n = dataset.lines.size();
    std::vector<TrainExample> train;
    std::vector<TrainExample> validation;
    train.reserve(n);
    for (std::uint32_t cls = 0; cls < 2; ++cls) {
        std::vector<const TrainExample*> of_class;
        for (const TrainExample& ex : dataset.lines)
            if (ex.label == cls) of_class.push_back(&ex);
        std::size_t n_val = of_class.size() / 10;
        if (n_val == 0 && of_class.size() >= 2) n_val = 1;
        for (std::size_t i = 0; i < of_class.size(); ++i) {
            if (i + n_val >= of_class.size())
                validation.push_back(*of_class[i]);
            else
                train.push_back(*of_class[i]);
        }
    }
    auto by_ordinal = [](const TrainExample& a, const TrainExample& b) {
        return a.ordinal < b.ordinal;
    };
    std::sort(train.begin(), train.end(), by_ordinal);
    std::sort(validation.begin(), validation.end(), by_ordinal);

    auto validate = [&](const LinearClassifier& model) {
        std::vector<double> scores;
        std::vector<int> labels;
        scores.reserve(validation.size());
        labels.reserve(validation.size());
        for (const TrainExample& ex : validation) {
            scores.push_back(model.score_binary(ex.x));
            labels.push_back(static_cast<int>(ex.label));
        }
        auto value = auroc(scores, labels);
        return value ? *value : std::numeric_limits<double>::quiet_NaN();
    };

    TrainOptions options;
    options.loss = config.loss;
    options.learning_rate = config.learning_rate;
    options.batch_size = config.batch_size;
    options.seed = config.seed;

    ExpertModel expert;
    expert.domain = domain;
    expert.step_regime = n < config.small_dataset_limit;
    if (expert.step_regime) {
        options.fixed_steps = config.fixed_steps;
        options.check_every = config.check_every;
    } else {
        options.max_epochs = config.max_epochs;
        options.patience = config.patience;
    }

    // The training slice can lose a class to the validation split even though
    // the dataset holds both; train_linear rejects that case.
    TrainResult result = train_linear(train, dataset.feature_dim, 2, options, validate);
    expert.trained = true;
    expert.classifier = std::move(result.model);
    expert.validation_auroc = result.best_metric;
    expert.steps_run = result.steps_run;
    return expert;
}

double score_line(const ExpertModel& expert, const FeatureVector& x) {
    if (!expert.trained)
        throw std::runtime_error("experts: scoring an untrained (pure-anomaly) expert");
    return expert.classifier.score_binary(x);
}

} // namespace fame
