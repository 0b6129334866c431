#include "fame/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "fame/calibration.hpp"
#include "fame/inference.hpp"

namespace fame {

namespace {

[[noreturn]] void rethrow_tagged(const char* stage, const std::exception& e) {
    throw std::runtime_error(std::string("setup[") + stage + "]: " + e.what());
}

} // namespace

SetupOutputs run_setup(Corpus& corpus, const PipelineConfig& config,
                       const std::optional<ProposedPartition>& imported) {
    config.validate();
    SetupOutputs out;
    nlohmann::json& report = out.report;
    report["config_hash"] = config.hash();
    report["seed"] = config.seed;

    // Split + parse.
    TemplateTable table(config.drain);
    try {
        out.split = split_chronological(corpus, config.offline_fraction);
        table = parse_corpus(corpus, 0, out.split.offline_end, config.drain);
    } catch (const std::exception& e) {
        rethrow_tagged("parse", e);
    }
    report["corpus"] = {{"lines", corpus.size()},
                        {"offline", out.split.offline_count()},
                        {"test", out.split.test_count()},
                        {"templates", table.size()}};

    // K-shot sample + PU pool.
    try {
        out.sample = sample_kshot(corpus, out.split.offline_end, config.k);
        out.pool = build_pu_pool(corpus, out.split.offline_end, out.sample);
    } catch (const std::exception& e) {
        rethrow_tagged("sample", e);
    }
    report["kshot"] = {{"k", config.k},
                       {"labels", out.sample.total_labels()},
                       {"pool", out.pool.ordinals.size()}};

    // Partition: imported proposal or built-in TF-IDF grouping, then certify.
    CertifiedPartition partition;
    try {
        ProposedPartition proposal;
        if (config.partition_mode == "import" || imported) {
            if (imported) {
                proposal = *imported;
            } else {
                if (config.partition_import_path.empty())
                    throw std::runtime_error("partition import path not set");
                std::ifstream in(config.partition_import_path, std::ios::binary);
                if (!in)
                    throw std::runtime_error("cannot open partition file " +
                                             config.partition_import_path);
                proposal = import_partition(nlohmann::json::parse(in), table);
            }
        } else {
            proposal = tfidf_grouping(table, out.sample,
                                      TfIdfGroupingConfig{config.cosine_link_threshold});
        }
        CertificationConfig cert;
        cert.distinctness_threshold = config.distinctness_threshold;
        cert.pool_sample = config.certification_pool_sample;
        cert.seed = config.stage_seed("certify");
        partition = certify(proposal, table, out.sample, out.pool, corpus, cert);
    } catch (const std::exception& e) {
        rethrow_tagged("partition", e);
    }
    {
        nlohmann::json domains = nlohmann::json::array();
        std::map<std::uint32_t, std::size_t> event_counts;
        for (const auto& [event, d] : partition.pi) ++event_counts[d];
        for (std::uint32_t d = 0; d < partition.domain_names.size(); ++d)
            domains.push_back({{"name", partition.domain_names[d]},
                               {"type", std::string(to_string(partition.rho[d]))},
                               {"event_ids", event_counts[d]}});
        report["partition"] = std::move(domains);
    }

    // Phase 1: shared backbone adaptation on the universal PU pool.
    BackboneState backbone;
    try {
        std::vector<std::string_view> pool_lines;
        pool_lines.reserve(out.pool.ordinals.size());
        for (std::uint64_t ord : out.pool.ordinals) {
            const auto& event = corpus[ord].event_id;
            if (event && partition.is_universal(partition.domain_of(*event)))
                pool_lines.push_back(corpus[ord].raw);
        }
        backbone = adapt_unsupervised(pool_lines, config.phase1_cap, config.features,
                                      config.stage_seed("phase1"));
        report["phase1"] = {{"pool_lines", pool_lines.size()},
                            {"used", std::min(config.phase1_cap, pool_lines.size())}};
    } catch (const std::exception& e) {
        rethrow_tagged("phase1", e);
    }

    // Gate.
    GateModel gate;
    try {
        RouterDataset dataset =
            build_gate_dataset(corpus, out.split.offline_end, partition, config.features,
                               config.gate_subsample_ratio, config.stage_seed("gate_subsample"));
        GateTrainConfig gate_cfg;
        gate_cfg.subsample_ratio = config.gate_subsample_ratio;
        gate_cfg.recall_target = config.gate_recall_target;
        gate_cfg.loss = config.loss;
        gate_cfg.learning_rate = config.learning_rate;
        gate_cfg.batch_size = config.batch_size;
        gate_cfg.max_epochs = config.max_epochs;
        gate_cfg.seed = config.stage_seed("gate_train");
        gate = train_gate(dataset, gate_cfg);
        report["gate"] = {{"expert_lines", dataset.n_expert_lines},
                          {"universal_lines", dataset.n_universal_lines},
                          {"validation_recall", gate.validation_recall},
                          {"recall_target_reached", gate.recall_target_reached},
                          {"epochs", gate.epochs_run}};
    } catch (const std::exception& e) {
        rethrow_tagged("gate", e);
    }

    // Selector.
    SelectorModel selector;
    try {
        SelectorTrainConfig sel_cfg;
        sel_cfg.accuracy_target = config.selector_accuracy_target;
        sel_cfg.patience = config.selector_patience;
        sel_cfg.loss = config.loss;
        sel_cfg.learning_rate = config.learning_rate;
        sel_cfg.batch_size = config.batch_size;
        sel_cfg.max_epochs = config.max_epochs;
        sel_cfg.seed = config.stage_seed("selector_train");
        selector = train_selector(corpus, out.split.offline_end, partition, config.features,
                                  sel_cfg);
        report["selector"] = {{"classes", selector.n_classes()},
                              {"constant", selector.constant},
                              {"validation_accuracy", selector.validation_accuracy},
                              {"accuracy_target_reached", selector.accuracy_target_reached},
                              {"epochs", selector.epochs_run}};
    } catch (const std::exception& e) {
        rethrow_tagged("selector", e);
    }

    // Experts: universal always, plus one per mixed domain.
    std::vector<ExpertModel> experts(partition.domain_names.size());
    for (std::uint32_t d = 0; d < experts.size(); ++d) experts[d].domain = d;
    nlohmann::json expert_report = nlohmann::json::array();
    try {
        ExpertTrainConfig expert_cfg;
        expert_cfg.small_dataset_limit = config.expert_small_dataset_limit;
        expert_cfg.fixed_steps = config.expert_fixed_steps;
        expert_cfg.check_every = config.expert_check_every;
        expert_cfg.patience = config.expert_patience;
        expert_cfg.loss = config.loss;
        expert_cfg.learning_rate = config.learning_rate;
        expert_cfg.batch_size = config.batch_size;
        expert_cfg.max_epochs = config.max_epochs;
        for (std::uint32_t d = 0; d < partition.domain_names.size(); ++d) {
            if (partition.rho[d] == DomainType::pure_anomaly) continue;
            double cap = partition.rho[d] == DomainType::universal
                             ? config.universal_negative_cap
                             : config.expert_negative_cap;
            ExpertDataset dataset = build_expert_dataset(
                d, corpus, out.sample, out.pool, partition, backbone, cap,
                config.stage_seed("expert_sample_" + partition.domain_names[d]));
            expert_cfg.seed = config.stage_seed("expert_train_" + partition.domain_names[d]);
            experts[d] = train_expert(d, dataset, expert_cfg);
            expert_report.push_back({{"domain", partition.domain_names[d]},
                                     {"positives", dataset.n_pos},
                                     {"negatives", dataset.n_neg},
                                     {"step_regime", experts[d].step_regime},
                                     {"steps", experts[d].steps_run},
                                     {"validation_auroc", experts[d].validation_auroc}});
        }
    } catch (const std::exception& e) {
        rethrow_tagged("experts", e);
    }
    report["experts"] = std::move(expert_report);

    // Calibration: per-mixed-domain thresholds, then the fused universal pair.
    CalibrationResult calibration;
    try {
        CalibrationConfig cal_cfg{config.recall_floor, config.percentile_candidates};
        for (std::uint32_t d = 0; d < partition.domain_names.size(); ++d) {
            if (partition.rho[d] != DomainType::mixed) continue;
            std::vector<double> scores;
            std::vector<int> labels;
            for (const auto& [event, es] : out.sample.per_event) {
                if (partition.domain_of(event) != d) continue;
                for (std::uint64_t ord : es.calib_ordinals) {
                    scores.push_back(
                        score_line(experts[d], backbone.transform(corpus[ord].raw)));
                    labels.push_back(corpus[ord].label == Label::anomaly ? 1 : 0);
                }
            }
            calibration.tau[d] = calibrate_threshold(scores, labels, cal_cfg);
        }

        // Universal: calibration lines the gate actually routes there.
        std::vector<double> s_u, g;
        std::vector<int> labels;
        for (const auto& [event, es] : out.sample.per_event) {
            for (std::uint64_t ord : es.calib_ordinals) {
                FeatureVector plain = featurize(corpus[ord].raw, config.features);
                double gate_score = gate.classifier.score_binary(plain);
                if (gate_score >= gate.threshold) continue;
                s_u.push_back(score_line(experts[partition.universal_index],
                                         backbone.transform(corpus[ord].raw)));
                g.push_back(gate_score);
                labels.push_back(corpus[ord].label == Label::anomaly ? 1 : 0);
            }
        }
        UniversalCalibration uni =
            calibrate_universal(s_u, g, labels, config.fusion_grid, cal_cfg);
        calibration.fusion_weight = uni.w;
        calibration.tau_universal = uni.threshold.tau;
        calibration.universal_degenerate = uni.threshold.degenerate;
        report["calibration"] = {{"universal_w", uni.w},
                                 {"universal_tau", uni.threshold.tau},
                                 {"universal_degenerate", uni.threshold.degenerate},
                                 {"universal_lines", labels.size()}};
    } catch (const std::exception& e) {
        rethrow_tagged("calibrate", e);
    }

    out.bundle.partition = std::move(partition);
    out.bundle.templates = std::move(table);
    out.bundle.backbone = std::move(backbone);
    out.bundle.gate = std::move(gate);
    out.bundle.selector = std::move(selector);
    out.bundle.experts = std::move(experts);
    out.bundle.calibration = std::move(calibration);
    out.bundle.root_seed = config.seed;
    out.bundle.config_hash = config.hash();
    out.bundle.diagnostics = report;
    out.bundle.validate();
    return out;
}

nlohmann::json SweepSummary::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    std::map<std::size_t, std::vector<double>> f1_by_k;
    for (const SweepCell& cell : cells) {
        rows.push_back({{"k", cell.k},
                        {"seed", cell.seed},
                        {"labels", cell.labels_used},
                        {"reduction", cell.reduction},
                        {"metrics", cell.pipeline.to_json()}});
        if (cell.pipeline.f1) f1_by_k[cell.k].push_back(*cell.pipeline.f1);
    }
    nlohmann::json aggregate = nlohmann::json::array();
    for (const auto& [k, values] : f1_by_k) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        nlohmann::json row{{"k", k}, {"f1_mean", mean}};
        if (values.size() >= 2) {
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            var /= static_cast<double>(values.size() - 1);
            row["f1_std"] = std::sqrt(var);
        }
        aggregate.push_back(std::move(row));
    }
    return nlohmann::json{{"cells", std::move(rows)}, {"aggregate", std::move(aggregate)}};
}

SweepSummary k_sweep(const Corpus& corpus, const PipelineConfig& base,
                     const std::vector<std::size_t>& k_grid,
                     const std::vector<std::uint64_t>& seeds) {
    if (k_grid.empty()) throw std::runtime_error("sweep: empty k grid");
    if (seeds.empty()) throw std::runtime_error("sweep: empty seed list");
    SweepSummary summary;
    for (std::size_t k : k_grid) {
        for (std::uint64_t seed : seeds) {
            PipelineConfig config = base;
            config.k = k;
            config.seed = seed;
            Corpus working = corpus;
            SetupOutputs setup = run_setup(working, config);
            EvalOutcome outcome = evaluate_bundle(setup.bundle, working, setup.split);
            SweepCell cell;
            cell.k = k;
            cell.seed = seed;
            cell.pipeline = std::move(outcome.pipeline);
            cell.labels_used = setup.sample.total_labels();
            cell.reduction = cell.labels_used == 0
                                 ? 0
                                 : static_cast<std::uint64_t>(std::llround(
                                       static_cast<double>(setup.split.offline_count()) /
                                       static_cast<double>(cell.labels_used)));
            summary.cells.push_back(std::move(cell));
        }
    }
    return summary;
}

} // namespace fame
