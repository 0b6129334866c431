#include "fame/config.hpp"

#include <fstream>
#include <stdexcept>

namespace fame {

nlohmann::json PipelineConfig::to_json() const {
    return nlohmann::json{
        {"dataset", {{"path", dataset_path}, {"format", std::string(to_string(dataset_format))}}},
        {"offline_fraction", offline_fraction},
        {"k", k},
        {"seed", seed},
        {"drain",
         {{"similarity_threshold", drain.similarity_threshold},
          {"tree_depth", drain.tree_depth},
          {"max_children", drain.max_children}}},
        {"backbone",
         {{"dim", features.dim}, {"feature_seed", features.seed}, {"phase1_cap", phase1_cap}}},
        {"training",
         {{"focal_gamma", loss.gamma},
          {"focal_alpha", loss.alpha},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs}}},
        {"router",
         {{"gate_subsample_ratio", gate_subsample_ratio},
          {"gate_recall_target", gate_recall_target},
          {"selector_accuracy_target", selector_accuracy_target},
          {"selector_patience", selector_patience}}},
        {"experts",
         {{"small_dataset_limit", expert_small_dataset_limit},
          {"fixed_steps", expert_fixed_steps},
          {"check_every", expert_check_every},
          {"patience", expert_patience},
          {"negative_cap", expert_negative_cap},
          {"universal_negative_cap", universal_negative_cap}}},
        {"partition",
         {{"mode", partition_mode},
          {"import_path", partition_import_path},
          {"cosine_link_threshold", cosine_link_threshold},
          {"distinctness_threshold", distinctness_threshold},
          {"certification_pool_sample", certification_pool_sample}}},
        {"calibration",
         {{"recall_floor", recall_floor},
          {"percentile_candidates", percentile_candidates},
          {"fusion_grid", fusion_grid}}},
        {"output_dir", output_dir}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& doc) {
    PipelineConfig cfg;
    if (doc.contains("dataset")) {
        const auto& d = doc["dataset"];
        cfg.dataset_path = d.value("path", cfg.dataset_path);
        if (d.contains("format")) {
            auto format = corpus_format_from_string(d["format"].get<std::string>());
            if (!format)
                throw std::runtime_error("config: unknown dataset format " +
                                         d["format"].get<std::string>());
            cfg.dataset_format = *format;
        }
    }
    cfg.offline_fraction = doc.value("offline_fraction", cfg.offline_fraction);
    cfg.k = doc.value("k", cfg.k);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("drain")) {
        const auto& d = doc["drain"];
        cfg.drain.similarity_threshold =
            d.value("similarity_threshold", cfg.drain.similarity_threshold);
        cfg.drain.tree_depth = d.value("tree_depth", cfg.drain.tree_depth);
        cfg.drain.max_children = d.value("max_children", cfg.drain.max_children);
    }
    if (doc.contains("backbone")) {
        const auto& d = doc["backbone"];
        cfg.features.dim = d.value("dim", cfg.features.dim);
        cfg.features.seed = d.value("feature_seed", cfg.features.seed);
        cfg.phase1_cap = d.value("phase1_cap", cfg.phase1_cap);
    }
    if (doc.contains("training")) {
        const auto& d = doc["training"];
        cfg.loss.gamma = d.value("focal_gamma", cfg.loss.gamma);
        cfg.loss.alpha = d.value("focal_alpha", cfg.loss.alpha);
        cfg.learning_rate = d.value("learning_rate", cfg.learning_rate);
        cfg.batch_size = d.value("batch_size", cfg.batch_size);
        cfg.max_epochs = d.value("max_epochs", cfg.max_epochs);
    }
    if (doc.contains("router")) {
        const auto& d = doc["router"];
        cfg.gate_subsample_ratio = d.value("gate_subsample_ratio", cfg.gate_subsample_ratio);
        cfg.gate_recall_target = d.value("gate_recall_target", cfg.gate_recall_target);
        cfg.selector_accuracy_target =
            d.value("selector_accuracy_target", cfg.selector_accuracy_target);
        cfg.selector_patience = d.value("selector_patience", cfg.selector_patience);
    }
    if (doc.contains("experts")) {
        const auto& d = doc["experts"];
        cfg.expert_small_dataset_limit =
            d.value("small_dataset_limit", cfg.expert_small_dataset_limit);
        cfg.expert_fixed_steps = d.value("fixed_steps", cfg.expert_fixed_steps);
        cfg.expert_check_every = d.value("check_every", cfg.expert_check_every);
        cfg.expert_patience = d.value("patience", cfg.expert_patience);
        cfg.expert_negative_cap = d.value("negative_cap", cfg.expert_negative_cap);
        cfg.universal_negative_cap =
            d.value("universal_negative_cap", cfg.universal_negative_cap);
    }
    if (doc.contains("partition")) {
        const auto& d = doc["partition"];
        cfg.partition_mode = d.value("mode", cfg.partition_mode);
        cfg.partition_import_path = d.value("import_path", cfg.partition_import_path);
        cfg.cosine_link_threshold = d.value("cosine_link_threshold", cfg.cosine_link_threshold);
        cfg.distinctness_threshold =
            d.value("distinctness_threshold", cfg.distinctness_threshold);
        cfg.certification_pool_sample =
            d.value("certification_pool_sample", cfg.certification_pool_sample);
    }
    if (doc.contains("calibration")) {
        const auto& d = doc["calibration"];
        cfg.recall_floor = d.value("recall_floor", cfg.recall_floor);
        cfg.percentile_candidates = d.value("percentile_candidates", cfg.percentile_candidates);
        if (d.contains("fusion_grid"))
            cfg.fusion_grid = d["fusion_grid"].get<std::vector<double>>();
    }
    cfg.output_dir = doc.value("output_dir", cfg.output_dir);
    cfg.validate();
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    return from_json(nlohmann::json::parse(in));
}

std::string PipelineConfig::hash() const {
    return event_id_to_hex(fnv1a64(to_json().dump()));
}

void PipelineConfig::validate() const {
    drain.validate();
    if (!(offline_fraction > 0.0 && offline_fraction < 1.0))
        throw std::runtime_error("config: offline_fraction must be in (0,1)");
    if (k == 0) throw std::runtime_error("config: k must be positive");
    if (partition_mode != "tfidf" && partition_mode != "import")
        throw std::runtime_error("config: partition mode must be tfidf or import");
    if (fusion_grid.empty()) throw std::runtime_error("config: fusion grid is empty");
}

} // namespace fame
