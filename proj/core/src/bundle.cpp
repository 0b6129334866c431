#include "fame/bundle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fame {

namespace {

static_assert(std::endian::native == std::endian::little,
              "bundle float arrays are little-endian on disk");

nlohmann::json classifier_meta(const LinearClassifier& clf, const std::string& file) {
    return nlohmann::json{{"file", file},
                          {"dim", clf.dim},
                          {"classes", clf.n_classes},
                          {"rows", clf.rows()}};
}

// Layout: rows x dim weights, then rows biases.
std::vector<float> classifier_blob(const LinearClassifier& clf) {
    std::vector<float> blob(clf.weights);
    blob.insert(blob.end(), clf.bias.begin(), clf.bias.end());
    return blob;
}

LinearClassifier classifier_from(const nlohmann::json& meta, const std::filesystem::path& dir) {
    LinearClassifier clf;
    clf.dim = meta.at("dim").get<std::uint32_t>();
    clf.n_classes = meta.at("classes").get<std::uint32_t>();
    const std::size_t rows = clf.rows();
    std::vector<float> blob = read_f32_array(dir / meta.at("file").get<std::string>(),
                                             rows * clf.dim + rows);
    clf.weights.assign(blob.begin(), blob.begin() + static_cast<std::ptrdiff_t>(rows * clf.dim));
    clf.bias.assign(blob.begin() + static_cast<std::ptrdiff_t>(rows * clf.dim), blob.end());
    return clf;
}

} // namespace

void write_f32_array(const std::filesystem::path& file, std::span<const float> values) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("bundle: cannot write " + file.string());
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (!out) throw std::runtime_error("bundle: short write to " + file.string());
}

std::vector<float> read_f32_array(const std::filesystem::path& file, std::size_t expected) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("bundle: cannot read " + file.string());
    std::vector<float> values(expected);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(expected * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(expected * sizeof(float)))
        throw std::runtime_error("bundle: " + file.string() + " is truncated");
    return values;
}

void ModelBundle::validate() const {
    if (experts.size() != partition.domain_names.size())
        throw std::runtime_error("bundle: expert slot per domain required");
    for (std::uint32_t d = 0; d < partition.domain_names.size(); ++d) {
        const bool pure = partition.rho[d] == DomainType::pure_anomaly;
        if (pure && experts[d].trained)
            throw std::runtime_error("bundle: pure-anomaly domain '" +
                                     partition.domain_names[d] + "' must not carry an expert");
        if (pure && calibration.tau.count(d))
            throw std::runtime_error("bundle: pure-anomaly domain '" +
                                     partition.domain_names[d] + "' must not carry a threshold");
        if (partition.rho[d] == DomainType::mixed &&
            (!experts[d].trained || !calibration.tau.count(d)))
            throw std::runtime_error("bundle: mixed domain '" + partition.domain_names[d] +
                                     "' needs both expert and threshold");
    }
    if (!experts[partition.universal_index].trained)
        throw std::runtime_error("bundle: universal expert must be trained");
}

void ModelBundle::save(const std::filesystem::path& dir) const {
    validate();
    std::filesystem::create_directories(dir);

    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["root_seed"] = root_seed;
    manifest["config_hash"] = config_hash;
    manifest["drain"] = {{"similarity_threshold", templates.config().similarity_threshold},
                         {"tree_depth", templates.config().tree_depth},
                         {"max_children", templates.config().max_children}};
    manifest["featurizer"] = {{"dim", backbone.featurizer.dim},
                              {"seed", backbone.featurizer.seed}};
    manifest["partition"] = partition.to_json();
    manifest["calibration"] = calibration.to_json(partition.domain_names);
    manifest["gate"] = classifier_meta(gate.classifier, "gate.f32");
    manifest["gate"]["threshold"] = gate.threshold;
    manifest["gate"]["recall_target_reached"] = gate.recall_target_reached;
    write_f32_array(dir / "gate.f32", classifier_blob(gate.classifier));

    if (backbone.adapted()) {
        manifest["backbone"] = {{"file", "backbone_idf.f32"}, {"dim", backbone.featurizer.dim}};
        write_f32_array(dir / "backbone_idf.f32", backbone.idf);
    } else {
        manifest["backbone"] = nullptr;
    }

    if (selector.classifier) {
        manifest["selector"] = classifier_meta(*selector.classifier, "selector.f32");
        manifest["selector"]["class_to_domain"] = selector.class_to_domain;
        manifest["selector"]["class_weights"] = selector.class_weights;
        write_f32_array(dir / "selector.f32", classifier_blob(*selector.classifier));
    } else if (selector.constant) {
        manifest["selector"] = {{"constant", true},
                                {"class_to_domain", selector.class_to_domain}};
    } else {
        manifest["selector"] = nullptr;
    }

    nlohmann::json expert_docs = nlohmann::json::array();
    for (std::uint32_t d = 0; d < experts.size(); ++d) {
        if (!experts[d].trained) {
            expert_docs.push_back(nullptr);
            continue;
        }
        std::string file = "expert_" + std::to_string(d) + ".f32";
        nlohmann::json doc = classifier_meta(experts[d].classifier, file);
        doc["domain"] = d;
        doc["validation_auroc"] = experts[d].validation_auroc;
        expert_docs.push_back(std::move(doc));
        write_f32_array(dir / file, classifier_blob(experts[d].classifier));
    }
    manifest["experts"] = std::move(expert_docs);
    manifest["diagnostics"] = diagnostics;

    {
        std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("bundle: cannot write manifest.json");
        out << manifest.dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "templates.json", std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("bundle: cannot write templates.json");
        out << templates.to_json().dump() << '\n';
    }
}

ModelBundle ModelBundle::load(const std::filesystem::path& dir) {
    std::ifstream manifest_in(dir / "manifest.json", std::ios::binary);
    if (!manifest_in)
        throw std::runtime_error("bundle: missing manifest.json in " + dir.string());
    nlohmann::json manifest = nlohmann::json::parse(manifest_in);

    ModelBundle bundle;
    bundle.root_seed = manifest.at("root_seed").get<std::uint64_t>();
    bundle.config_hash = manifest.at("config_hash").get<std::string>();
    bundle.partition = CertifiedPartition::from_json(manifest.at("partition"));
    bundle.diagnostics = manifest.value("diagnostics", nlohmann::json::object());

    DrainConfig drain_cfg;
    drain_cfg.similarity_threshold = manifest.at("drain").at("similarity_threshold").get<double>();
    drain_cfg.tree_depth = manifest.at("drain").at("tree_depth").get<int>();
    drain_cfg.max_children = manifest.at("drain").at("max_children").get<int>();
    {
        std::ifstream templates_in(dir / "templates.json", std::ios::binary);
        if (!templates_in)
            throw std::runtime_error("bundle: missing templates.json in " + dir.string());
        bundle.templates =
            TemplateTable::from_json(nlohmann::json::parse(templates_in), drain_cfg);
    }

    bundle.backbone.featurizer.dim = manifest.at("featurizer").at("dim").get<std::uint32_t>();
    bundle.backbone.featurizer.seed = manifest.at("featurizer").at("seed").get<std::uint64_t>();
    if (!manifest.at("backbone").is_null())
        bundle.backbone.idf = read_f32_array(
            dir / manifest.at("backbone").at("file").get<std::string>(),
            bundle.backbone.featurizer.dim);

    bundle.gate.classifier = classifier_from(manifest.at("gate"), dir);
    bundle.gate.threshold = manifest.at("gate").at("threshold").get<double>();
    bundle.gate.recall_target_reached =
        manifest.at("gate").at("recall_target_reached").get<bool>();

    const nlohmann::json& sel = manifest.at("selector");
    if (!sel.is_null()) {
        bundle.selector.class_to_domain =
            sel.at("class_to_domain").get<std::vector<std::uint32_t>>();
        if (sel.contains("constant") && sel.at("constant").get<bool>()) {
            bundle.selector.constant = true;
        } else {
            bundle.selector.classifier = classifier_from(sel, dir);
            bundle.selector.class_weights = sel.at("class_weights").get<std::vector<double>>();
        }
    }

    bundle.experts.resize(bundle.partition.domain_names.size());
    const nlohmann::json& expert_docs = manifest.at("experts");
    for (std::uint32_t d = 0; d < bundle.experts.size(); ++d) {
        bundle.experts[d].domain = d;
        if (expert_docs.at(d).is_null()) continue;
        bundle.experts[d].trained = true;
        bundle.experts[d].classifier = classifier_from(expert_docs.at(d), dir);
        bundle.experts[d].validation_auroc =
            expert_docs.at(d).value("validation_auroc", 0.0);
    }

    const nlohmann::json& cal = manifest.at("calibration");
    bundle.calibration.fusion_weight = cal.at("universal").at("w").get<double>();
    bundle.calibration.tau_universal = cal.at("universal").at("tau").get<double>();
    bundle.calibration.universal_degenerate = cal.at("universal").at("degenerate").get<bool>();
    std::map<std::string, std::uint32_t> name_to_domain;
    for (std::uint32_t d = 0; d < bundle.partition.domain_names.size(); ++d)
        name_to_domain[bundle.partition.domain_names[d]] = d;
    for (const auto& [name, doc] : cal.at("thresholds").items()) {
        ThresholdResult res;
        res.tau = doc.at("tau").get<double>();
        res.f1 = doc.at("f1").get<double>();
        res.recall = doc.at("recall").get<double>();
        res.floor_met = doc.at("floor_met").get<bool>();
        res.degenerate = doc.at("degenerate").get<bool>();
        bundle.calibration.tau.emplace(name_to_domain.at(name), res);
    }

    bundle.validate();
    return bundle;
}

} // namespace fame
