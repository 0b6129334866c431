// fame: offline setup and online inference for message-level log anomaly
// detection with failure-domain routing.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fame/config.hpp"
#include "fame/eval.hpp"
#include "fame/inference.hpp"
#include "fame/kshot.hpp"
#include "fame/pipeline.hpp"
#include "fame/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

fame::PipelineConfig load_config(const std::string& path, std::optional<std::uint64_t> seed,
                                 const std::string& out_dir) {
    fame::PipelineConfig cfg =
        path.empty() ? fame::PipelineConfig{} : fame::PipelineConfig::load(path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    return cfg;
}

struct ParsedInputs {
    fame::Corpus corpus;
    fame::CorpusSplit split;
    fame::TemplateTable table{fame::DrainConfig{}};
};

ParsedInputs parse_inputs(const fame::PipelineConfig& cfg) {
    if (cfg.dataset_path.empty())
        throw std::runtime_error("config: dataset.path is not set");
    ParsedInputs p;
    p.corpus = fame::ingest(cfg.dataset_path, cfg.dataset_format).corpus;
    p.split = fame::split_chronological(p.corpus, cfg.offline_fraction);
    p.table = fame::parse_corpus(p.corpus, 0, p.split.offline_end, cfg.drain);
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const nlohmann::json& doc, int indent = 2) {
    write_text(path, doc.dump(indent) + "\n");
}

std::vector<std::size_t> parse_grid(const std::string& csv) {
    std::vector<std::size_t> grid;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        std::string item = csv.substr(pos, comma == std::string::npos ? std::string::npos
                                                                      : comma - pos);
        if (!item.empty()) grid.push_back(static_cast<std::size_t>(std::stoull(item)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return grid;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FAME: failure-aware mixture-of-experts log anomaly detection"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "pipeline config JSON")->envname("FAME_CONFIG");
    app.add_option("--seed", seed, "override the root seed");
    app.add_option("--out", out_dir, "override the output directory");

    // parse
    auto* cmd_parse = app.add_subcommand("parse", "mine templates from the offline region");

    // sample
    auto* cmd_sample = app.add_subcommand("sample", "draw the K-shot sample");
    std::string k_grid_csv;
    cmd_sample->add_option("--k-grid", k_grid_csv,
                           "comma-separated budgets for the labeling-cost table");

    // partition subcommands
    auto* cmd_partition = app.add_subcommand("partition", "produce or certify a partition");
    cmd_partition->require_subcommand(1);
    auto* cmd_export = cmd_partition->add_subcommand(
        "export-prompt", "write the one-shot LLM prompt payload");
    auto* cmd_import = cmd_partition->add_subcommand(
        "import", "validate and certify a proposed partition");
    std::string import_file;
    cmd_import->add_option("file", import_file, "proposal JSON")->required();
    auto* cmd_tfidf =
        cmd_partition->add_subcommand("tfidf", "generate and certify the TF-IDF grouping");

    // setup
    auto* cmd_setup = app.add_subcommand("setup", "run the full offline stage");

    // infer
    auto* cmd_infer = app.add_subcommand("infer", "classify a stream with a trained bundle");
    std::string bundle_dir, input_file, output_file, infer_format = "raw";
    int jobs = 1;
    cmd_infer->add_option("--bundle", bundle_dir, "bundle directory")->required();
    cmd_infer->add_option("--input", input_file, "input file, one raw line per row")->required();
    cmd_infer->add_option("--output", output_file, "verdict JSONL output")->required();
    cmd_infer->add_option("--jobs", jobs, "worker threads");
    cmd_infer
        ->add_option("--format", infer_format,
                     "input format: raw | loghub_labeled | jsonl (labels are stripped)")
        ->check(CLI::IsMember({"raw", "loghub_labeled", "jsonl"}));

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "evaluate on the chronological test split");
    std::string eval_bundle;
    bool skip_baselines = false;
    cmd_eval->add_option("--bundle", eval_bundle, "bundle directory (defaults to <out>/bundle)");
    cmd_eval->add_flag("--skip-baselines", skip_baselines, "evaluate the pipeline only");

    // sweep
    auto* cmd_sweep = app.add_subcommand("sweep", "K-sensitivity sweep");
    std::string sweep_grid = "5,10,25";
    int sweep_seeds = 1;
    cmd_sweep->add_option("--grid", sweep_grid, "comma-separated K grid");
    cmd_sweep->add_option("--seeds", sweep_seeds, "number of seeds per K");

    // gen-synthetic
    auto* cmd_gen = app.add_subcommand("gen-synthetic", "emit a seeded synthetic corpus");
    fame::SyntheticConfig syn;
    std::string gen_out = "synthetic";
    cmd_gen->add_option("--lines", syn.lines, "corpus size");
    cmd_gen->add_option("--domains", syn.domains, "failure domains (domain 0 is pure)");
    cmd_gen->add_option("--mixed-templates", syn.mixed_templates, "mixed template count");
    cmd_gen->add_option("--anomaly-rate", syn.anomaly_rate, "anomaly probability per line");
    cmd_gen->add_option("--novel-fraction", syn.novel_fraction,
                        "test-region anomalies drawn from unseen templates");
    cmd_gen->add_flag("--disjoint-only", syn.disjoint_only,
                      "closed world: disjoint anomaly templates, no drift");
    cmd_gen->add_option("--gen-seed", syn.seed, "generator seed");
    cmd_gen->add_option("--prefix", gen_out, "output prefix (<prefix>.log, <prefix>.truth.json)");

    CLI11_PARSE(app, argc, argv);

    try {
        fame::PipelineConfig cfg = load_config(config_path, seed, out_dir);
        const fs::path out_root = cfg.output_dir;

        if (cmd_parse->parsed()) {
            ParsedInputs p = parse_inputs(cfg);
            write_json(out_root / "templates.json", p.table.to_json(), -1);
            std::cout << "parsed " << p.split.offline_count() << " offline lines into "
                      << p.table.size() << " templates -> "
                      << (out_root / "templates.json").string() << "\n";
        } else if (cmd_sample->parsed()) {
            ParsedInputs p = parse_inputs(cfg);
            fame::KShotSample sample = fame::sample_kshot(p.corpus, p.split.offline_end, cfg.k);
            write_json(out_root / "kshot.json", sample.to_json(), -1);
            std::cout << "k=" << cfg.k << " labels=" << sample.total_labels() << " -> "
                      << (out_root / "kshot.json").string() << "\n";
            std::vector<std::size_t> grid =
                k_grid_csv.empty() ? std::vector<std::size_t>{cfg.k} : parse_grid(k_grid_csv);
            auto rows = fame::labeling_cost_report(p.corpus, p.split.offline_end, grid);
            std::cout << "k\tlabels\treduction\n";
            for (const auto& row : rows)
                std::cout << row.k << '\t' << row.labels << '\t' << row.reduction << "x\n";
        } else if (cmd_export->parsed() || cmd_import->parsed() || cmd_tfidf->parsed()) {
            ParsedInputs p = parse_inputs(cfg);
            fame::KShotSample sample = fame::sample_kshot(p.corpus, p.split.offline_end, cfg.k);
            if (cmd_export->parsed()) {
                nlohmann::json payload =
                    fame::export_prompt_payload(p.table, sample, p.corpus);
                write_json(out_root / "prompt_payload.json", payload);
                std::cout << "prompt payload -> " << (out_root / "prompt_payload.json").string()
                          << "\n";
            } else {
                fame::PuNormalPool pool =
                    fame::build_pu_pool(p.corpus, p.split.offline_end, sample);
                fame::ProposedPartition proposal;
                if (cmd_import->parsed()) {
                    std::ifstream in(import_file, std::ios::binary);
                    if (!in)
                        throw std::runtime_error("partition: cannot open " + import_file);
                    proposal = fame::import_partition(nlohmann::json::parse(in), p.table);
                } else {
                    proposal = fame::tfidf_grouping(
                        p.table, sample, fame::TfIdfGroupingConfig{cfg.cosine_link_threshold});
                }
                fame::CertificationConfig cert;
                cert.distinctness_threshold = cfg.distinctness_threshold;
                cert.pool_sample = cfg.certification_pool_sample;
                cert.seed = cfg.stage_seed("certify");
                fame::CertifiedPartition partition =
                    fame::certify(proposal, p.table, sample, pool, p.corpus, cert);
                write_json(out_root / "partition.json", partition.to_json());
                std::cout << "certified " << partition.domain_names.size() - 1
                          << " expert domain(s) -> " << (out_root / "partition.json").string()
                          << "\n";
            }
        } else if (cmd_setup->parsed()) {
            ParsedInputs p;
            p.corpus = fame::ingest(cfg.dataset_path, cfg.dataset_format).corpus;
            fame::SetupOutputs setup = fame::run_setup(p.corpus, cfg);
            try {
                setup.bundle.save(out_root / "bundle");
            } catch (...) {
                fs::remove_all(out_root / "bundle"); // no partial artifacts
                throw;
            }
            write_json(out_root / "setup_report.json", setup.report);
            std::cout << "bundle -> " << (out_root / "bundle").string() << "\n"
                      << "report -> " << (out_root / "setup_report.json").string() << "\n";
        } else if (cmd_infer->parsed()) {
            fame::ModelBundle bundle = fame::ModelBundle::load(bundle_dir);
            std::ifstream in(input_file, std::ios::binary);
            if (!in) throw std::runtime_error("infer: cannot open " + input_file);
            fs::path out_path = output_file;
            if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
            std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("infer: cannot write " + output_file);
            std::istringstream stripped;
            std::istream* source = &in;
            if (infer_format != "raw") {
                auto format = fame::corpus_format_from_string(infer_format);
                fame::IngestResult parsed = fame::ingest_stream(in, *format);
                std::ostringstream raw_lines;
                for (const fame::LogRecord& rec : parsed.corpus) raw_lines << rec.raw << '\n';
                stripped.str(raw_lines.str());
                source = &stripped;
            }
            fame::StreamSummary summary = fame::classify_stream(bundle, *source, out, jobs);
            std::cout << "lines=" << summary.lines << " anomalies=" << summary.anomalies
                      << " paths(universal/pure/mixed)=" << summary.path_universal << "/"
                      << summary.path_pure << "/" << summary.path_mixed
                      << " lines_per_sec=" << static_cast<std::uint64_t>(summary.lines_per_second)
                      << "\n";
            for (const auto& [domain, count] : summary.per_domain)
                std::cout << "  " << bundle.partition.domain_names.at(domain) << ": " << count
                          << "\n";
            if (summary.selector_fallbacks > 0)
                std::cout << "  warning: " << summary.selector_fallbacks
                          << " line(s) fell back to the universal path (no selector)\n";
        } else if (cmd_eval->parsed()) {
            ParsedInputs p = parse_inputs(cfg);
            fs::path bundle_path =
                eval_bundle.empty() ? out_root / "bundle" : fs::path(eval_bundle);
            fame::ModelBundle bundle = fame::ModelBundle::load(bundle_path);
            if (bundle.config_hash != cfg.hash())
                std::cerr << "fame: warning: bundle was trained under config hash "
                          << bundle.config_hash << ", evaluating with " << cfg.hash() << "\n";
            fame::EvalOutcome outcome = fame::evaluate_bundle(bundle, p.corpus, p.split);
            std::vector<std::pair<std::string, fame::MetricsReport>> rows;
            rows.emplace_back("fame", outcome.pipeline);
            nlohmann::json doc{{"config_hash", cfg.hash()},
                               {"pipeline", outcome.pipeline.to_json()},
                               {"unseen", outcome.unseen.to_json()}};
            if (!skip_baselines) {
                fame::KShotSample sample =
                    fame::sample_kshot(p.corpus, p.split.offline_end, cfg.k);
                fame::PuNormalPool pool =
                    fame::build_pu_pool(p.corpus, p.split.offline_end, sample);
                fame::BaselineConfig bl;
                bl.features = cfg.features;
                bl.recall_floor = cfg.recall_floor;
                bl.loss = cfg.loss;
                bl.learning_rate = cfg.learning_rate;
                bl.batch_size = cfg.batch_size;
                bl.max_epochs = cfg.max_epochs;
                bl.seed = cfg.stage_seed("baselines");
                auto baselines = fame::run_baselines(p.corpus, p.split, p.table, sample, pool, bl);
                for (const auto& [name, outcome_b] : baselines) {
                    rows.emplace_back(name, outcome_b.report);
                    doc["baselines"][name] = outcome_b.report.to_json();
                    doc["baselines"][name]["note"] = outcome_b.note;
                }
            }
            write_json(out_root / "eval_report.json", doc);
            std::cout << fame::render_metrics_table(rows)
                      << "report -> " << (out_root / "eval_report.json").string() << "\n";
        } else if (cmd_sweep->parsed()) {
            ParsedInputs p;
            p.corpus = fame::ingest(cfg.dataset_path, cfg.dataset_format).corpus;
            std::vector<std::uint64_t> seeds;
            for (int s = 0; s < sweep_seeds; ++s) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(s));
            fame::SweepSummary summary = fame::k_sweep(p.corpus, cfg, parse_grid(sweep_grid), seeds);
            nlohmann::json doc = summary.to_json();
            doc["config_hash"] = cfg.hash();
            write_json(out_root / "sweep.json", doc);
            // CSV for plotting.
            std::ostringstream csv;
            csv << "k,seed,labels,reduction,precision,recall,f1,auroc\n";
            auto cell_v = [](const std::optional<double>& v) {
                return v ? std::to_string(*v) : std::string();
            };
            for (const fame::SweepCell& cell : summary.cells) {
                csv << cell.k << ',' << cell.seed << ',' << cell.labels_used << ','
                    << cell.reduction << ',' << cell_v(cell.pipeline.precision) << ','
                    << cell_v(cell.pipeline.recall) << ',' << cell_v(cell.pipeline.f1) << ','
                    << cell_v(cell.pipeline.auroc) << '\n';
            }
            write_text(out_root / "sweep.csv", csv.str());
            std::cout << "sweep -> " << (out_root / "sweep.json").string() << " and sweep.csv\n";
        } else if (cmd_gen->parsed()) {
            fame::SyntheticCorpus data = fame::generate_synthetic(syn);
            fs::path log_path = gen_out + ".log";
            fs::path truth_path = gen_out + ".truth.json";
            if (log_path.has_parent_path()) fs::create_directories(log_path.parent_path());
            std::ofstream corpus_out(log_path, std::ios::binary | std::ios::trunc);
            std::ofstream truth_out(truth_path, std::ios::binary | std::ios::trunc);
            if (!corpus_out || !truth_out)
                throw std::runtime_error("gen-synthetic: cannot write outputs");
            fame::write_synthetic(data, corpus_out, truth_out);
            std::cout << "corpus -> " << log_path.string() << " (" << data.corpus.size()
                      << " lines)\ntruth -> " << truth_path.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "fame: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
