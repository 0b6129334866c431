#include "fame/synthetic.hpp"

#include <array>
#include <ostream>
#include <stdexcept>

#include "fame/rng.hpp"

namespace fame {

namespace {

constexpr std::array<const char*, 10> kDomainBase = {
    "kern", "mem", "net", "fsd", "pwr", "iod", "bus", "dma", "gpu", "rpc"};
constexpr std::array<const char*, 6> kDomainSuffix = {"core", "ctl", "unit",
                                                      "flow", "gate", "sink"};
constexpr std::array<const char*, 12> kService = {
    "sysd",    "cronrun", "httpd",   "sched",   "cachez",  "diskmgr",
    "authsvc", "mailq",   "dnscache", "loadbal", "backupd", "metricsd"};

struct TemplateSpec {
    std::vector<std::string> tokens; // "%" marks a parameter slot
    std::int32_t domain = -1;        // generator domain; -1 = routine service
    bool novel = false;              // emitted only in the test region
    // For mixed templates the status slot alternates; "" means fixed label.
    std::string normal_status;
    std::string anomaly_status;
    bool anomaly_only = false;
};

std::string domain_word(int domain, int j) {
    return std::string(kDomainBase[static_cast<std::size_t>(domain)]) +
           kDomainSuffix[static_cast<std::size_t>(j)];
}

} // namespace

nlohmann::json SyntheticTruth::to_json() const {
    return nlohmann::json{{"domain_names", domain_names},
                          {"line_domain", line_domain},
                          {"line_novel", line_novel}};
}

SyntheticTruth SyntheticTruth::from_json(const nlohmann::json& doc) {
    SyntheticTruth truth;
    truth.domain_names = doc.at("domain_names").get<std::vector<std::string>>();
    truth.line_domain = doc.at("line_domain").get<std::vector<std::int32_t>>();
    truth.line_novel = doc.at("line_novel").get<std::vector<std::uint8_t>>();
    return truth;
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
    if (config.domains < 1 || config.domains > static_cast<int>(kDomainBase.size()))
        throw std::runtime_error("synthetic: domains must be in [1, 10]");
    if (config.lines < 100) throw std::runtime_error("synthetic: need at least 100 lines");
    if (!(config.anomaly_rate > 0.0 && config.anomaly_rate < 1.0))
        throw std::runtime_error("synthetic: anomaly_rate must be in (0,1)");
    if (config.normal_templates < 1 ||
        config.normal_templates > static_cast<int>(kService.size()))
        throw std::runtime_error("synthetic: normal_templates must be in [1, 12]");
    const int n_mixed_domains = config.disjoint_only ? 0 : config.domains;
    if (!config.disjoint_only && config.domains < 2)
        throw std::runtime_error("synthetic: mixed corpora need at least 2 domains");
    if (!config.disjoint_only && (config.mixed_templates < 1 || config.mixed_templates > 26))
        throw std::runtime_error("synthetic: mixed_templates must be in [1, 26]");

    std::vector<TemplateSpec> normals;
    std::vector<TemplateSpec> anomalies; // offline-eligible anomaly sources
    std::vector<TemplateSpec> mixed;     // hosts both labels
    std::vector<TemplateSpec> novels;

    // Routine service templates. Same-length pairs share under half of their
    // tokens so Drain keeps them apart.
    for (int i = 0; i < config.normal_templates; ++i) {
        std::string svc = kService[static_cast<std::size_t>(i)];
        TemplateSpec t;
        t.tokens = {svc, svc + "task", "run", "%", svc + "state", svc + "ok"};
        for (int p = 0; p < i % 3; ++p) t.tokens.push_back(svc + "pad");
        normals.push_back(std::move(t));
    }

    if (config.disjoint_only) {
        // Closed world: domain 0 carries two anomaly-only templates, every
        // further domain one, all token-disjoint from routine traffic.
        TemplateSpec t0;
        t0.tokens = {domain_word(0, 0), domain_word(0, 1), "halt", "%", domain_word(0, 2)};
        t0.domain = 0;
        t0.anomaly_only = true;
        anomalies.push_back(std::move(t0));
        TemplateSpec t1;
        t1.tokens = {domain_word(0, 0), domain_word(0, 3), "abend",
                     "%",               domain_word(0, 2), domain_word(0, 1)};
        t1.domain = 0;
        t1.anomaly_only = true;
        anomalies.push_back(std::move(t1));
        for (int d = 1; d < config.domains; ++d) {
            TemplateSpec t;
            t.tokens = {domain_word(d, 0), domain_word(d, 1), domain_word(d, 4),
                        domain_word(d, 5), "%",               domain_word(d, 3)};
            t.domain = d;
            t.anomaly_only = true;
            anomalies.push_back(std::move(t));
        }
    } else {
        // Mixed templates round-robin over every domain, all the same length:
        // a distinct second token splits them at the tree's literal level,
        // and uniform length keeps each domain's lines in one tight score
        // band so a single calibration anomaly pins the whole threshold.
        //
        // Status words come in pairs; paired domains (2p, 2p+1) share a pair
        // with opposite polarity, so the same token is anomalous in one
        // domain and routine in its partner with event-balanced exposure. No
        // single linear boundary over n-grams can absorb that flip, while a
        // per-domain expert separates it with one weight.
        static constexpr std::array<std::array<const char*, 2>, 5> kStatusPairs = {{
            {"statalphagreen", "statbetaviolet"},
            {"statgammapink", "statdeltagold"},
            {"statepsilonred", "statzetablue"},
            {"statetaivory", "statthetajade"},
            {"stationicgray", "statkappamauve"},
        }};
        for (int m = 0; m < config.mixed_templates; ++m) {
            int d = m % n_mixed_domains;
            TemplateSpec t;
            t.tokens = {domain_word(d, 0),
                        "task" + std::string(1, static_cast<char>('a' + m)),
                        domain_word(d, 1),
                        "jobrun",
                        "status",
                        "@",
                        "%"};
            t.domain = d;
            const auto& pair = kStatusPairs[static_cast<std::size_t>(d / 2)];
            t.normal_status = pair[d % 2];
            t.anomaly_status = pair[1 - d % 2];
            mixed.push_back(std::move(t));
        }
        // One anomaly-only template per domain with its own fault vocabulary;
        // it typically certifies as a separate pure domain of the same
        // generator failure class.
        for (int d = 0; d < config.domains; ++d) {
            TemplateSpec t;
            t.tokens = {domain_word(d, 0), domain_word(d, 1), domain_word(d, 4),
                        domain_word(d, 5), "%",               domain_word(d, 3)};
            t.domain = d;
            t.anomaly_only = true;
            anomalies.push_back(std::move(t));
        }
        // Novel (test-only) anomaly templates, one per domain, at a length
        // nothing offline uses; they reuse the domain's fault words.
        for (int d = 0; d < config.domains; ++d) {
            TemplateSpec t;
            t.tokens = {domain_word(d, 0), "spurious",        domain_word(d, 4),
                        "%",               domain_word(d, 2), domain_word(d, 5),
                        domain_word(d, 3), domain_word(d, 3), domain_word(d, 3)};
            t.domain = d;
            t.novel = true;
            t.anomaly_only = true;
            novels.push_back(std::move(t));
        }
    }

    SyntheticCorpus out;
    out.corpus.reserve(config.lines);
    out.truth.line_domain.reserve(config.lines);
    out.truth.line_novel.reserve(config.lines);
    for (int d = 0; d < config.domains; ++d)
        out.truth.domain_names.push_back("GEN_" +
                                         std::string(kDomainBase[static_cast<std::size_t>(d)]));

    Rng rng(config.seed);
    const std::size_t offline_end =
        static_cast<std::size_t>(static_cast<double>(config.lines) * config.offline_fraction);

    auto render = [&](const TemplateSpec& t, bool anomalous) {
        std::string line;
        for (std::size_t i = 0; i < t.tokens.size(); ++i) {
            if (i > 0) line += ' ';
            const std::string& token = t.tokens[i];
            if (token == "%")
                line += 'n' + std::to_string(1000 + rng.below(9000));
            else if (token == "@")
                line += anomalous ? t.anomaly_status : t.normal_status;
            else
                line += token;
        }
        return line;
    };

    for (std::size_t i = 0; i < config.lines; ++i) {
        const bool in_test = i >= offline_end;
        const bool anomalous = rng.unit() < config.anomaly_rate;
        const TemplateSpec* spec = nullptr;
        // Source mix keeps the corpus-level anomaly rate at the configured
        // value while leaving each mixed template anomalous often enough
        // (~20% of its lines) that the 20% calibration split of a K-shot
        // sample reliably contains anomalies from every mixed EventID.
        if (!anomalous) {
            if (!mixed.empty() && rng.unit() < 0.12)
                spec = &mixed[rng.below(mixed.size())];
            else
                spec = &normals[rng.below(normals.size())];
        } else {
            if (!novels.empty() && in_test && rng.unit() < config.novel_fraction) {
                spec = &novels[rng.below(novels.size())];
            } else if (!mixed.empty() && rng.unit() < 0.65) {
                spec = &mixed[rng.below(mixed.size())];
            } else {
                spec = &anomalies[rng.below(anomalies.size())];
            }
        }
        LogRecord rec;
        rec.ordinal = i;
        rec.label = anomalous ? Label::anomaly : Label::normal;
        rec.raw = render(*spec, anomalous);
        out.corpus.push_back(std::move(rec));
        out.truth.line_domain.push_back(spec->domain);
        out.truth.line_novel.push_back(spec->novel ? 1 : 0);
    }
    return out;
}

void write_synthetic(const SyntheticCorpus& data, std::ostream& corpus_out,
                     std::ostream& truth_out) {
    for (const LogRecord& rec : data.corpus) {
        corpus_out << (rec.label == Label::anomaly ? "ALERT" : "-") << ' ' << rec.raw << '\n';
    }
    truth_out << data.truth.to_json().dump() << '\n';
}

} // namespace fame
