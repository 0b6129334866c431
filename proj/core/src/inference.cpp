#include "fame/inference.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "fame/calibration.hpp"

namespace fame {

std::string_view to_string(Path path) {
    switch (path) {
    case Path::universal: return "universal";
    case Path::pure: return "pure";
    case Path::mixed: return "mixed";
    }
    return "?";
}

Verdict decide(const DecisionInputs& in) {
    Verdict v;
    if (in.gate < 0.5 || in.selector.empty()) {
        // Path 1; also the documented fallback when no selector exists.
        double fused = fuse_universal(in.s_u, in.gate, in.fusion_w);
        v.anomaly = fused >= in.tau_u;
        v.path = Path::universal;
        v.score = fused;
        return v;
    }
    std::size_t arg = 0;
    for (std::size_t c = 1; c < in.selector.size(); ++c)
        if (in.selector[c] > in.selector[arg]) arg = c;
    std::uint32_t domain = in.domain_ids.empty() ? static_cast<std::uint32_t>(arg)
                                                 : in.domain_ids[arg];
    v.domain = domain;
    if (in.pure[arg]) {
        v.anomaly = true; // Eq. 5 path 2
        v.path = Path::pure;
        return v;
    }
    v.path = Path::mixed;
    v.score = in.expert_score[arg];
    v.anomaly = in.expert_score[arg] >= in.tau[arg];
    return v;
}

namespace {

void l2_normalize_entries(std::vector<std::pair<std::uint32_t, float>>& entries) {
    double norm_sq = 0.0;
    for (const auto& [b, val] : entries) norm_sq += static_cast<double>(val) * val;
    if (norm_sq <= 0.0) return;
    float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
    for (auto& [b, val] : entries) val *= inv;
}

Verdict classify_impl(const ModelBundle& bundle, std::string_view raw, bool* fallback) {
    // One hashing pass; plain view for the router, IDF view for experts.
    auto counts = hash_term_counts(raw, bundle.backbone.featurizer);
    FeatureVector plain;
    plain.entries = counts;
    l2_normalize_entries(plain.entries);
    FeatureVector adapted;
    adapted.entries = std::move(counts);
    if (!bundle.backbone.idf.empty())
        for (auto& [b, val] : adapted.entries) val *= bundle.backbone.idf[b];
    l2_normalize_entries(adapted.entries);

    const double gate_score = bundle.gate.classifier.score_binary(plain);
    const bool selector_available = !bundle.selector.class_to_domain.empty();

    Verdict v;
    if (gate_score < bundle.gate.threshold || !selector_available) {
        if (fallback && gate_score >= bundle.gate.threshold) *fallback = true;
        double s_u = score_line(bundle.experts[bundle.partition.universal_index], adapted);
        double fused = fuse_universal(s_u, gate_score, bundle.calibration.fusion_weight);
        v.anomaly = fused >= bundle.calibration.tau_universal;
        v.path = Path::universal;
        v.score = fused;
        return v;
    }

    std::vector<double> dist = bundle.selector.distribution(plain);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < dist.size(); ++c)
        if (dist[c] > dist[arg]) arg = c;
    std::uint32_t domain = bundle.selector.class_to_domain[arg];
    v.domain = domain;
    if (bundle.partition.rho[domain] == DomainType::pure_anomaly) {
        v.anomaly = true;
        v.path = Path::pure;
        return v;
    }
    double score = score_line(bundle.experts[domain], adapted);
    v.path = Path::mixed;
    v.score = score;
    v.anomaly = score >= bundle.calibration.tau.at(domain).tau;
    return v;
}

void append_json_escaped(std::string& out, std::string_view text) {
    for (char c : text) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
}

} // namespace

Verdict classify(const ModelBundle& bundle, std::string_view raw) {
    return classify_impl(bundle, raw, nullptr);
}

std::string verdict_to_jsonl(const Verdict& verdict, std::uint64_t ordinal,
                             const std::vector<std::string>& domain_names) {
    std::string out;
    out.reserve(96);
    out += "{\"ordinal\":";
    out += std::to_string(ordinal);
    out += ",\"decision\":\"";
    out += verdict.anomaly ? "anomaly" : "normal";
    out += "\",\"domain\":";
    if (verdict.domain) {
        out += '"';
        append_json_escaped(out, domain_names.at(*verdict.domain));
        out += '"';
    } else {
        out += "null";
    }
    out += ",\"path\":\"";
    out += to_string(verdict.path);
    out += "\",\"score\":";
    if (verdict.score) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", *verdict.score);
        out += buf;
    } else {
        out += "null";
    }
    out += '}';
    return out;
}

StreamSummary classify_stream(const ModelBundle& bundle, std::istream& in, std::ostream& out,
                              int jobs) {
    StreamSummary summary;
    const auto started = std::chrono::steady_clock::now();

    std::vector<std::string> block;
    std::vector<Verdict> verdicts;
    std::vector<std::uint8_t> fallbacks;
    std::string line;
    std::uint64_t ordinal = 0;
    const std::size_t block_size = 4096;

    auto flush_block = [&]() {
        verdicts.assign(block.size(), Verdict{});
        fallbacks.assign(block.size(), 0);
        auto worker = [&](std::size_t start, std::size_t stride) {
            for (std::size_t i = start; i < block.size(); i += stride) {
                bool fb = false;
                verdicts[i] = classify_impl(bundle, block[i], &fb);
                fallbacks[i] = fb ? 1 : 0;
            }
        };
        if (jobs > 1 && block.size() > 64) {
            const std::size_t n_workers =
                std::min<std::size_t>(static_cast<std::size_t>(jobs), block.size());
            std::vector<std::thread> pool;
            pool.reserve(n_workers);
            for (std::size_t w = 0; w < n_workers; ++w)
                pool.emplace_back(worker, w, n_workers);
            for (std::thread& t : pool) t.join();
        } else {
            worker(0, 1);
        }
        for (std::size_t i = 0; i < block.size(); ++i) {
            const Verdict& v = verdicts[i];
            out << verdict_to_jsonl(v, ordinal++, bundle.partition.domain_names) << '\n';
            ++summary.lines;
            summary.anomalies += v.anomaly;
            summary.selector_fallbacks += fallbacks[i];
            switch (v.path) {
            case Path::universal: ++summary.path_universal; break;
            case Path::pure: ++summary.path_pure; break;
            case Path::mixed: ++summary.path_mixed; break;
            }
            if (v.domain) ++summary.per_domain[*v.domain];
        }
        block.clear();
    };

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        block.push_back(line);
        if (block.size() >= block_size) flush_block();
    }
    flush_block();
    out.flush();
    if (out.fail())
        throw std::runtime_error("inference: verdict sink write failed after " +
                                 std::to_string(summary.lines) + " lines");

    const auto finished = std::chrono::steady_clock::now();
    summary.elapsed_seconds =
        std::chrono::duration_cast<std::chrono::duration<double>>(finished - started).count();
    summary.lines_per_second =
        summary.elapsed_seconds > 0.0
            ? static_cast<double>(summary.lines) / summary.elapsed_seconds
            : 0.0;
    return summary;
}

} // namespace fame
