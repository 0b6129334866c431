#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fame/bundle.hpp"

namespace fame {

enum class Path : std::uint8_t { universal, pure, mixed };

std::string_view to_string(Path path);

// Per-line outcome of Eq. 5. A domain label is present exactly on the expert
// paths; the pure path never carries a score and never says normal.
struct Verdict {
    bool anomaly = false;
    Path path = Path::universal;
    std::optional<std::uint32_t> domain;
    std::optional<double> score;

    bool operator==(const Verdict&) const = default;
};

// Model-free decision inputs, so the routing rule can be fuzzed against a
// straight-line re-implementation.
struct DecisionInputs {
    double gate = 0.0;
    std::vector<double> selector;      // per expert-domain probability; empty = no selector
    std::vector<std::uint8_t> pure;    // rho per expert domain
    std::vector<double> expert_score;  // per expert domain (ignored for pure)
    std::vector<double> tau;           // per expert domain (ignored for pure)
    double s_u = 0.5;
    double tau_u = 0.5;
    double fusion_w = 0.0;
    // Maps selector position to an external domain id; identity when empty.
    std::vector<std::uint32_t> domain_ids;
};

Verdict decide(const DecisionInputs& in);

Verdict classify(const ModelBundle& bundle, std::string_view raw);

struct StreamSummary {
    std::uint64_t lines = 0;
    std::uint64_t anomalies = 0;
    std::uint64_t path_universal = 0;
    std::uint64_t path_pure = 0;
    std::uint64_t path_mixed = 0;
    std::uint64_t selector_fallbacks = 0; // gate fired with no selector available
    std::map<std::uint32_t, std::uint64_t> per_domain;
    double elapsed_seconds = 0.0;
    double lines_per_second = 0.0;
};

// Order-preserving stream classification; emits one JSONL verdict per input
// line. jobs > 1 fans out over worker threads in fixed-size blocks.
StreamSummary classify_stream(const ModelBundle& bundle, std::istream& in, std::ostream& out,
                              int jobs = 1);

std::string verdict_to_jsonl(const Verdict& verdict, std::uint64_t ordinal,
                             const std::vector<std::string>& domain_names);

} // namespace fame
