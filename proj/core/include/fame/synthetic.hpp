#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fame/corpus.hpp"

namespace fame {

// Seeded corpus with planted failure domains. Domain 0 emits only anomalies
// (pure by construction); the rest host mixed templates where the same
// template carries both normal and anomalous parameterizations, with the
// anomalous status token's polarity flipped between domains so no single
// linear boundary fits all of them. `novel_fraction` of test-region anomalies
// come from templates never seen offline (the drift knob).
struct SyntheticConfig {
    std::uint64_t seed = 7;
    std::size_t lines = 50000;
    int domains = 3;
    int mixed_templates = 5;
    double anomaly_rate = 0.05;
    double novel_fraction = 0.10;
    double offline_fraction = 0.85; // novel templates appear only past this point
    int normal_templates = 12;
    bool disjoint_only = false; // closed world: anomaly templates fully disjoint, no drift
};

struct SyntheticTruth {
    std::vector<std::string> domain_names;   // generator domains
    std::vector<std::int32_t> line_domain;   // -1 for routine service lines
    std::vector<std::uint8_t> line_novel;    // template unseen offline

    nlohmann::json to_json() const;
    static SyntheticTruth from_json(const nlohmann::json& doc);
};

struct SyntheticCorpus {
    Corpus corpus;
    SyntheticTruth truth;
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

// loghub_labeled rendering ("-" tag for normal lines) plus the truth sidecar.
void write_synthetic(const SyntheticCorpus& data, std::ostream& corpus_out,
                     std::ostream& truth_out);

} // namespace fame
