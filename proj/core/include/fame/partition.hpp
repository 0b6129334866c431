#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fame/corpus.hpp"
#include "fame/drain.hpp"
#include "fame/kshot.hpp"

namespace fame {

inline constexpr std::string_view kUniversalGroup = "UNIVERSAL_NORMAL";

// Grouping proposal (LLM-imported or TF-IDF generated). EventIDs absent from
// every group implicitly belong to UNIVERSAL_NORMAL.
struct ProposedPartition {
    std::map<std::string, std::set<EventId>> groups; // always contains UNIVERSAL_NORMAL

    nlohmann::json to_json() const;
};

enum class DomainType : std::uint8_t { mixed, pure_anomaly, universal };

std::string_view to_string(DomainType type);

// Frozen mapping pi: EventID -> domain, with per-domain type flags. Certified
// once during setup and immutable afterwards.
struct CertifiedPartition {
    std::vector<std::string> domain_names;  // index -> name; universal is last
    std::vector<DomainType> rho;            // index -> type
    std::map<EventId, std::uint32_t> pi;    // total over offline EventIDs
    std::uint32_t universal_index = 0;

    std::uint32_t domain_of(EventId event) const; // unknown events -> universal
    std::vector<std::uint32_t> expert_domains() const; // non-universal, ascending
    bool is_universal(std::uint32_t domain) const { return domain == universal_index; }

    nlohmann::json to_json() const;
    static CertifiedPartition from_json(const nlohmann::json& doc);
};

// The complete one-shot prompt a human pastes into an LLM: instructions plus
// one statistics row per EventID.
nlohmann::json export_prompt_payload(const TemplateTable& table, const KShotSample& sample,
                                     const Corpus& corpus);

ProposedPartition import_partition(const nlohmann::json& doc, const TemplateTable& table);

struct TfIdfGroupingConfig {
    double cosine_link_threshold = 0.5;
};

// Non-LLM grouping: single-link clusters of anomaly-signal templates under
// TF-IDF cosine similarity over template tokens.
ProposedPartition tfidf_grouping(const TemplateTable& table, const KShotSample& sample,
                                 const TfIdfGroupingConfig& config = {});

struct CertificationConfig {
    double distinctness_threshold = 0.7;
    std::size_t pool_sample = 10000;
    std::uint64_t seed = 1;
};

CertifiedPartition certify(const ProposedPartition& proposal, const TemplateTable& table,
                           const KShotSample& sample, const PuNormalPool& pool,
                           const Corpus& corpus, const CertificationConfig& config = {});

} // namespace fame
