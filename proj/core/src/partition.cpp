#include "fame/partition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <unordered_map>

#include "fame/rng.hpp"

namespace fame {

namespace {

const char* kPromptInstructions =
    "You are given per-EventID statistics extracted from the offline region of a log "
    "stream. Group the EventIDs by underlying failure mechanism, ignoring boilerplate "
    "tokens such as severity labels, node identifiers, and hexadecimal payloads. "
    "Choose the number of groups yourself and name each group after its failure "
    "mechanism (e.g. DDR_MEMORY_ERROR). Include one group named UNIVERSAL_NORMAL for "
    "routine events; any EventID you leave unassigned defaults to UNIVERSAL_NORMAL. "
    "Reply with a single JSON object of the form {\"groups\": {\"NAME\": "
    "[\"event_id\", ...], ...}} and no other text.";

// Sparse TF-IDF vector over template tokens, wildcards excluded.
using SparseVec = std::vector<std::pair<std::uint32_t, double>>;

double cosine(const SparseVec& a, const SparseVec& b) {
    double dot = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first == b[j].first) {
            dot += a[i].second * b[j].second;
            ++i;
            ++j;
        } else if (a[i].first < b[j].first) {
            ++i;
        } else {
            ++j;
        }
    }
    return dot; // inputs are L2-normalized
}

void l2_normalize(SparseVec& v) {
    double norm_sq = 0.0;
    for (const auto& [t, w] : v) norm_sq += w * w;
    if (norm_sq <= 0.0) return;
    double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [t, w] : v) w *= inv;
}

// TF-IDF model over the whole template corpus: one document per template.
struct TemplateTfIdf {
    std::unordered_map<std::string, std::uint32_t> vocab;
    std::vector<double> idf;
    std::map<EventId, SparseVec> vectors;

    explicit TemplateTfIdf(const TemplateTable& table) {
        const auto templates = table.templates();
        std::vector<std::map<std::uint32_t, double>> counts;
        counts.reserve(templates.size());
        std::vector<std::uint32_t> df;
        for (const TemplateInfo& info : templates) {
            std::map<std::uint32_t, double> tf;
            for (const std::string& token : info.tokens) {
                if (token == kWildcard) continue;
                auto [it, fresh] = vocab.emplace(token, static_cast<std::uint32_t>(vocab.size()));
                if (fresh) df.push_back(0);
                tf[it->second] += 1.0;
            }
            for (const auto& [term, n] : tf) ++df[term];
            counts.push_back(std::move(tf));
        }
        const double n_docs = static_cast<double>(templates.size());
        idf.resize(df.size());
        for (std::size_t t = 0; t < df.size(); ++t)
            idf[t] = std::log((1.0 + n_docs) / (1.0 + df[t])) + 1.0;
        for (std::size_t d = 0; d < templates.size(); ++d) {
            SparseVec v;
            v.reserve(counts[d].size());
            for (const auto& [term, n] : counts[d]) v.emplace_back(term, n * idf[term]);
            l2_normalize(v);
            vectors.emplace(templates[d].event_id, std::move(v));
        }
    }

    const SparseVec& of(EventId event) const {
        auto it = vectors.find(event);
        if (it == vectors.end())
            throw std::runtime_error("partition: unknown EventID in TF-IDF model");
        return it->second;
    }
};

SparseVec centroid(const std::vector<const SparseVec*>& members) {
    std::map<std::uint32_t, double> acc;
    for (const SparseVec* v : members)
        for (const auto& [t, w] : *v) acc[t] += w;
    SparseVec out(acc.begin(), acc.end());
    l2_normalize(out);
    return out;
}

} // namespace

std::string_view to_string(DomainType type) {
    switch (type) {
    case DomainType::mixed: return "mixed";
    case DomainType::pure_anomaly: return "pure_anomaly";
    case DomainType::universal: return "universal";
    }
    return "?";
}

nlohmann::json ProposedPartition::to_json() const {
    nlohmann::json groups_doc = nlohmann::json::object();
    for (const auto& [name, events] : groups) {
        nlohmann::json ids = nlohmann::json::array();
        for (EventId event : events) ids.push_back(event_id_to_hex(event));
        groups_doc[name] = std::move(ids);
    }
    return nlohmann::json{{"groups", std::move(groups_doc)}};
}

std::uint32_t CertifiedPartition::domain_of(EventId event) const {
    auto it = pi.find(event);
    return it == pi.end() ? universal_index : it->second;
}

std::vector<std::uint32_t> CertifiedPartition::expert_domains() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t d = 0; d < domain_names.size(); ++d)
        if (d != universal_index) out.push_back(d);
    return out;
}

nlohmann::json CertifiedPartition::to_json() const {
    nlohmann::json domains = nlohmann::json::array();
    for (std::size_t d = 0; d < domain_names.size(); ++d)
        domains.push_back({{"name", domain_names[d]}, {"type", to_string(rho[d])}});
    nlohmann::json mapping = nlohmann::json::object();
    for (const auto& [event, domain] : pi) mapping[event_id_to_hex(event)] = domain;
    return nlohmann::json{{"domains", std::move(domains)},
                          {"universal_index", universal_index},
                          {"pi", std::move(mapping)}};
}

CertifiedPartition CertifiedPartition::from_json(const nlohmann::json& doc) {
    CertifiedPartition out;
    for (const auto& entry : doc.at("domains")) {
        out.domain_names.push_back(entry.at("name").get<std::string>());
        std::string type = entry.at("type").get<std::string>();
        if (type == "mixed") out.rho.push_back(DomainType::mixed);
        else if (type == "pure_anomaly") out.rho.push_back(DomainType::pure_anomaly);
        else if (type == "universal") out.rho.push_back(DomainType::universal);
        else throw std::runtime_error("partition: unknown domain type " + type);
    }
    out.universal_index = doc.at("universal_index").get<std::uint32_t>();
    for (const auto& [hex, domain] : doc.at("pi").items()) {
        auto event = event_id_from_hex(hex);
        if (!event) throw std::runtime_error("partition: bad event id " + hex);
        out.pi.emplace(*event, domain.get<std::uint32_t>());
    }
    return out;
}

nlohmann::json export_prompt_payload(const TemplateTable& table, const KShotSample& sample,
                                     const Corpus& corpus) {
    nlohmann::json events = nlohmann::json::array();
    for (const TemplateInfo& info : table.templates()) {
        nlohmann::json row{{"event_id", event_id_to_hex(info.event_id)},
                           {"template", info.tokens},
                           {"count", info.count},
                           {"has_normal", false},
                           {"has_anomaly", false}};
        auto it = sample.per_event.find(info.event_id);
        if (it != sample.per_event.end()) {
            row["has_normal"] = it->second.has_normal;
            row["has_anomaly"] = it->second.has_anomaly;
            if (it->second.rep_normal) row["rep_normal"] = corpus[*it->second.rep_normal].raw;
            if (it->second.rep_anomaly) row["rep_anomaly"] = corpus[*it->second.rep_anomaly].raw;
        }
        events.push_back(std::move(row));
    }
    return nlohmann::json{{"instructions", kPromptInstructions},
                          {"output_schema", {{"groups", {{"GROUP_NAME", {"event_id"}}}}}},
                          {"events", std::move(events)}};
}

ProposedPartition import_partition(const nlohmann::json& doc, const TemplateTable& table) {
    if (!doc.is_object() || !doc.contains("groups") || !doc["groups"].is_object())
        throw std::runtime_error("partition: document must be {\"groups\": {name: [ids]}}");
    ProposedPartition proposal;
    std::map<EventId, std::string> owner;
    for (const auto& [name, ids] : doc["groups"].items()) {
        std::set<EventId> members;
        for (const auto& id_doc : ids) {
            EventId event = 0;
            if (id_doc.is_string()) {
                auto parsed = event_id_from_hex(id_doc.get<std::string>());
                if (!parsed)
                    throw std::runtime_error("partition: malformed event id " +
                                             id_doc.get<std::string>());
                event = *parsed;
            } else if (id_doc.is_number_unsigned()) {
                event = id_doc.get<std::uint64_t>();
            } else {
                throw std::runtime_error("partition: event ids must be hex strings");
            }
            if (!table.find(event))
                throw std::runtime_error("partition: unknown EventID " + event_id_to_hex(event));
            auto [it, fresh] = owner.emplace(event, name);
            if (!fresh)
                throw std::runtime_error("partition: EventID " + event_id_to_hex(event) +
                                         " appears in both '" + it->second + "' and '" + name +
                                         "'");
            members.insert(event);
        }
        proposal.groups[name] = std::move(members);
    }
    proposal.groups.try_emplace(std::string(kUniversalGroup));
    return proposal;
}

ProposedPartition tfidf_grouping(const TemplateTable& table, const KShotSample& sample,
                                 const TfIdfGroupingConfig& config) {
    ProposedPartition proposal;
    proposal.groups.try_emplace(std::string(kUniversalGroup));

    // Documents: anomaly-signal EventIDs, in template insertion order.
    std::vector<EventId> docs;
    for (const TemplateInfo& info : table.templates()) {
        auto it = sample.per_event.find(info.event_id);
        if (it != sample.per_event.end() && it->second.has_anomaly) docs.push_back(info.event_id);
    }
    if (docs.empty()) return proposal;

    TemplateTfIdf model(table);

    // Single-link agglomeration via union-find over pairwise cosine links.
    std::vector<std::size_t> parent(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < docs.size(); ++i) {
        for (std::size_t j = i + 1; j < docs.size(); ++j) {
            if (cosine(model.of(docs[i]), model.of(docs[j])) >= config.cosine_link_threshold) {
                std::size_t ri = find(i), rj = find(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }
        }
    }

    // Name clusters in order of their first member so output is deterministic.
    std::map<std::size_t, std::string> cluster_names;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        std::size_t root = find(i);
        auto [it, fresh] = cluster_names.try_emplace(
            root, "DOMAIN_" + std::to_string(cluster_names.size() + 1));
        proposal.groups[it->second].insert(docs[i]);
    }
    return proposal;
}

CertifiedPartition certify(const ProposedPartition& proposal, const TemplateTable& table,
                           const KShotSample& sample, const PuNormalPool& pool,
                           const Corpus& corpus, const CertificationConfig& config) {
    // Validate membership against the table first.
    for (const auto& [name, events] : proposal.groups) {
        for (EventId event : events) {
            if (!table.find(event))
                throw std::runtime_error("partition: proposal references unknown EventID " +
                                         event_id_to_hex(event));
        }
    }

    auto signals_of = [&](EventId event) -> const EventSample* {
        auto it = sample.per_event.find(event);
        return it == sample.per_event.end() ? nullptr : &it->second;
    };

    // Universal membership under the raw proposal (before any dissolution),
    // used both for defaulting and for the distinctness reference sample.
    std::set<EventId> proposed_universal;
    {
        std::set<EventId> assigned;
        for (const auto& [name, events] : proposal.groups) {
            if (name == kUniversalGroup) continue;
            assigned.insert(events.begin(), events.end());
        }
        for (const TemplateInfo& info : table.templates())
            if (!assigned.count(info.event_id)) proposed_universal.insert(info.event_id);
    }

    TemplateTfIdf model(table);

    // Reference centroid: template vectors of a seeded uniform sample of
    // universal pool lines, so frequent templates weigh more.
    SparseVec universal_centroid;
    {
        std::vector<std::uint64_t> universal_lines;
        universal_lines.reserve(pool.ordinals.size());
        for (std::uint64_t ord : pool.ordinals) {
            const auto& event = corpus[ord].event_id;
            if (event && proposed_universal.count(*event)) universal_lines.push_back(ord);
        }
        Rng rng(config.seed);
        std::vector<std::size_t> chosen = rng.sample_indices(
            universal_lines.size(), std::min(config.pool_sample, universal_lines.size()));
        std::vector<const SparseVec*> members;
        members.reserve(chosen.size());
        for (std::size_t idx : chosen)
            members.push_back(&model.of(*corpus[universal_lines[idx]].event_id));
        if (!members.empty()) universal_centroid = centroid(members);
    }

    CertifiedPartition out;
    std::map<std::string, std::vector<EventId>> kept; // certified non-universal groups

    for (const auto& [name, events] : proposal.groups) {
        if (name == kUniversalGroup || events.empty()) continue;
        bool any_anomaly = false;
        bool all_pure = true;
        for (EventId event : events) {
            const EventSample* sig = signals_of(event);
            bool has_anom = sig && sig->has_anomaly;
            bool has_norm = sig && sig->has_normal;
            any_anomaly |= has_anom;
            if (!has_anom || has_norm) all_pure = false;
        }
        if (!any_anomaly) continue; // rule (iii): dissolve into UNIVERSAL_NORMAL

        if (all_pure) {
            // Rule (i): pure-anomaly candidate, admitted only when distinct
            // from the routine pool under TF-IDF cosine.
            std::vector<const SparseVec*> members;
            for (EventId event : events) members.push_back(&model.of(event));
            if (cosine(centroid(members), universal_centroid) >= config.distinctness_threshold)
                continue; // dissolve
        }
        kept.emplace(name, std::vector<EventId>(events.begin(), events.end()));
    }

    // Lay out domains: certified groups in name order, universal last.
    for (const auto& [name, events] : kept) {
        out.domain_names.push_back(name);
        bool pure = true;
        for (EventId event : events) {
            const EventSample* sig = signals_of(event);
            if (!sig || !sig->has_anomaly || sig->has_normal) pure = false;
        }
        out.rho.push_back(pure ? DomainType::pure_anomaly : DomainType::mixed);
    }
    out.domain_names.push_back(std::string(kUniversalGroup));
    out.rho.push_back(DomainType::universal);
    out.universal_index = static_cast<std::uint32_t>(out.domain_names.size() - 1);

    std::map<EventId, std::uint32_t> assignment;
    for (std::uint32_t d = 0; d < kept.size(); ++d) {
        const auto& events = kept[out.domain_names[d]];
        for (EventId event : events) assignment[event] = d;
    }
    for (const TemplateInfo& info : table.templates()) {
        auto it = assignment.find(info.event_id);
        out.pi[info.event_id] = it == assignment.end() ? out.universal_index : it->second;
    }
    return out;
}

} // namespace fame
