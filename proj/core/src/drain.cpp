#include "fame/drain.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "fame/rng.hpp"

namespace fame {

void DrainConfig::validate() const {
    if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0))
        throw std::runtime_error("drain: similarity_threshold must be in (0,1]");
    if (tree_depth < 2) throw std::runtime_error("drain: tree_depth must be >= 2");
    if (max_children < 1) throw std::runtime_error("drain: max_children must be >= 1");
}

std::vector<std::string> tokenize(std::string_view raw) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < raw.size()) {
        while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
        std::size_t start = i;
        while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
        if (i > start) {
            std::string_view token = raw.substr(start, i - start);
            bool has_digit = std::any_of(token.begin(), token.end(), [](char c) {
                return std::isdigit(static_cast<unsigned char>(c));
            });
            tokens.emplace_back(has_digit ? std::string(kWildcard) : std::string(token));
        }
    }
    return tokens;
}

EventId hash_template(const std::vector<std::string>& tokens) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const std::string& token : tokens) {
        h = fnv1a64(token, h);
        h = fnv1a64(std::string_view("\x1f", 1), h);
    }
    return h;
}

double sequence_similarity(const std::vector<std::string>& tmpl,
                           const std::vector<std::string>& tokens) {
    if (tmpl.size() != tokens.size()) return 0.0;
    if (tmpl.empty()) return 1.0;
    std::size_t same = 0;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        // A wildcard position counts as equal (Drain3 include-params rule);
        // pre-masked digit tokens in the line compare equal to it anyway.
        if (tmpl[i] == tokens[i] || tmpl[i] == kWildcard) ++same;
    }
    return static_cast<double>(same) / static_cast<double>(tmpl.size());
}

TemplateTable::TemplateTable(DrainConfig config) : config_(config) {
    config_.validate();
    nodes_.emplace_back(); // root
}

std::uint32_t TemplateTable::descend(const std::vector<std::string>& tokens, bool create) {
    std::uint32_t node = 0;
    // The last token never keys a level; it stays in the leaf where the
    // similarity rule decides. "mount failed" therefore lands under
    // (2, "mount") and can merge with "mount succeeded".
    const int literal_levels =
        std::min<int>(config_.tree_depth - 2,
                      tokens.empty() ? 0 : static_cast<int>(tokens.size()) - 1);
    std::string length_key = std::to_string(tokens.size());

    auto step = [&](std::string_view key) -> bool {
        Node& n = nodes_[node];
        auto it = n.children.find(key);
        if (it != n.children.end()) {
            node = it->second;
            return true;
        }
        if (!create) {
            // Frozen-style descent falls back to the wildcard child if present.
            auto wild = n.children.find(kWildcard);
            if (wild == n.children.end()) return false;
            node = wild->second;
            return true;
        }
        std::string_view effective = key;
        if (n.children.size() >= static_cast<std::size_t>(config_.max_children)) {
            auto wild = n.children.find(kWildcard);
            if (wild != n.children.end()) {
                node = wild->second;
                return true;
            }
            effective = kWildcard;
        }
        std::uint32_t fresh = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        nodes_[node].children.emplace(std::string(effective), fresh);
        node = fresh;
        return true;
    };

    if (!step(length_key)) return UINT32_MAX;
    for (int level = 0; level < literal_levels; ++level) {
        if (!step(tokens[static_cast<std::size_t>(level)])) return UINT32_MAX;
    }
    return node;
}

const TemplateTable::Node* TemplateTable::descend_const(
    const std::vector<std::string>& tokens) const {
    std::uint32_t node = const_cast<TemplateTable*>(this)->descend(tokens, false);
    return node == UINT32_MAX ? nullptr : &nodes_[node];
}

TemplateTable::ClusterId TemplateTable::best_match(const Node& leaf,
                                                   const std::vector<std::string>& tokens,
                                                   double& best_sim) const {
    ClusterId best = UINT32_MAX;
    best_sim = -1.0;
    for (ClusterId id : leaf.clusters) {
        double sim = sequence_similarity(clusters_[id].tokens, tokens);
        if (sim > best_sim) {
            best_sim = sim;
            best = id;
        }
    }
    return best;
}

TemplateTable::ClusterId TemplateTable::learn(std::string_view raw) {
    if (frozen_) throw std::runtime_error("drain: table is frozen");
    std::vector<std::string> tokens = tokenize(raw);
    std::uint32_t node = descend(tokens, true);
    Node& leaf = nodes_[node];

    double best_sim = -1.0;
    ClusterId best = best_match(leaf, tokens, best_sim);
    if (best != UINT32_MAX && best_sim >= config_.similarity_threshold) {
        Cluster& cluster = clusters_[best];
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (cluster.tokens[i] != tokens[i] && cluster.tokens[i] != kWildcard)
                cluster.tokens[i] = std::string(kWildcard);
        }
        ++cluster.count;
        return best;
    }

    ClusterId fresh = static_cast<ClusterId>(clusters_.size());
    clusters_.push_back(Cluster{tokens, 1, 0});
    leaf.clusters.push_back(fresh);
    return fresh;
}

std::optional<EventId> TemplateTable::match(std::string_view raw) const {
    std::vector<std::string> tokens = tokenize(raw);
    const Node* leaf = descend_const(tokens);
    if (leaf == nullptr) return std::nullopt;
    double best_sim = -1.0;
    ClusterId best = best_match(*leaf, tokens, best_sim);
    if (best == UINT32_MAX || best_sim < config_.similarity_threshold) return std::nullopt;
    return event_id_of(best);
}

EventId TemplateTable::event_id_of(ClusterId cluster) const {
    const Cluster& c = clusters_.at(cluster);
    return frozen_ ? c.final_id : hash_template(c.tokens);
}

void TemplateTable::freeze() {
    if (frozen_) return;
    by_event_.clear();
    for (std::size_t i = 0; i < clusters_.size(); ++i) {
        clusters_[i].final_id = hash_template(clusters_[i].tokens);
        by_event_.emplace(clusters_[i].final_id, static_cast<ClusterId>(i));
    }
    frozen_ = true;
}

std::uint64_t TemplateTable::total_count() const {
    std::uint64_t total = 0;
    for (const Cluster& c : clusters_) total += c.count;
    return total;
}

std::vector<TemplateInfo> TemplateTable::templates() const {
    std::vector<TemplateInfo> out;
    out.reserve(clusters_.size());
    for (std::size_t i = 0; i < clusters_.size(); ++i) {
        out.push_back(TemplateInfo{event_id_of(static_cast<ClusterId>(i)),
                                   clusters_[i].tokens, clusters_[i].count});
    }
    return out;
}

std::optional<TemplateInfo> TemplateTable::find(EventId id) const {
    if (!frozen_) throw std::runtime_error("drain: find() requires a frozen table");
    auto it = by_event_.find(id);
    if (it == by_event_.end()) return std::nullopt;
    const Cluster& c = clusters_[it->second];
    return TemplateInfo{c.final_id, c.tokens, c.count};
}

nlohmann::json TemplateTable::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const TemplateInfo& info : templates()) {
        arr.push_back({{"event_id", event_id_to_hex(info.event_id)},
                       {"template", info.tokens},
                       {"count", info.count}});
    }
    return arr;
}

TemplateTable TemplateTable::from_json(const nlohmann::json& doc, DrainConfig config) {
    TemplateTable table(config);
    if (!doc.is_array()) throw std::runtime_error("drain: template document must be an array");
    for (const auto& entry : doc) {
        std::vector<std::string> tokens = entry.at("template").get<std::vector<std::string>>();
        std::uint32_t node = table.descend(tokens, true);
        ClusterId id = static_cast<ClusterId>(table.clusters_.size());
        table.clusters_.push_back(
            Cluster{std::move(tokens), entry.at("count").get<std::uint64_t>(), 0});
        table.nodes_[node].clusters.push_back(id);
    }
    table.freeze();
    return table;
}

TemplateTable parse_corpus(Corpus& corpus, std::size_t begin, std::size_t end,
                           const DrainConfig& config) {
    TemplateTable table(config);
    std::vector<TemplateTable::ClusterId> assigned;
    assigned.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) assigned.push_back(table.learn(corpus[i].raw));
    table.freeze();
    for (std::size_t i = begin; i < end; ++i)
        corpus[i].event_id = table.event_id_of(assigned[i - begin]);
    return table;
}

} // namespace fame
