#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fame/corpus.hpp"

namespace fame {

inline constexpr std::string_view kWildcard = "<*>";

struct DrainConfig {
    double similarity_threshold = 0.5;
    int tree_depth = 4;     // root -> length bucket -> (depth-2) token levels -> leaves
    int max_children = 100; // per internal node; overflow tokens route to the wildcard child

    void validate() const;
};

// Whitespace split with standard Drain preprocessing: any token containing a
// digit is masked to the wildcard before tree descent.
std::vector<std::string> tokenize(std::string_view raw);

struct TemplateInfo {
    EventId event_id = 0;
    std::vector<std::string> tokens;
    std::uint64_t count = 0;
};

// Fixed-depth Drain parse tree. Grows while learning the offline region, then
// freezes; a frozen table only matches and is safe to share across threads.
class TemplateTable {
public:
    using ClusterId = std::uint32_t;

    explicit TemplateTable(DrainConfig config = {});

    // Descend, merge-or-create, bump the line count. Live tables only.
    ClusterId learn(std::string_view raw);

    // parse_line per the module contract: learn and report the current id.
    EventId learn_event(std::string_view raw) { return event_id_of(learn(raw)); }

    // Same descent and similarity rule, but never creates or mutates.
    std::optional<EventId> match(std::string_view raw) const;

    void freeze();
    bool frozen() const { return frozen_; }

    EventId event_id_of(ClusterId cluster) const;
    std::size_t size() const { return clusters_.size(); }
    const DrainConfig& config() const { return config_; }
    std::uint64_t total_count() const;

    // Insertion order; event ids are FNV-1a hashes of the token sequence.
    std::vector<TemplateInfo> templates() const;
    std::optional<TemplateInfo> find(EventId id) const;

    nlohmann::json to_json() const;
    static TemplateTable from_json(const nlohmann::json& doc, DrainConfig config = {});

private:
    struct Node {
        std::map<std::string, std::uint32_t, std::less<>> children;
        std::vector<ClusterId> clusters; // leaf payload
    };

    struct Cluster {
        std::vector<std::string> tokens;
        std::uint64_t count = 0;
        EventId final_id = 0;
    };

    std::uint32_t descend(const std::vector<std::string>& tokens, bool create);
    const Node* descend_const(const std::vector<std::string>& tokens) const;
    ClusterId best_match(const Node& leaf, const std::vector<std::string>& tokens,
                         double& best_sim) const;

    DrainConfig config_;
    std::vector<Node> nodes_; // nodes_[0] is the root
    std::vector<Cluster> clusters_;
    mutable std::map<EventId, ClusterId> by_event_;
    bool frozen_ = false;
};

// One pass in ordinal order over [begin, end); fills event_id on each record
// and returns the frozen table.
TemplateTable parse_corpus(Corpus& corpus, std::size_t begin, std::size_t end,
                           const DrainConfig& config);

double sequence_similarity(const std::vector<std::string>& tmpl,
                           const std::vector<std::string>& tokens);

EventId hash_template(const std::vector<std::string>& tokens);

} // namespace fame
