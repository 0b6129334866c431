#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fame/partition.hpp"
#include "fame/synthetic.hpp"

using namespace fame;

namespace {

// Small world: two anomaly-flavored templates, one normal template.
struct World {
    Corpus corpus;
    TemplateTable table{DrainConfig{}};
    KShotSample sample;
    PuNormalPool pool;
    EventId ev_mem, ev_net, ev_ok;
};

World make_world() {
    World w;
    auto push = [&](const std::string& raw, Label label, int copies) {
        for (int i = 0; i < copies; ++i) {
            LogRecord rec;
            rec.ordinal = w.corpus.size();
            rec.label = label;
            rec.raw = raw + " " + std::to_string(rec.ordinal);
            w.corpus.push_back(std::move(rec));
        }
    };
    push("memfail scrub ecc bank", Label::anomaly, 20);
    push("netdown link probe lost", Label::anomaly, 20);
    push("service heartbeat ok state", Label::normal, 60);
    w.table = parse_corpus(w.corpus, 0, w.corpus.size(), DrainConfig{});
    REQUIRE(w.table.size() == 3);
    w.ev_mem = *w.corpus[0].event_id;
    w.ev_net = *w.corpus[20].event_id;
    w.ev_ok = *w.corpus[40].event_id;
    w.sample = sample_kshot(w.corpus, w.corpus.size(), 10);
    w.pool = build_pu_pool(w.corpus, w.corpus.size(), w.sample);
    return w;
}

} // namespace

TEST_CASE("prompt payload carries one row per EventID") {
    World w = make_world();
    nlohmann::json payload = export_prompt_payload(w.table, w.sample, w.corpus);
    CHECK(payload["events"].size() == 3);
    CHECK(payload.contains("instructions"));
    bool saw_universal_mention =
        payload["instructions"].get<std::string>().find("UNIVERSAL_NORMAL") != std::string::npos;
    CHECK(saw_universal_mention);
    for (const auto& row : payload["events"]) {
        CHECK(row.contains("event_id"));
        CHECK(row.contains("template"));
        CHECK(row.contains("count"));
        bool has_anom = row["has_anomaly"].get<bool>();
        CHECK(row.contains("rep_anomaly") == has_anom);
        bool has_norm = row["has_normal"].get<bool>();
        CHECK(row.contains("rep_normal") == has_norm);
    }
}

TEST_CASE("import accepts groups, defaults the universal group, rejects dupes") {
    World w = make_world();
    nlohmann::json doc{{"groups",
                        {{"MEM", {event_id_to_hex(w.ev_mem)}},
                         {"NET", {event_id_to_hex(w.ev_net)}}}}};
    ProposedPartition proposal = import_partition(doc, w.table);
    CHECK(proposal.groups.count("UNIVERSAL_NORMAL") == 1); // auto-created
    CHECK(proposal.groups.at("MEM").count(w.ev_mem) == 1);

    nlohmann::json dup{{"groups",
                        {{"A", {event_id_to_hex(w.ev_mem)}},
                         {"B", {event_id_to_hex(w.ev_mem)}}}}};
    CHECK_THROWS_WITH_AS(import_partition(dup, w.table),
                         doctest::Contains(event_id_to_hex(w.ev_mem).c_str()),
                         std::runtime_error);

    nlohmann::json unknown{{"groups", {{"A", {"00000000000000ff"}}}}};
    CHECK_THROWS(import_partition(unknown, w.table));
    CHECK_THROWS(import_partition(nlohmann::json::parse("{\"nope\": 1}"), w.table));
}

TEST_CASE("unassigned EventIDs default to UNIVERSAL_NORMAL after certification") {
    World w = make_world();
    nlohmann::json doc{{"groups", {{"MEM", {event_id_to_hex(w.ev_mem)}}}}};
    ProposedPartition proposal = import_partition(doc, w.table);
    CertifiedPartition cert = certify(proposal, w.table, w.sample, w.pool, w.corpus);
    CHECK(cert.is_universal(cert.domain_of(w.ev_net)));
    CHECK(cert.is_universal(cert.domain_of(w.ev_ok)));
    CHECK_FALSE(cert.is_universal(cert.domain_of(w.ev_mem)));
}

TEST_CASE("certification rules: pure, mixed, dissolved") {
    World w = make_world();
    // MEM: all-anomaly signals, token-disjoint from the normal pool -> pure.
    // MIXEDGRP: contains the normal-signal service event -> mixed.
    // DEAD: no anomaly signal at all -> dissolved.
    nlohmann::json doc{{"groups",
                        {{"MEM", {event_id_to_hex(w.ev_mem)}},
                         {"MIXEDGRP", {event_id_to_hex(w.ev_net), event_id_to_hex(w.ev_ok)}}}}};
    ProposedPartition proposal = import_partition(doc, w.table);
    CertifiedPartition cert = certify(proposal, w.table, w.sample, w.pool, w.corpus);
    std::uint32_t mem = cert.domain_of(w.ev_mem);
    CHECK(cert.rho[mem] == DomainType::pure_anomaly);
    std::uint32_t grp = cert.domain_of(w.ev_net);
    CHECK(cert.rho[grp] == DomainType::mixed);
    CHECK(cert.domain_names[grp] == "MIXEDGRP");

    // A normal-only group dissolves into universal.
    nlohmann::json dead{{"groups", {{"DEAD", {event_id_to_hex(w.ev_ok)}}}}};
    CertifiedPartition cert2 =
        certify(import_partition(dead, w.table), w.table, w.sample, w.pool, w.corpus);
    CHECK(cert2.is_universal(cert2.domain_of(w.ev_ok)));
    CHECK(cert2.domain_names.size() == 1); // only UNIVERSAL_NORMAL survives
}

TEST_CASE("pure candidates too close to the normal pool dissolve") {
    // Anomaly template shares all its tokens with the dominant normal traffic.
    Corpus corpus;
    auto push = [&](const std::string& raw, Label label, int copies) {
        for (int i = 0; i < copies; ++i) {
            LogRecord rec;
            rec.ordinal = corpus.size();
            rec.label = label;
            rec.raw = raw + " " + std::to_string(rec.ordinal);
            corpus.push_back(std::move(rec));
        }
    };
    push("service heartbeat ok state extra", Label::anomaly, 10); // same vocabulary
    push("service heartbeat ok state", Label::normal, 90);
    TemplateTable table = parse_corpus(corpus, 0, corpus.size(), DrainConfig{});
    REQUIRE(table.size() == 2);
    KShotSample sample = sample_kshot(corpus, corpus.size(), 10);
    PuNormalPool pool = build_pu_pool(corpus, corpus.size(), sample);
    nlohmann::json doc{{"groups", {{"SUS", {event_id_to_hex(*corpus[0].event_id)}}}}};
    CertifiedPartition cert =
        certify(import_partition(doc, table), table, sample, pool, corpus);
    CHECK(cert.is_universal(cert.domain_of(*corpus[0].event_id)));
}

TEST_CASE("tfidf grouping: identical templates join, disjoint ones split") {
    World w = make_world();
    ProposedPartition proposal = tfidf_grouping(w.table, w.sample);
    // mem and net anomaly templates are token-disjoint: two groups.
    std::size_t non_universal = 0;
    for (const auto& [name, events] : proposal.groups)
        if (name != kUniversalGroup && !events.empty()) ++non_universal;
    CHECK(non_universal == 2);
    // The normal-signal service event stays out of every anomaly group.
    for (const auto& [name, events] : proposal.groups)
        if (name != kUniversalGroup) CHECK(events.count(w.ev_ok) == 0);
}

TEST_CASE("tfidf grouping recovers the generator's planted domains") {
    SyntheticConfig config;
    config.lines = 8000;
    config.domains = 3;
    config.mixed_templates = 4;
    config.seed = 21;
    SyntheticCorpus data = generate_synthetic(config);
    TemplateTable table = parse_corpus(data.corpus, 0, data.corpus.size(), DrainConfig{});
    KShotSample sample = sample_kshot(data.corpus, data.corpus.size(), 100);
    ProposedPartition proposal = tfidf_grouping(table, sample);
    std::size_t groups = 0;
    for (const auto& [name, events] : proposal.groups)
        if (name != kUniversalGroup && !events.empty()) ++groups;
    // Oracle: the generator plants one mixed cluster and one fault-vocabulary
    // cluster per domain.
    CHECK(groups == 6);

    // Every group's members share one generator domain (purity check).
    for (const auto& [name, events] : proposal.groups) {
        if (name == kUniversalGroup) continue;
        std::set<std::int32_t> gen_domains;
        for (const LogRecord& rec : data.corpus) {
            if (rec.event_id && events.count(*rec.event_id) &&
                data.truth.line_domain[rec.ordinal] >= 0)
                gen_domains.insert(data.truth.line_domain[rec.ordinal]);
        }
        CHECK(gen_domains.size() == 1);
    }
}

TEST_CASE("no anomaly signals yields a universal-only proposal") {
    Corpus corpus;
    for (int i = 0; i < 30; ++i) {
        LogRecord rec;
        rec.ordinal = corpus.size();
        rec.label = Label::normal;
        rec.raw = "calm service line " + std::to_string(i % 3);
        corpus.push_back(std::move(rec));
    }
    TemplateTable table = parse_corpus(corpus, 0, corpus.size(), DrainConfig{});
    KShotSample sample = sample_kshot(corpus, corpus.size(), 5);
    ProposedPartition proposal = tfidf_grouping(table, sample);
    CHECK(proposal.groups.size() == 1);
    CHECK(proposal.groups.count("UNIVERSAL_NORMAL") == 1);
}

TEST_CASE("certification is deterministic and total") {
    World w = make_world();
    ProposedPartition proposal = tfidf_grouping(w.table, w.sample);
    CertifiedPartition a = certify(proposal, w.table, w.sample, w.pool, w.corpus);
    CertifiedPartition b = certify(proposal, w.table, w.sample, w.pool, w.corpus);
    CHECK(a.to_json() == b.to_json());
    for (const TemplateInfo& info : w.table.templates()) {
        CHECK(a.pi.count(info.event_id) == 1); // totality over offline EventIDs
    }
    // Dissolution soundness: no pure domain contains a normal-signal event.
    for (const auto& [event, domain] : a.pi) {
        if (a.rho[domain] == DomainType::pure_anomaly)
            CHECK_FALSE(w.sample.per_event.at(event).has_normal);
    }
}

TEST_CASE("re-certifying a certified partition is a fixed point") {
    World w = make_world();
    CertifiedPartition first =
        certify(tfidf_grouping(w.table, w.sample), w.table, w.sample, w.pool, w.corpus);
    // Re-express as a proposal.
    ProposedPartition again;
    again.groups[std::string(kUniversalGroup)];
    for (const auto& [event, domain] : first.pi) {
        if (!first.is_universal(domain)) again.groups[first.domain_names[domain]].insert(event);
    }
    CertifiedPartition second = certify(again, w.table, w.sample, w.pool, w.corpus);
    CHECK(first.to_json() == second.to_json());
}

TEST_CASE("certify rejects unknown EventIDs") {
    World w = make_world();
    ProposedPartition bogus;
    bogus.groups[std::string(kUniversalGroup)];
    bogus.groups["GHOST"].insert(0xfeedfacefeedfaceull);
    CHECK_THROWS(certify(bogus, w.table, w.sample, w.pool, w.corpus));
}

TEST_CASE("partition json round-trip") {
    World w = make_world();
    CertifiedPartition cert =
        certify(tfidf_grouping(w.table, w.sample), w.table, w.sample, w.pool, w.corpus);
    CertifiedPartition back = CertifiedPartition::from_json(cert.to_json());
    CHECK(back.to_json() == cert.to_json());
    CHECK(back.universal_index == cert.universal_index);
}
