#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fame/kshot.hpp"
#include "fame/rng.hpp"

using namespace fame;

namespace {

// Single-event corpus helper: labels by ordinal, one synthetic EventID.
Corpus corpus_with(const std::vector<std::pair<std::uint64_t, Label>>& lines, EventId event = 1) {
    Corpus corpus;
    std::uint64_t max_ord = 0;
    for (const auto& [ord, label] : lines) max_ord = std::max(max_ord, ord);
    corpus.resize(max_ord + 1);
    for (std::uint64_t i = 0; i <= max_ord; ++i) {
        corpus[i].ordinal = i;
        corpus[i].label = Label::unlabeled;
        corpus[i].event_id = event;
        corpus[i].raw = "line " + std::to_string(i);
    }
    for (const auto& [ord, label] : lines) corpus[ord].label = label;
    return corpus;
}

} // namespace

TEST_CASE("most recent K with 80/20 chronological split") {
    Corpus corpus = corpus_with({{1, Label::normal},
                                 {5, Label::normal},
                                 {9, Label::normal},
                                 {12, Label::anomaly},
                                 {20, Label::normal}});
    KShotSample sample = sample_kshot(corpus, corpus.size(), 3);
    const EventSample& es = sample.per_event.at(1);
    CHECK(es.train_ordinals == std::vector<std::uint64_t>{9, 12});
    CHECK(es.calib_ordinals == std::vector<std::uint64_t>{20});
    CHECK(es.has_normal);
    CHECK(es.has_anomaly);
    CHECK(es.rep_normal == 20);  // most recent sampled normal
    CHECK(es.rep_anomaly == 12); // most recent sampled anomaly
}

TEST_CASE("tiny samples: one line goes to train, two lines split 1/1") {
    Corpus one = corpus_with({{4, Label::anomaly}});
    EventSample es1 = sample_kshot(one, one.size(), 100).per_event.at(1);
    CHECK(es1.train_ordinals == std::vector<std::uint64_t>{4});
    CHECK(es1.calib_ordinals.empty());

    Corpus two = corpus_with({{3, Label::normal}, {8, Label::anomaly}});
    EventSample es2 = sample_kshot(two, two.size(), 100).per_event.at(1);
    CHECK(es2.train_ordinals == std::vector<std::uint64_t>{3});
    CHECK(es2.calib_ordinals == std::vector<std::uint64_t>{8});
}

TEST_CASE("all-anomalous sample flags signals and drops the normal rep") {
    Corpus corpus = corpus_with({{0, Label::anomaly}, {1, Label::anomaly}, {2, Label::anomaly}});
    EventSample es = sample_kshot(corpus, corpus.size(), 10).per_event.at(1);
    CHECK_FALSE(es.has_normal);
    CHECK(es.has_anomaly);
    CHECK_FALSE(es.rep_normal.has_value());
    CHECK(es.rep_anomaly == 2);
}

TEST_CASE("event with only unlabeled lines is present with empty sample") {
    Corpus corpus(3);
    for (std::uint64_t i = 0; i < 3; ++i) {
        corpus[i].ordinal = i;
        corpus[i].label = Label::unlabeled;
        corpus[i].event_id = 42;
    }
    KShotSample sample = sample_kshot(corpus, 3, 5);
    const EventSample& es = sample.per_event.at(42);
    CHECK(es.total() == 0);
    CHECK_FALSE(es.has_normal);
    CHECK_FALSE(es.has_anomaly);
}

TEST_CASE("budget and chronology properties over random corpora") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        Corpus corpus;
        std::size_t n = 50 + rng.below(200);
        for (std::uint64_t i = 0; i < n; ++i) {
            LogRecord rec;
            rec.ordinal = i;
            rec.event_id = rng.below(5);
            rec.label = rng.unit() < 0.3 ? Label::anomaly : Label::normal;
            corpus.push_back(rec);
        }
        std::size_t k = 1 + rng.below(20);
        KShotSample sample = sample_kshot(corpus, n, k);
        for (const auto& [event, es] : sample.per_event) {
            CHECK(es.total() <= k);
            if (!es.train_ordinals.empty() && !es.calib_ordinals.empty())
                CHECK(es.train_ordinals.back() < es.calib_ordinals.front());
        }
        // Pool complement: PU pool and sampled anomalies partition the region.
        PuNormalPool pool = build_pu_pool(corpus, n, sample);
        std::set<std::uint64_t> sampled_anomalies;
        for (const auto& [event, es] : sample.per_event) {
            for (std::uint64_t ord : es.train_ordinals)
                if (corpus[ord].label == Label::anomaly) sampled_anomalies.insert(ord);
            for (std::uint64_t ord : es.calib_ordinals)
                if (corpus[ord].label == Label::anomaly) sampled_anomalies.insert(ord);
        }
        CHECK(pool.ordinals.size() + sampled_anomalies.size() == n);
        for (std::uint64_t ord : pool.ordinals) CHECK(sampled_anomalies.count(ord) == 0);
    }
}

TEST_CASE("pool examples") {
    // 10 offline lines, 2 sampled anomalies -> pool of 8.
    Corpus corpus = corpus_with({{2, Label::anomaly}, {7, Label::anomaly}});
    corpus.resize(10);
    for (std::uint64_t i = 0; i < 10; ++i) {
        corpus[i].ordinal = i;
        corpus[i].event_id = 1;
        if (i != 2 && i != 7 && corpus[i].label == Label::unlabeled)
            corpus[i].label = Label::normal;
    }
    KShotSample sample = sample_kshot(corpus, 10, 100);
    PuNormalPool pool = build_pu_pool(corpus, 10, sample);
    CHECK(pool.ordinals.size() == 8);

    // No anomalies sampled -> pool is the whole offline region.
    Corpus clean(6);
    for (std::uint64_t i = 0; i < 6; ++i) {
        clean[i].ordinal = i;
        clean[i].label = Label::normal;
        clean[i].event_id = 9;
    }
    KShotSample clean_sample = sample_kshot(clean, 6, 3);
    CHECK(build_pu_pool(clean, 6, clean_sample).ordinals.size() == 6);
}

TEST_CASE("labeling cost: saturation and exact reduction arithmetic") {
    Corpus corpus(1000);
    Rng rng(3);
    for (std::uint64_t i = 0; i < 1000; ++i) {
        corpus[i].ordinal = i;
        corpus[i].event_id = rng.below(10);
        corpus[i].label = Label::normal;
    }
    auto rows = labeling_cost_report(corpus, 1000, {5, 50, 5000});
    CHECK(rows[0].labels == 50); // 10 events x 5
    CHECK(rows[0].reduction == 20);
    CHECK(rows[2].labels == 1000); // saturated: every labeled line
    CHECK(rows[2].reduction == 1);
    for (const auto& row : rows) {
        double exact = static_cast<double>(1000) / static_cast<double>(row.labels);
        CHECK(row.reduction == static_cast<std::uint64_t>(std::llround(exact)));
    }
}

TEST_CASE("kshot serializes to an audit document") {
    Corpus corpus = corpus_with({{0, Label::normal}, {1, Label::anomaly}, {2, Label::normal}});
    KShotSample sample = sample_kshot(corpus, corpus.size(), 2);
    nlohmann::json doc = sample.to_json();
    CHECK(doc["k"] == 2);
    CHECK(doc["events"].size() == 1);
    CHECK(doc["events"][0].contains("train_ordinals"));
    CHECK(doc["events"][0]["has_anomaly"] == true);
}
