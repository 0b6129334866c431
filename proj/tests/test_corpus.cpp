#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "fame/corpus.hpp"
#include "fame/rng.hpp"

using namespace fame;

TEST_CASE("loghub alert tags map to labels and are stripped") {
    std::istringstream in(
        "- 1117838570 2005.06.03 R02-M1-N0 instruction cache parity error corrected\n"
        "KERNDTLB 1117838573 2005.06.03 R02-M1-N0 data TLB error interrupt\n");
    IngestResult result = ingest_stream(in, CorpusFormat::loghub_labeled);
    REQUIRE(result.corpus.size() == 2);
    CHECK(result.corpus[0].label == Label::normal);
    CHECK(result.corpus[0].raw ==
          "1117838570 2005.06.03 R02-M1-N0 instruction cache parity error corrected");
    CHECK(result.corpus[1].label == Label::anomaly);
    CHECK(result.corpus[1].raw == "1117838573 2005.06.03 R02-M1-N0 data TLB error interrupt");
    CHECK(result.corpus[0].ordinal == 0);
    CHECK(result.corpus[1].ordinal == 1);
}

TEST_CASE("jsonl records carry numeric or null labels") {
    std::istringstream in(
        "{\"label\":1,\"msg\":\"m\"}\n"
        "{\"label\":0,\"msg\":\"ok line\"}\n"
        "{\"label\":null,\"msg\":\"no label\"}\n");
    IngestResult result = ingest_stream(in, CorpusFormat::jsonl);
    REQUIRE(result.corpus.size() == 3);
    CHECK(result.corpus[0].label == Label::anomaly);
    CHECK(result.corpus[0].raw == "m");
    CHECK(result.corpus[1].label == Label::normal);
    CHECK(result.corpus[2].label == Label::unlabeled);
}

TEST_CASE("malformed lines are skipped and counted") {
    std::istringstream in("- ok line\n\n   \nBAD tag line\n");
    IngestResult result = ingest_stream(in, CorpusFormat::loghub_labeled);
    CHECK(result.corpus.size() == 2);
    CHECK(result.skipped_malformed == 2);

    std::istringstream bad_json("not json at all\n{\"msg\":\"x\",\"label\":0}\n");
    IngestResult json_result = ingest_stream(bad_json, CorpusFormat::jsonl);
    CHECK(json_result.corpus.size() == 1);
    CHECK(json_result.skipped_malformed == 1);
}

TEST_CASE("empty input is an error") {
    std::istringstream empty("");
    CHECK_THROWS(ingest_stream(empty, CorpusFormat::loghub_labeled));
    std::istringstream only_blank("\n\n");
    CHECK_THROWS(ingest_stream(only_blank, CorpusFormat::loghub_labeled));
}

TEST_CASE("label stripping: raw never starts with the alert tag token") {
    Rng rng(42);
    std::ostringstream data;
    for (int i = 0; i < 200; ++i) {
        bool anomaly = rng.unit() < 0.3;
        data << (anomaly ? "KERNEL" : "-") << " payload line " << rng.below(1000) << "\n";
    }
    std::istringstream in(data.str());
    IngestResult result = ingest_stream(in, CorpusFormat::loghub_labeled);
    for (const LogRecord& rec : result.corpus) {
        CHECK(rec.raw.rfind("KERNEL", 0) == std::string::npos);
        CHECK(rec.raw.rfind("- ", 0) == std::string::npos);
        CHECK(rec.raw.substr(0, 7) == "payload");
    }
}

TEST_CASE("jsonl round-trip reproduces records") {
    Rng rng(7);
    Corpus corpus;
    for (std::uint64_t i = 0; i < 100; ++i) {
        LogRecord rec;
        rec.ordinal = i;
        double roll = rng.unit();
        rec.label = roll < 0.2 ? Label::anomaly : (roll < 0.9 ? Label::normal : Label::unlabeled);
        rec.raw = "line with \"quotes\" and id " + std::to_string(rng.below(1u << 20));
        corpus.push_back(rec);
    }
    std::ostringstream out;
    write_jsonl(corpus, out);
    std::istringstream in(out.str());
    IngestResult again = ingest_stream(in, CorpusFormat::jsonl);
    REQUIRE(again.corpus.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(again.corpus[i] == corpus[i]);
}

TEST_CASE("chronological split sizes") {
    Corpus corpus(100);
    for (std::uint64_t i = 0; i < corpus.size(); ++i) corpus[i].ordinal = i;
    CorpusSplit split = split_chronological(corpus, 0.85);
    CHECK(split.offline_end == 85);
    CHECK(split.test_count() == 15);

    Corpus ten(10);
    CHECK(split_chronological(ten, 0.5).offline_end == 5);

    // Paper-scale arithmetic: 4,747,963 lines at 0.85 leave 712,195 for test.
    Corpus big(4747963);
    CorpusSplit big_split = split_chronological(big, 0.85);
    CHECK(big_split.test_count() == 712195);
}

TEST_CASE("split rejects degenerate inputs") {
    Corpus one(1);
    CHECK_THROWS(split_chronological(one, 0.85));
    Corpus ok(10);
    CHECK_THROWS(split_chronological(ok, 0.0));
    CHECK_THROWS(split_chronological(ok, 1.0));
}

TEST_CASE("split is deterministic") {
    Corpus corpus(12345);
    CorpusSplit a = split_chronological(corpus, 0.85);
    CorpusSplit b = split_chronological(corpus, 0.85);
    CHECK(a.offline_end == b.offline_end);
    CHECK(a.offline_end == 10493);
}

TEST_CASE("event id hex round-trip") {
    for (EventId id : {EventId{0}, EventId{1}, EventId{0xdeadbeefcafef00dull}, EventId{UINT64_MAX}}) {
        auto parsed = event_id_from_hex(event_id_to_hex(id));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == id);
    }
    CHECK_FALSE(event_id_from_hex("").has_value());
    CHECK_FALSE(event_id_from_hex("zz").has_value());
    CHECK_FALSE(event_id_from_hex("0123456789abcdef0").has_value());
}
