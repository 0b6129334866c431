#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fame {

enum class Label : std::uint8_t { normal, anomaly, unlabeled };

// Content hash of the final template token sequence (see drain.hpp).
using EventId = std::uint64_t;

std::string event_id_to_hex(EventId id);
std::optional<EventId> event_id_from_hex(std::string_view hex);

// One raw log message. `ordinal` is the 0-based file position and doubles as
// the chronological axis; `raw` never contains the original alert tag.
struct LogRecord {
    std::uint64_t ordinal = 0;
    Label label = Label::unlabeled;
    std::string raw;
    std::optional<EventId> event_id;

    bool operator==(const LogRecord& other) const {
        return ordinal == other.ordinal && label == other.label && raw == other.raw;
    }
};

using Corpus = std::vector<LogRecord>;

enum class CorpusFormat { loghub_labeled, jsonl };

std::optional<CorpusFormat> corpus_format_from_string(std::string_view name);
std::string_view to_string(CorpusFormat format);
std::string_view to_string(Label label);

struct IngestResult {
    Corpus corpus;
    std::size_t skipped_malformed = 0;
};

IngestResult ingest(const std::string& path, CorpusFormat format);
IngestResult ingest_stream(std::istream& in, CorpusFormat format);

// Chronological split: offline = [0, offline_end), test = [offline_end, size).
struct CorpusSplit {
    std::size_t offline_end = 0;
    std::size_t size = 0;
    double offline_fraction = 0.85;

    std::size_t offline_count() const { return offline_end; }
    std::size_t test_count() const { return size - offline_end; }
};

CorpusSplit split_chronological(const Corpus& corpus, double offline_fraction);

void write_jsonl(const Corpus& corpus, std::ostream& out);

} // namespace fame
