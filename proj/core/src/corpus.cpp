#include "fame/corpus.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace fame {

std::string event_id_to_hex(EventId id) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[id & 0xf];
        id >>= 4;
    }
    return out;
}

std::optional<EventId> event_id_from_hex(std::string_view hex) {
    if (hex.empty() || hex.size() > 16) return std::nullopt;
    EventId value = 0;
    auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), value, 16);
    if (ec != std::errc{} || ptr != hex.data() + hex.size()) return std::nullopt;
    return value;
}

std::optional<CorpusFormat> corpus_format_from_string(std::string_view name) {
    if (name == "loghub_labeled") return CorpusFormat::loghub_labeled;
    if (name == "jsonl") return CorpusFormat::jsonl;
    return std::nullopt;
}

std::string_view to_string(CorpusFormat format) {
    switch (format) {
    case CorpusFormat::loghub_labeled: return "loghub_labeled";
    case CorpusFormat::jsonl: return "jsonl";
    }
    return "?";
}

std::string_view to_string(Label label) {
    switch (label) {
    case Label::normal: return "normal";
    case Label::anomaly: return "anomaly";
    case Label::unlabeled: return "unlabeled";
    }
    return "?";
}

namespace {

bool parse_loghub_line(std::string_view line, LogRecord& rec) {
    std::size_t tag_begin = line.find_first_not_of(" \t\r");
    if (tag_begin == std::string_view::npos) return false;
    std::size_t tag_end = line.find_first_of(" \t\r", tag_begin);
    std::string_view tag = line.substr(tag_begin, tag_end == std::string_view::npos
                                                      ? std::string_view::npos
                                                      : tag_end - tag_begin);
    rec.label = (tag == "-") ? Label::normal : Label::anomaly;
    if (tag_end == std::string_view::npos) {
        rec.raw.clear();
        return true;
    }
    std::size_t rest = line.find_first_not_of(" \t\r", tag_end);
    rec.raw = (rest == std::string_view::npos) ? std::string{} : std::string(line.substr(rest));
    return true;
}

bool parse_jsonl_line(std::string_view line, LogRecord& rec) {
    nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("msg") || !doc["msg"].is_string())
        return false;
    if (!doc.contains("label") || doc["label"].is_null()) {
        rec.label = Label::unlabeled;
    } else if (doc["label"].is_number()) {
        rec.label = doc["label"].get<int>() != 0 ? Label::anomaly : Label::normal;
    } else {
        return false;
    }
    rec.raw = doc["msg"].get<std::string>();
    return true;
}

} // namespace

IngestResult ingest_stream(std::istream& in, CorpusFormat format) {
    IngestResult result;
    std::string line;
    std::uint64_t ordinal = 0;
    bool saw_any_line = false;
    while (std::getline(in, line)) {
        saw_any_line = true;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        LogRecord rec;
        bool ok = format == CorpusFormat::loghub_labeled ? parse_loghub_line(line, rec)
                                                         : parse_jsonl_line(line, rec);
        if (!ok) {
            ++result.skipped_malformed;
            continue;
        }
        rec.ordinal = ordinal++;
        result.corpus.push_back(std::move(rec));
    }
    if (!saw_any_line || result.corpus.empty())
        throw std::runtime_error("corpus: input contains no parseable records");
    return result;
}

IngestResult ingest(const std::string& path, CorpusFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("corpus: cannot open " + path);
    return ingest_stream(in, format);
}

CorpusSplit split_chronological(const Corpus& corpus, double offline_fraction) {
    if (corpus.size() < 2)
        throw std::runtime_error("corpus: need at least 2 records to split");
    if (!(offline_fraction > 0.0 && offline_fraction < 1.0))
        throw std::runtime_error("corpus: offline_fraction must be in (0,1)");
    CorpusSplit split;
    split.size = corpus.size();
    split.offline_fraction = offline_fraction;
    // Nudge before flooring so that mathematically exact products (100 * 0.85)
    // are not pushed down a line by the binary representation of the fraction.
    split.offline_end = static_cast<std::size_t>(
        std::floor(static_cast<double>(corpus.size()) * offline_fraction + 1e-6));
    return split;
}

void write_jsonl(const Corpus& corpus, std::ostream& out) {
    for (const LogRecord& rec : corpus) {
        nlohmann::json doc;
        if (rec.label == Label::unlabeled)
            doc["label"] = nullptr;
        else
            doc["label"] = rec.label == Label::anomaly ? 1 : 0;
        doc["msg"] = rec.raw;
        out << doc.dump() << '\n';
    }
}

} // namespace fame
