#include "skillatlas/corpus.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <nlohmann/json.hpp>
#include <set>

#include "skillatlas/error.hpp"
#include "skillatlas/util.hpp"

namespace skillatlas {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 10> kSectors = {
    "Public, 4-year or above",
    "Private not-for-profit, 4-year or above",
    "Private for-profit, 4-year or above",
    "Public, 2-year",
    "Private not-for-profit, 2-year",
    "Private for-profit, 2-year",
    "Public, less-than 2-year",
    "Private not-for-profit, less-than 2-year",
    "Private for-profit, less-than 2-year",
    "Not Classified",
};

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<std::string> non_empty(std::string_view s) {
  auto t = trim(s);
  if (t.empty()) return std::nullopt;
  return std::string(t);
}

std::optional<int> parse_year(std::string_view s) {
  s = trim(s);
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument("year is not an integer");
  return v;
}

// Returns nullopt for missing/null; throws std::invalid_argument on wrong type.
std::optional<std::string> json_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return non_empty(it->get_ref<const std::string&>());
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw std::invalid_argument(std::string("field '") + key + "' must be a string");
}

SyllabusRecord record_from_json(const json& obj) {
  if (!obj.is_object()) throw std::invalid_argument("row is not a JSON object");
  SyllabusRecord rec;
  rec.syllabus_id = json_string(obj, "syllabus_id").value_or("");
  if (auto it = obj.find("text"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw std::invalid_argument("field 'text' must be a string");
    rec.text = it->get<std::string>();
  }
  if (auto it = obj.find("year"); it != obj.end() && !it->is_null()) {
    if (it->is_number_integer()) {
      rec.year = it->get<int>();
    } else if (it->is_string()) {
      if (!trim(it->get_ref<const std::string&>()).empty()) rec.year = parse_year(it->get_ref<const std::string&>());
    } else {
      throw std::invalid_argument("field 'year' must be an integer");
    }
  }
  rec.institution_name = json_string(obj, "institution_name").value_or("");
  rec.unit_id = json_string(obj, "unit_id");
  rec.city = json_string(obj, "city");
  rec.state = json_string(obj, "state");
  rec.field_name = json_string(obj, "field_name");
  rec.field_code = json_string(obj, "field_code");
  rec.sector = json_string(obj, "sector");
  return rec;
}

}  // namespace

std::span<const std::string_view> known_sectors() noexcept { return kSectors; }

bool is_valid_cip_code(std::string_view code) noexcept {
  if (code.empty()) return false;
  std::size_t start = 0;
  while (start <= code.size()) {
    const auto slash = code.find('/', start);
    const auto tok = code.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start);
    const bool ok = (tok.size() == 2 && all_digits(tok)) ||
                    (tok.size() == 5 && tok[2] == '.' && all_digits(tok.substr(0, 2)) && all_digits(tok.substr(3))) ||
                    (tok.size() == 7 && tok[2] == '.' && all_digits(tok.substr(0, 2)) && all_digits(tok.substr(3)));
    if (!ok) return false;
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return true;
}

std::optional<std::string> validate_record(const SyllabusRecord& rec) {
  if (trim(rec.syllabus_id).empty()) return "missing syllabus_id";
  if (trim(rec.text).empty()) return "empty text";
  if (rec.year && (*rec.year < 1900 || *rec.year > 2100)) return "year out of range [1900, 2100]";
  if (rec.field_code && !is_valid_cip_code(*rec.field_code)) return "field_code is not a CIP code list";
  if (rec.sector && std::find(kSectors.begin(), kSectors.end(), *rec.sector) == kSectors.end()) {
    return "unknown sector '" + *rec.sector + "'";
  }
  return std::nullopt;
}

CorpusFormat corpus_format_from_path(const std::filesystem::path& path) {
  return to_lower_ascii(path.extension().string()) == ".csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl;
}

CorpusReader::CorpusReader(const std::filesystem::path& path, CorpusFormat format) : format_(format) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(Errc::FileNotFound, "corpus file not found: " + path.string());
  }
  if (format_ == CorpusFormat::Jsonl) {
    in_.open(path, std::ios::binary);
    if (!in_) throw Error(Errc::FileNotFound, "cannot open corpus: " + path.string());
  } else {
    csv_ = csv::read(path, ',');
    if (!csv_.header.empty() && (!csv_.find_column("syllabus_id") || !csv_.find_column("text"))) {
      throw Error(Errc::MalformedInput, "corpus CSV needs 'syllabus_id' and 'text' columns");
    }
  }
}

bool CorpusReader::accept(SyllabusRecord& rec, std::size_t line_no) {
  if (auto why = validate_record(rec)) {
    report_.errors.push_back({line_no, *why});
    return false;
  }
  auto [it, inserted] = seen_ids_.try_emplace(rec.syllabus_id, line_no);
  if (!inserted) {
    report_.errors.push_back({line_no, "duplicate syllabus_id '" + rec.syllabus_id + "' (first on line " +
                                           std::to_string(it->second) + ")"});
    return false;
  }
  return true;
}

std::optional<SyllabusRecord> CorpusReader::next() {
  return format_ == CorpusFormat::Jsonl ? next_jsonl() : next_csv();
}

std::optional<SyllabusRecord> CorpusReader::next_jsonl() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (trim(line).empty()) continue;
    ++report_.n_rows;
    SyllabusRecord rec;
    try {
      rec = record_from_json(json::parse(line));
    } catch (const std::exception& e) {
      report_.errors.push_back({line_no_, e.what()});
      continue;
    }
    if (accept(rec, line_no_)) return rec;
  }
  return std::nullopt;
}

std::optional<SyllabusRecord> CorpusReader::next_csv() {
  while (csv_pos_ < csv_.rows.size()) {
    const csv::Row& row = csv_.rows[csv_pos_++];
    ++report_.n_rows;
    if (row.fields.size() != csv_.header.size()) {
      report_.errors.push_back({row.line_no, "expected " + std::to_string(csv_.header.size()) + " columns, got " +
                                                 std::to_string(row.fields.size())});
      continue;
    }
    auto get = [&](const char* name) -> std::optional<std::string> {
      auto idx = csv_.find_column(name);
      if (!idx) return std::nullopt;
      return non_empty(row.fields[*idx]);
    };
    SyllabusRecord rec;
    try {
      rec.syllabus_id = get("syllabus_id").value_or("");
      if (auto idx = csv_.find_column("text")) rec.text = row.fields[*idx];
      if (auto y = get("year")) rec.year = parse_year(*y);
    } catch (const std::exception& e) {
      report_.errors.push_back({row.line_no, e.what()});
      continue;
    }
    rec.institution_name = get("institution_name").value_or("");
    rec.unit_id = get("unit_id");
    rec.city = get("city");
    rec.state = get("state");
    rec.field_name = get("field_name");
    rec.field_code = get("field_code");
    rec.sector = get("sector");
    if (accept(rec, row.line_no)) return rec;
  }
  return std::nullopt;
}

LoadedCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format, const LoadOptions& options) {
  CorpusReader reader(path, format);
  LoadedCorpus out;
  while (auto rec = reader.next()) out.records.push_back(std::move(*rec));
  out.report = reader.report();
  if (out.report.malformed_fraction() > options.max_malformed_fraction) {
    const auto& first = out.report.errors.front();
    throw Error(Errc::TooManyMalformedRows,
                std::to_string(out.report.errors.size()) + " of " + std::to_string(out.report.n_rows) +
                    " rows malformed in " + path.string() + " (first: line " + std::to_string(first.line_no) + ": " +
                    first.reason + ")");
  }
  return out;
}

std::string record_to_json(const SyllabusRecord& rec) {
  json j = json::object();
  j["syllabus_id"] = rec.syllabus_id;
  j["text"] = rec.text;
  if (rec.year) j["year"] = *rec.year;
  j["institution_name"] = rec.institution_name;
  auto put = [&](const char* key, const std::optional<std::string>& v) {
    if (v) j[key] = *v;
  };
  put("unit_id", rec.unit_id);
  put("city", rec.city);
  put("state", rec.state);
  put("field_name", rec.field_name);
  put("field_code", rec.field_code);
  put("sector", rec.sector);
  return j.dump();
}

bool CorpusStats::operator==(const CorpusStats& o) const {
  auto same_summary = [](const std::optional<CountSummary>& a, const std::optional<CountSummary>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->mean == b->mean && a->median == b->median && a->p25 == b->p25 && a->p75 == b->p75;
  };
  return n_syllabi == o.n_syllabi && per_fos == o.per_fos && per_year == o.per_year && per_state == o.per_state &&
         per_sector == o.per_sector && same_summary(sentence_count_summary, o.sentence_count_summary);
}

CorpusStats corpus_stats(std::span<const SyllabusRecord> corpus) {
  CorpusStats stats;
  const std::string missing(kMissingBucket);
  for (const auto& rec : corpus) {
    ++stats.n_syllabi;
    ++stats.per_fos[rec.field_name.value_or(missing)];
    ++stats.per_year[rec.year ? std::to_string(*rec.year) : missing];
    ++stats.per_state[rec.state.value_or(missing)];
    ++stats.per_sector[rec.sector.value_or(missing)];
  }
  return stats;
}

CountSummary summarize_counts(std::span<const std::size_t> counts) {
  CountSummary s;
  if (counts.empty()) return s;
  std::vector<double> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  s.mean = pairwise_sum(sorted) / static_cast<double>(sorted.size());
  s.median = percentile_sorted(sorted, 50.0);
  s.p25 = percentile_sorted(sorted, 25.0);
  s.p75 = percentile_sorted(sorted, 75.0);
  return s;
}

std::string stats_to_json(const CorpusStats& stats) {
  json j;
  j["n_syllabi"] = stats.n_syllabi;
  j["per_fos"] = stats.per_fos;
  j["per_year"] = stats.per_year;
  j["per_state"] = stats.per_state;
  j["per_sector"] = stats.per_sector;
  if (stats.sentence_count_summary) {
    const auto& s = *stats.sentence_count_summary;
    j["sentence_count_summary"] = {{"mean", s.mean}, {"median", s.median}, {"p25", s.p25}, {"p75", s.p75}};
  } else {
    j["sentence_count_summary"] = nullptr;
  }
  return j.dump(2) + "\n";
}

PhraseList parse_phrase_list(std::string_view text) {
  PhraseList out;
  std::set<std::string, std::less<>> seen;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::string phrase = normalize_text(t);
    if (seen.insert(phrase).second) out.push_back(std::move(phrase));
  }
  if (out.empty()) throw Error(Errc::EmptyList, "phrase list contains no phrases");
  return out;
}

PhraseList load_phrase_list(const std::filesystem::path& path) {
  try {
    return parse_phrase_list(read_file(path));
  } catch (const Error& e) {
    if (e.code() == Errc::EmptyList) throw Error(Errc::EmptyList, "phrase list is empty: " + path.string());
    throw;
  }
}

std::string serialize_phrase_list(const PhraseList& list) {
  std::string out;
  for (const auto& p : list) {
    out += p;
    out.push_back('\n');
  }
  return out;
}

}  // namespace skillatlas
