#include "skillatlas/aggregate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>
#include <unordered_map>

#include "skillatlas/csv.hpp"
#include "skillatlas/error.hpp"
#include "skillatlas/util.hpp"

namespace skillatlas {

std::optional<GroupKey> group_key(const SyllabusRecord& rec, std::string* reason) {
  auto fail = [&](const char* why) -> std::optional<GroupKey> {
    if (reason) *reason = why;
    return std::nullopt;
  };
  GroupKey key;
  if (rec.unit_id) {
    key.unit = *rec.unit_id;
  } else if (!trim(rec.institution_name).empty()) {
    key.unit = "name:" + normalize_text(rec.institution_name);
    key.unit_from_name = true;
  } else {
    return fail("missing unit_id and institution_name");
  }
  if (rec.field_code) {
    key.field = *rec.field_code;
  } else if (rec.field_name) {
    key.field = *rec.field_name;
  } else {
    return fail("missing field_code and field_name");
  }
  if (!rec.year) return fail("missing year");
  key.year = *rec.year;
  return key;
}

std::string make_record_id(const GroupKey& key) {
  return sha256_hex(key.unit + "|" + key.field + "|" + std::to_string(key.year)).substr(0, 16);
}

std::string fos_label(const SyllabusRecord& rec) {
  if (rec.field_name) return *rec.field_name;
  if (rec.field_code) return *rec.field_code;
  return std::string(kMissingBucket);
}

namespace {

using MetaIndex = std::unordered_map<std::string, const SyllabusRecord*>;

MetaIndex index_corpus(std::span<const SyllabusRecord> corpus) {
  MetaIndex idx;
  idx.reserve(corpus.size());
  for (const auto& r : corpus) idx.emplace(r.syllabus_id, &r);
  return idx;
}

struct Member {
  const SkillVector* vec;
  const SyllabusRecord* meta;
};

}  // namespace

AggregateResult aggregate(std::span<const SkillVector> vectors, std::span<const SyllabusRecord> corpus) {
  AggregateResult res;
  if (vectors.empty()) return res;
  require_uniform(vectors, vectors.front().kind, vectors.front().scores.size());
  const MetaIndex idx = index_corpus(corpus);

  std::map<GroupKey, std::vector<Member>> groups;
  std::set<std::string> name_fallbacks;
  for (const auto& v : vectors) {
    auto it = idx.find(v.syllabus_id);
    if (it == idx.end()) {
      res.exceptions.push_back({v.syllabus_id, "no metadata for syllabus"});
      continue;
    }
    std::string reason;
    auto key = group_key(*it->second, &reason);
    if (!key) {
      res.exceptions.push_back({v.syllabus_id, reason});
      continue;
    }
    if (key->unit_from_name) name_fallbacks.insert(it->second->institution_name);
    groups[*key].push_back({&v, it->second});
  }
  for (const auto& name : name_fallbacks) {
    res.warnings.push_back("no unit_id for institution '" + name + "'; grouped by normalized name");
  }

  const std::size_t dim = vectors.front().scores.size();
  std::vector<double> column;
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(),
              [](const Member& a, const Member& b) { return a.vec->syllabus_id < b.vec->syllabus_id; });
    const SyllabusRecord& head = *members.front().meta;
    AggregateRecord rec;
    rec.record_id = make_record_id(key);
    rec.year = key.year;
    rec.institution_name = head.institution_name;
    rec.unit_id = head.unit_id;
    rec.city = head.city;
    rec.state = head.state;
    rec.field_name = head.field_name;
    rec.field_code = head.field_code;
    rec.sector = head.sector;
    rec.n_syllabi = members.size();
    rec.mean_scores.resize(dim);
    column.resize(members.size());
    for (std::size_t s = 0; s < dim; ++s) {
      for (std::size_t i = 0; i < members.size(); ++i) column[i] = members[i].vec->scores[s];
      rec.mean_scores[s] = pairwise_sum(column) / static_cast<double>(members.size());
    }
    res.records.push_back(std::move(rec));
  }
  return res;
}

DedupReport dedup_report(std::span<const SkillVector> vectors, std::span<const SyllabusRecord> corpus, int decimals) {
  if (!vectors.empty()) require_uniform(vectors, vectors.front().kind, vectors.front().scores.size());
  if (decimals < 0 || decimals > 15) throw Error(Errc::InvalidArgument, "quantization decimals must be in [0, 15]");
  const double scale = std::pow(10.0, decimals);
  const MetaIndex idx = index_corpus(corpus);

  using Quantized = std::vector<long long>;
  struct Bucket {
    std::size_t size = 0;
    std::set<Quantized> distinct;
  };
  std::map<std::pair<std::string, std::string>, Bucket> by_unit_fos;
  std::map<GroupKey, Bucket> by_unit_fos_year;
  std::map<std::pair<std::string, std::string>, std::string> fos_of_pair;

  DedupReport rep;
  for (const auto& v : vectors) {
    auto it = idx.find(v.syllabus_id);
    std::optional<GroupKey> key;
    if (it != idx.end()) key = group_key(*it->second);
    if (!key) {
      ++rep.n_skipped;
      continue;
    }
    Quantized q(v.scores.size());
    for (std::size_t s = 0; s < v.scores.size(); ++s) q[s] = std::llround(v.scores[s] * scale);
    const auto pair = std::make_pair(key->unit, key->field);
    auto& a = by_unit_fos[pair];
    ++a.size;
    a.distinct.insert(q);
    auto& b = by_unit_fos_year[*key];
    ++b.size;
    b.distinct.insert(std::move(q));
    fos_of_pair.try_emplace(pair, fos_label(*it->second));
  }

  for (const auto& [pair, bucket] : by_unit_fos) {
    const std::size_t dups = bucket.size - bucket.distinct.size();
    rep.unit_fos.n_total += bucket.size;
    rep.unit_fos.n_duplicates += dups;
    auto& f = rep.per_fos[fos_of_pair.at(pair)];
    f.n_syllabi += bucket.size;
    f.total += dups;
  }
  for (const auto& [key, bucket] : by_unit_fos_year) {
    const std::size_t dups = bucket.size - bucket.distinct.size();
    rep.unit_fos_year.n_total += bucket.size;
    rep.unit_fos_year.n_duplicates += dups;
    rep.per_fos[fos_of_pair.at({key.unit, key.field})].within_year += dups;
  }
  for (auto& [fos, f] : rep.per_fos) f.across_years = f.total - f.within_year;
  auto frac = [](DuplicateCounts& c) {
    c.fraction = c.n_total == 0 ? 0.0 : static_cast<double>(c.n_duplicates) / static_cast<double>(c.n_total);
  };
  frac(rep.unit_fos);
  frac(rep.unit_fos_year);
  return rep;
}

std::string dedup_report_to_json(const DedupReport& report) {
  nlohmann::ordered_json j;
  auto counts = [](const DuplicateCounts& c) {
    return nlohmann::ordered_json{{"n_total", c.n_total}, {"n_duplicates", c.n_duplicates}, {"fraction", c.fraction}};
  };
  j["unit_fos"] = counts(report.unit_fos);
  j["unit_fos_year"] = counts(report.unit_fos_year);
  j["across_years_fraction"] = report.unit_fos.fraction - report.unit_fos_year.fraction;
  j["n_skipped"] = report.n_skipped;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [fos, f] : report.per_fos) {
    per[fos] = {{"n_syllabi", f.n_syllabi},
                {"total", f.total},
                {"within_year", f.within_year},
                {"across_years", f.across_years}};
  }
  j["per_fos"] = per;
  return j.dump(2) + "\n";
}

std::string dedup_per_fos_csv(const DedupReport& report) {
  std::string out = csv::join_line({"field", "n_syllabi", "total", "within_year", "across_years"});
  for (const auto& [fos, f] : report.per_fos) {
    out += csv::join_line({fos, std::to_string(f.n_syllabi), std::to_string(f.total), std::to_string(f.within_year),
                           std::to_string(f.across_years)});
  }
  return out;
}

std::string aggregate_metadata_csv(std::span<const AggregateRecord> records) {
  std::string out = csv::join_line({"record_id", "year", "institution_name", "unit_id", "city", "state", "field_name",
                                    "field_code", "sector", "n_syllabi"});
  for (const auto& r : records) {
    out += csv::join_line({r.record_id, std::to_string(r.year), r.institution_name, r.unit_id.value_or(""),
                           r.city.value_or(""), r.state.value_or(""), r.field_name.value_or(""),
                           r.field_code.value_or(""), r.sector.value_or(""), std::to_string(r.n_syllabi)});
  }
  return out;
}

std::string aggregate_scores_csv(std::span<const AggregateRecord> records, const SkillTaxonomy& taxonomy) {
  std::vector<std::string> header = {"record_id"};
  for (const auto& e : taxonomy.entries) header.push_back(e.skill_id);
  std::string out = csv::join_line(header);
  std::vector<std::string> row;
  for (const auto& r : records) {
    row.assign(1, r.record_id);
    for (double s : r.mean_scores) row.push_back(format_double(s));
    out += csv::join_line(row);
  }
  return out;
}

namespace {

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) throw Error(Errc::MalformedInput, "not a number '" + s + "' in " + where);
  return v;
}

std::optional<std::string> opt(const std::string& s) {
  if (trim(s).empty()) return std::nullopt;
  return s;
}

}  // namespace

std::vector<AggregateRecord> read_aggregates(const std::filesystem::path& metadata_csv,
                                             const std::filesystem::path& scores_csv, const SkillTaxonomy& taxonomy) {
  const auto meta = csv::read(metadata_csv, ',');
  const auto scores = csv::read(scores_csv, ',');
  if (scores.header.size() != taxonomy.size() + 1) {
    throw Error(Errc::TaxonomyMismatch, scores_csv.string() + " has " + std::to_string(scores.header.size() - 1) +
                                            " skill columns, taxonomy has " + std::to_string(taxonomy.size()));
  }
  for (std::size_t s = 0; s < taxonomy.size(); ++s) {
    if (scores.header[s + 1] != taxonomy.entries[s].skill_id) {
      throw Error(Errc::TaxonomyMismatch, scores_csv.string() + " column " + std::to_string(s + 1) + " is '" +
                                              scores.header[s + 1] + "', expected '" + taxonomy.entries[s].skill_id +
                                              "'");
    }
  }
  std::unordered_map<std::string, std::vector<double>> by_id;
  for (const auto& row : scores.rows) {
    if (row.fields.size() != scores.header.size()) {
      throw Error(Errc::MalformedInput, scores_csv.string() + " line " + std::to_string(row.line_no) + ": column count");
    }
    std::vector<double> v(taxonomy.size());
    for (std::size_t s = 0; s < taxonomy.size(); ++s) v[s] = parse_double(row.fields[s + 1], scores_csv.string());
    by_id.emplace(row.fields[0], std::move(v));
  }
  std::vector<AggregateRecord> out;
  for (const auto& row : meta.rows) {
    if (row.fields.size() != 10) {
      throw Error(Errc::MalformedInput, metadata_csv.string() + " line " + std::to_string(row.line_no) + ": column count");
    }
    AggregateRecord r;
    r.record_id = row.fields[0];
    r.year = static_cast<int>(parse_double(row.fields[1], metadata_csv.string()));
    r.institution_name = row.fields[2];
    r.unit_id = opt(row.fields[3]);
    r.city = opt(row.fields[4]);
    r.state = opt(row.fields[5]);
    r.field_name = opt(row.fields[6]);
    r.field_code = opt(row.fields[7]);
    r.sector = opt(row.fields[8]);
    r.n_syllabi = static_cast<std::size_t>(parse_double(row.fields[9], metadata_csv.string()));
    auto it = by_id.find(r.record_id);
    if (it == by_id.end()) throw Error(Errc::MalformedInput, "no scores for record " + r.record_id);
    r.mean_scores = it->second;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace skillatlas
