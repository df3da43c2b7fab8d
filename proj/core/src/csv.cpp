#include "skillatlas/csv.hpp"

#include "skillatlas/error.hpp"
#include "skillatlas/util.hpp"

namespace skillatlas::csv {

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  return find_column({name});
}

std::optional<std::size_t> Table::find_column(std::initializer_list<std::string_view> aliases) const {
  for (std::string_view alias : aliases) {
    const std::string want = to_lower_ascii(alias);
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (to_lower_ascii(trim(header[i])) == want) return i;
    }
  }
  return std::nullopt;
}

Table parse(std::string_view text, char delimiter) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  if (delimiter == 0) {
    const auto eol = text.find('\n');
    delimiter = text.substr(0, eol).find('\t') != std::string_view::npos ? '\t' : ',';
  }

  std::vector<Row> records;
  Row current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line_no = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = Row{};
    current.line_no = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\r') {
      // swallowed; \n terminates the record
    } else if (c == '\n') {
      ++line;
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw Error(Errc::MalformedInput, "unterminated quoted field starting near line " + std::to_string(current.line_no));
  if (field_started || !field.empty() || !current.fields.empty()) end_record();

  Table table;
  if (records.empty()) return table;
  table.header = std::move(records.front().fields);
  for (auto& h : table.header) h = std::string(trim(h));
  records.erase(records.begin());
  table.rows = std::move(records);
  return table;
}

Table read(const std::filesystem::path& path, char delimiter) {
  return parse(read_file(path), delimiter);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

}  // namespace skillatlas::csv
