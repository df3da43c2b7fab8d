#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace skillatlas::csv {

struct Row {
  std::size_t line_no = 0;  // 1-based line where the row starts
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  std::optional<std::size_t> find_column(std::string_view name) const;
  /// First header matching any alias (case-insensitive).
  std::optional<std::size_t> find_column(std::initializer_list<std::string_view> aliases) const;
};

/// Parses RFC 4180 text (quoted fields, doubled quotes, embedded newlines).
/// `delimiter` 0 means auto-detect: tab if the first line contains a tab.
Table parse(std::string_view text, char delimiter = 0);
Table read(const std::filesystem::path& path, char delimiter = 0);

std::string escape(std::string_view field);
std::string join_line(const std::vector<std::string>& fields);

}  // namespace skillatlas::csv
