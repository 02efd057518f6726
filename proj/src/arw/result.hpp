#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace arw {

// One numeric-or-verdict cell. Integers are kept exact; doubles are rendered
// with shortest round-trip formatting so re-runs are byte-identical.
using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

// Everything an experiment run produces: ordered metadata (artifact version,
// resolved configuration, master seed, convention flags), result tables, and
// the outcome of any embedded check. Tables live in a deque so references
// returned by add_table stay valid as more tables are added.
struct ResultDocument {
  std::vector<std::pair<std::string, std::string>> meta;
  std::deque<Table> tables;
  bool check_failed = false;
  std::string check_summary;

  void add_meta(std::string key, std::string value) {
    meta.emplace_back(std::move(key), std::move(value));
  }
  void add_meta(std::string key, std::int64_t value);
  void add_meta(std::string key, std::uint64_t value);
  void add_meta(std::string key, double value);

  Table& add_table(std::string name, std::vector<std::string> columns) {
    tables.push_back({std::move(name), std::move(columns), {}});
    return tables.back();
  }
};

std::string format_cell(const Cell& cell);

// Metadata header alone: '# key = value' lines, one per entry.
std::string render_meta(const ResultDocument& doc);

// CSV: metadata header as '#' comments, then each table (with a '# table:'
// marker when there is more than one). Numeric-only cells need no quoting.
std::string render_csv(const ResultDocument& doc);

// JSON object {meta, tables, check} with insertion-ordered keys.
std::string render_json(const ResultDocument& doc);

}  // namespace arw
