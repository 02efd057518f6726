#include "arw/result.hpp"

#include <charconv>
#include <cmath>

#include <json.hpp>

namespace arw {

namespace {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

void ResultDocument::add_meta(std::string key, std::int64_t value) {
  add_meta(std::move(key), std::to_string(value));
}

void ResultDocument::add_meta(std::string key, std::uint64_t value) {
  add_meta(std::move(key), std::to_string(value));
}

void ResultDocument::add_meta(std::string key, double value) {
  add_meta(std::move(key), format_double(value));
}

std::string format_cell(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
  return std::get<std::string>(cell);
}

std::string render_meta(const ResultDocument& doc) {
  std::string out;
  for (const auto& [key, value] : doc.meta) {
    out += "# ";
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

std::string render_csv(const ResultDocument& doc) {
  std::string out = render_meta(doc);
  if (doc.check_failed) {
    out += "# check_failed = true\n";
    if (!doc.check_summary.empty()) out += "# check_summary = " + doc.check_summary + "\n";
  }
  bool first = true;
  for (const Table& table : doc.tables) {
    if (!first) out += '\n';
    first = false;
    if (doc.tables.size() > 1) out += "# table: " + table.name + "\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out += ',';
      out += table.columns[c];
    }
    out += '\n';
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += format_cell(row[c]);
      }
      out += '\n';
    }
  }
  return out;
}

std::string render_json(const ResultDocument& doc) {
  nlohmann::ordered_json root;
  nlohmann::ordered_json meta;
  for (const auto& [key, value] : doc.meta) meta[key] = value;
  root["meta"] = std::move(meta);
  nlohmann::ordered_json tables = nlohmann::ordered_json::array();
  for (const Table& table : doc.tables) {
    nlohmann::ordered_json jt;
    jt["name"] = table.name;
    jt["columns"] = table.columns;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
      nlohmann::ordered_json jr = nlohmann::ordered_json::array();
      for (const Cell& cell : row) {
        if (const auto* i = std::get_if<std::int64_t>(&cell))
          jr.push_back(*i);
        else if (const auto* d = std::get_if<double>(&cell)) {
          if (std::isfinite(*d))
            jr.push_back(*d);
          else
            jr.push_back(format_cell(cell));  // JSON has no inf/nan literals
        } else
          jr.push_back(std::get<std::string>(cell));
      }
      rows.push_back(std::move(jr));
    }
    jt["rows"] = std::move(rows);
    tables.push_back(std::move(jt));
  }
  root["tables"] = std::move(tables);
  root["check"] = {{"failed", doc.check_failed}, {"summary", doc.check_summary}};
  return root.dump(2) + "\n";
}

}  // namespace arw
