#include "table.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "kpz/errors.hpp"

namespace kpzcli {

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("table row width mismatch");
  rows.push_back(std::move(row));
}

std::size_t Table::col(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw kpz::argument_error("missing column '" + name + "'");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string format_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return format_double(v);
        else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return v;
      },
      c);
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace

void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_quote(t.columns[i]);
  os << "\r\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_quote(format_cell(r[i]));
    os << "\r\n";
  }
}

void write_json(std::ostream& os, const Table& t) {
  for (const auto& r : t.rows) {
    os << '{';
    for (std::size_t i = 0; i < r.size(); ++i) {
      os << (i ? "," : "") << nlohmann::json(t.columns[i]).dump() << ':';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              if (std::isfinite(v)) os << format_double(v);
              else os << "null";
            } else if constexpr (std::is_same_v<T, std::string>) {
              os << nlohmann::json(v).dump();
            } else {
              os << format_cell(v);
            }
          },
          r[i]);
    }
    os << "}\n";
  }
}

void write_table(std::ostream& os, const Table& t, Format f) {
  if (f == Format::csv) write_csv(os, t);
  else write_json(os, t);
}

Table read_csv(std::istream& is) {
  std::vector<std::vector<std::string>> recs;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  char ch;
  auto end_field = [&] {
    rec.push_back(field);
    field.clear();
    any = true;
  };
  auto end_record = [&] {
    if (any || !field.empty()) {
      end_field();
      recs.push_back(rec);
    }
    rec.clear();
    any = false;
  };
  while (is.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (is.peek() == '"') {
          is.get(ch);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\n') {
      end_record();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (quoted) throw kpz::argument_error("csv: unterminated quoted field");
  end_record();
  Table t;
  if (recs.empty()) throw kpz::argument_error("csv: no header");
  t.columns = recs[0];
  for (std::size_t i = 1; i < recs.size(); ++i) {
    if (recs[i].size() != t.columns.size()) throw kpz::argument_error(fmt::format("csv: record {} has wrong width", i + 1));
    std::vector<Cell> row(recs[i].begin(), recs[i].end());
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw kpz::argument_error("cannot open " + path);
  return read_csv(in);
}

double as_double(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
  if (const auto* s = std::get_if<std::string>(&c)) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(*s, &pos);
    } catch (const std::exception&) {
      throw kpz::argument_error("not a number: '" + *s + "'");
    }
    if (pos != s->size()) throw kpz::argument_error("not a number: '" + *s + "'");
    return v;
  }
  throw kpz::argument_error("not a number");
}

}  // namespace kpzcli
