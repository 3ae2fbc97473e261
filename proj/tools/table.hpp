#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace kpzcli {

using Cell = std::variant<double, long long, bool, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
  std::size_t col(const std::string& name) const;   // throws when absent
};

enum class Format { csv, json };

std::string format_double(double v);   // 17 significant digits
std::string format_cell(const Cell& c);

void write_csv(std::ostream& os, const Table& t);
void write_json(std::ostream& os, const Table& t);   // one object per line
void write_table(std::ostream& os, const Table& t, Format f);

// RFC-4180 reader; first record is the header. Cells come back as strings.
Table read_csv(std::istream& is);
Table read_csv_file(const std::string& path);

double as_double(const Cell& c);

}  // namespace kpzcli
