#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cri/common.hpp"

namespace cri {

// RFC-4180 table: header row required, quoted fields with doubled quotes,
// CR/LF tolerated.  Missing values are not imputed; numeric accessors reject
// empty or unparsable cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  index_t n_rows() const { return static_cast<index_t>(rows.size()); }

  index_t column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<index_t>(j);
    throw validation_error("CSV has no column named '" + name + "'");
  }

  std::vector<std::string> string_column(const std::string& name) const {
    const auto j = static_cast<std::size_t>(column(name));
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[j]);
    return out;
  }

  std::vector<double> numeric_column(const std::string& name) const {
    const auto j = static_cast<std::size_t>(column(name));
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string& cell = rows[r][j];
      if (cell.empty())
        throw validation_error("missing value in column '" + name + "' at data row " +
                               std::to_string(r + 1));
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size())
        throw validation_error("non-numeric value '" + cell + "' in column '" + name +
                               "' at data row " + std::to_string(r + 1));
      out.push_back(value);
    }
    return out;
  }
};

inline CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;

  const auto end_field = [&] {
    row.push_back(field);
    field.clear();
  };
  const auto end_row = [&] {
    end_field();
    if (!table.header.empty() && row.size() != table.header.size())
      throw validation_error("CSV row " + std::to_string(table.rows.size() + 1) + " has " +
                             std::to_string(row.size()) + " fields, expected " +
                             std::to_string(table.header.size()));
    if (table.header.empty())
      table.header = std::move(row);
    else
      table.rows.push_back(std::move(row));
    row.clear();
  };

  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (quoted) throw validation_error("CSV ends inside a quoted field");
  if (!field.empty() || !row.empty()) end_row();
  if (!any || table.header.empty()) throw validation_error("CSV input is empty");
  return table;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open CSV file '" + path + "'");
  return parse_csv(in);
}

inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace cri
