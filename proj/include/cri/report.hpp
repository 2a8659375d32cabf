#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "cri/common.hpp"

namespace cri {

using json = nlohmann::json;

// Canonical float formatting for reports: %.6g, with non-finite values
// spelled out (JSON has no literals for them).
inline std::string format_number(double value) {
  if (std::isnan(value)) return "null";
  if (std::isinf(value)) return value > 0 ? "1e999" : "-1e999";
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return buffer;
}

namespace detail {

inline void append_json_string(const std::string& s, std::string& out) {
  out += '"';
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buffer[8];
          std::snprintf(buffer, sizeof(buffer), "\\u%04x", c);
          out += buffer;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

inline void dump_canonical(const json& node, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  switch (node.type()) {
    case json::value_t::object: {
      if (node.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = node.begin(); it != node.end(); ++it) {  // keys already sorted
        if (!first) out += ",\n";
        first = false;
        out += pad;
        append_json_string(it.key(), out);
        out += ": ";
        dump_canonical(it.value(), out, indent, depth + 1);
      }
      out += '\n';
      out += close_pad;
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (node.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : node) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        dump_canonical(item, out, indent, depth + 1);
      }
      out += '\n';
      out += close_pad;
      out += ']';
      return;
    }
    case json::value_t::number_float: out += format_number(node.get<double>()); return;
    default: out += node.dump(); return;
  }
}

}  // namespace detail

// Deterministic JSON serialization: keys sorted (nlohmann's std::map order),
// floats as %.6g.  Identical reports serialize to identical bytes.
inline std::string dump_canonical_json(const json& report, int indent = 2) {
  std::string out;
  detail::dump_canonical(report, out, indent, 0);
  out += '\n';
  return out;
}

}  // namespace cri
