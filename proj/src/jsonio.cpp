/*
 * Copyright 2026 The capfi authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "capfi/jsonio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "capfi/errors.hpp"

namespace capfi::jsonio {

std::string format_double(double v) {
  if (std::isnan(v) || std::isinf(v)) {
    // JSON has no encoding for these; callers represent absent metrics as null.
    return "null";
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void escape_string(const std::string& s, std::string& out) {
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);  // UTF-8 passes through
        }
    }
  }
  out += '"';
}

void dump_value(const OrderedJson& j, int depth, std::string& out) {
  const std::string pad(static_cast<size_t>(depth) * 2, ' ');
  const std::string pad_in(static_cast<size_t>(depth + 1) * 2, ' ');
  switch (j.type()) {
    case nlohmann::detail::value_t::null:
      out += "null";
      break;
    case nlohmann::detail::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case nlohmann::detail::value_t::number_integer:
      out += std::to_string(j.get<int64_t>());
      break;
    case nlohmann::detail::value_t::number_unsigned:
      out += std::to_string(j.get<uint64_t>());
      break;
    case nlohmann::detail::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    case nlohmann::detail::value_t::string:
      escape_string(j.get_ref<const std::string&>(), out);
      break;
    case nlohmann::detail::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      // Arrays of scalars stay on one line; nested structures get one entry
      // per line for readable diffs.
      bool scalars_only = true;
      for (const auto& e : j) {
        if (e.is_array() || e.is_object()) {
          scalars_only = false;
          break;
        }
      }
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += scalars_only ? ", " : ",";
        if (!scalars_only) {
          out += '\n';
          out += pad_in;
        }
        dump_value(e, depth + 1, out);
        first = false;
      }
      if (!scalars_only) {
        out += '\n';
        out += pad;
      }
      out += ']';
      break;
    }
    case nlohmann::detail::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        out += '\n';
        out += pad_in;
        escape_string(it.key(), out);
        out += ": ";
        dump_value(it.value(), depth + 1, out);
        first = false;
      }
      out += '\n';
      out += pad;
      out += '}';
      break;
    }
    default:
      out += "null";
      break;
  }
}

}  // namespace

std::string dump_canonical(const OrderedJson& j) {
  std::string out;
  dump_value(j, 0, out);
  out += '\n';
  return out;
}

nlohmann::json parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("failed to parse " + path + ": " + e.what());
  }
  return j;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open file for writing: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ParseError("short write: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace capfi::jsonio
