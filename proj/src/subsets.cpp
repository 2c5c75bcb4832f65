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

#include "capfi/subsets.hpp"

#include <algorithm>
#include <cctype>

namespace capfi {

Proximity proximity_bucket(double mean_distance_meters) {
  if (!(mean_distance_meters > 0.0)) {
    throw ValidationError("proximity_bucket: distance must be positive");
  }
  if (mean_distance_meters <= kCloseProximityMaxMeters) return Proximity::close;
  if (mean_distance_meters <= kMediumProximityMaxMeters) return Proximity::medium;
  return Proximity::far;
}

std::map<std::string, ContextSet> build_subsets(const Manifest& manifest) {
  std::map<std::string, ContextSet> out;
  for (auto notation : kBaseNotations) {
    ContextSet s;
    s.notation = std::string(notation);
    out.emplace(s.notation, std::move(s));
  }
  auto add = [&](std::string_view notation, uint32_t idx) {
    out.find(std::string(notation))->second.members.push_back(idx);
  };
  for (uint32_t i = 0; i < manifest.samples.size(); ++i) {
    const Sample& s = manifest.samples[i];
    add(s.label == 1 ? "S_C" : "S_NC", i);
    switch (s.tags.roadway) {
      case Roadway::four_way: add("S_FW", i); break;
      case Roadway::midblock: add("S_MB", i); break;
      case Roadway::t_junction: add("S_TJ", i); break;
      case Roadway::other: break;
    }
    switch (s.tags.light) {
      case Light::red: add("S_Red", i); break;
      case Light::yellow: add("S_Yellow", i); break;
      case Light::green: add("S_Green", i); break;
      case Light::none: break;
    }
    add(s.tags.crosswalk == Crosswalk::zebra ? "S_ZC" : "S_NZC", i);
    switch (s.tags.proximity) {
      case Proximity::close: add("S_CP", i); break;
      case Proximity::medium: add("S_MP", i); break;
      case Proximity::far: add("S_FP", i); break;
    }
    switch (s.tags.ego_speed_state) {
      case SpeedState::accelerating: add("S_Acc", i); break;
      case SpeedState::constant: add("S_Const", i); break;
      case SpeedState::stopped: add("S_Stopped", i); break;
      case SpeedState::decelerating: add("S_Dec", i); break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Set-algebra expression parser
// ---------------------------------------------------------------------------

namespace {

enum class TokKind { notation, intersect, unite, subtract, lparen, rparen, end };

struct Token {
  TokKind kind;
  std::string text;
};

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  Token next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ >= s_.size()) return {TokKind::end, ""};
    // UTF-8 operators: ∩ = e2 88 a9, ∪ = e2 88 aa.
    if (pos_ + 2 < s_.size() && static_cast<unsigned char>(s_[pos_]) == 0xe2 &&
        static_cast<unsigned char>(s_[pos_ + 1]) == 0x88) {
      const unsigned char b3 = static_cast<unsigned char>(s_[pos_ + 2]);
      if (b3 == 0xa9) {
        pos_ += 3;
        return {TokKind::intersect, "∩"};
      }
      if (b3 == 0xaa) {
        pos_ += 3;
        return {TokKind::unite, "∪"};
      }
    }
    const char c = s_[pos_];
    switch (c) {
      case '&': ++pos_; return {TokKind::intersect, "&"};
      case '|': ++pos_; return {TokKind::unite, "|"};
      case '\\':
      case '-': ++pos_; return {TokKind::subtract, std::string(1, c)};
      case '(': ++pos_; return {TokKind::lparen, "("};
      case ')': ++pos_; return {TokKind::rparen, ")"};
      default: break;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      return {TokKind::notation, std::string(s_.substr(start, pos_ - start))};
    }
    throw ConfigError("subset expression: unexpected character '" + std::string(1, c) + "' in '" +
                      std::string(s_) + "'");
  }

 private:
  std::string_view s_;
  size_t pos_ = 0;
};

using Bits = std::vector<bool>;

class Parser {
 public:
  Parser(std::string_view expr, const std::map<std::string, ContextSet>& known, size_t n)
      : lexer_(expr), expr_(expr), known_(known), n_(n) {
    advance();
  }

  Bits parse() {
    Bits result = parse_union();
    if (tok_.kind != TokKind::end) {
      throw ConfigError("subset expression: trailing input after '" + tok_.text + "' in '" +
                        std::string(expr_) + "'");
    }
    return result;
  }

 private:
  void advance() { tok_ = lexer_.next(); }

  Bits parse_union() {
    Bits left = parse_term();
    while (tok_.kind == TokKind::unite) {
      advance();
      Bits right = parse_term();
      for (size_t i = 0; i < n_; ++i) left[i] = left[i] || right[i];
    }
    return left;
  }

  Bits parse_term() {
    Bits left = parse_factor();
    while (tok_.kind == TokKind::intersect || tok_.kind == TokKind::subtract) {
      const bool subtract = tok_.kind == TokKind::subtract;
      advance();
      Bits right = parse_factor();
      for (size_t i = 0; i < n_; ++i) {
        left[i] = subtract ? (left[i] && !right[i]) : (left[i] && right[i]);
      }
    }
    return left;
  }

  Bits parse_factor() {
    if (tok_.kind == TokKind::lparen) {
      advance();
      Bits inner = parse_union();
      if (tok_.kind != TokKind::rparen) {
        throw ConfigError("subset expression: missing ')' in '" + std::string(expr_) + "'");
      }
      advance();
      return inner;
    }
    if (tok_.kind != TokKind::notation) {
      throw ConfigError("subset expression: expected a notation in '" + std::string(expr_) + "'");
    }
    auto it = known_.find(tok_.text);
    if (it == known_.end()) {
      throw ConfigError("unknown context notation '" + tok_.text + "'");
    }
    Bits bits(n_, false);
    for (uint32_t m : it->second.members) bits[m] = true;
    advance();
    return bits;
  }

  Lexer lexer_;
  Token tok_{TokKind::end, ""};
  std::string_view expr_;
  const std::map<std::string, ContextSet>& known_;
  size_t n_;
};

std::string_view trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

ContextSet subset_algebra(std::string_view expression,
                          const std::map<std::string, ContextSet>& known,
                          size_t manifest_size) {
  const auto expr = trimmed(expression);
  if (expr.empty()) throw ConfigError("subset expression: empty expression");
  Parser parser(expr, known, manifest_size);
  const Bits bits = parser.parse();
  ContextSet out;
  out.notation = std::string(expr);
  for (uint32_t i = 0; i < manifest_size; ++i) {
    if (bits[i]) out.members.push_back(i);
  }
  return out;
}

}  // namespace capfi
