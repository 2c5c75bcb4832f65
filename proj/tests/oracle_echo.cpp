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

// Minimal external oracle speaking the wire protocol; used by tests and as a
// reference for plugging in real models. Modes:
//   --score <v>     constant score (default 0.5)
//   --mode mean     score = clamped mean of the feature vector scaled by 1e-3
//   --mode badid    respond with a wrong request id (protocol-error fixture)
//   --mode garbage  emit a non-JSON line (protocol-error fixture)
//   --mode truncate exit after the first response (count-mismatch fixture)
//   --layout <sig>  layout signature to declare in the handshake

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>

#include <json.hpp>

int main(int argc, char** argv) {
  double score = 0.5;
  std::string mode = "constant";
  std::string layout = "flat-v1;T=15;K=17;D=8;features=bbox+pose+local_context+speed";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--score") score = std::stod(argv[i + 1]);
    if (flag == "--mode") mode = argv[i + 1];
    if (flag == "--layout") layout = argv[i + 1];
  }

  nlohmann::json handshake = {{"type", "handshake"},
                              {"protocol", "capfi-oracle-v1"},
                              {"name", "echo-oracle"},
                              {"version", "1.0"},
                              {"layout", layout}};
  std::cout << handshake.dump() << "\n" << std::flush;

  std::string line;
  size_t served = 0;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    nlohmann::json request;
    try {
      request = nlohmann::json::parse(line);
    } catch (...) {
      return 1;
    }
    if (request.value("type", "") != "request") continue;
    uint64_t id = request.at("id").get<uint64_t>();

    double value = score;
    if (mode == "mean") {
      double sum = 0.0;
      size_t n = 0;
      for (const auto& f : request.at("features")) {
        sum += f.get<double>();
        ++n;
      }
      value = std::clamp(0.5 + 1e-3 * (n != 0 ? sum / static_cast<double>(n) : 0.0), 0.0, 1.0);
    }
    if (mode == "badid") id += 1;
    if (mode == "garbage") {
      std::cout << "this is not a protocol record\n" << std::flush;
      continue;
    }

    nlohmann::json response = {{"type", "response"}, {"id", id}, {"score", value}};
    std::cout << response.dump() << "\n" << std::flush;
    ++served;
    if (mode == "truncate" && served >= 1) return 0;
  }
  return 0;
}
