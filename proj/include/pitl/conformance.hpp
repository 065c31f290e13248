// Copyright 2026 The PITL Attack Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Protocol conformance check for external victim adapters: hello, three
// estimates, one malformed line (must be answered with ok=false), then a
// recovery estimate on the same connection.

#ifndef PITL_CONFORMANCE_HPP_
#define PITL_CONFORMANCE_HPP_

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pitl/errors.hpp"
#include "pitl/image.hpp"
#include "pitl/subprocess.hpp"
#include "pitl/victim_protocol.hpp"

namespace pitl::protocol {

struct ConformanceReport {
  bool passed = false;
  Capabilities capabilities;
  std::vector<std::string> steps;  // one line per check, "ok: ..." or "FAIL: ..."
};

inline ConformanceReport run_conformance(const std::vector<std::string>& command, int width = 16, int height = 12,
                                         std::chrono::milliseconds timeout = std::chrono::seconds(60)) {
  ConformanceReport rep;
  auto ok = [&](const std::string& s) { rep.steps.push_back("ok: " + s); };
  auto fail = [&](const std::string& s) {
    rep.steps.push_back("FAIL: " + s);
    return rep;
  };

  try {
    LineProcess proc(command);
    proc.write_line(encode_hello());
    rep.capabilities = decode_hello_reply(proc.read_line(timeout));
    ok("hello, model '" + rep.capabilities.model_name + "'");
    if (width > rep.capabilities.max_width || height > rep.capabilities.max_height) {
      return fail("adapter limits are below the probe size");
    }

    auto probe = [&](double level, const std::string& label) {
      RgbImage img = make_rgb(width, height);
      for (std::size_t i = 0; i < img.size(); ++i) img[i] = std::fmod(level + 0.013 * static_cast<double>(i), 1.0);
      proc.write_line(encode_estimate_request(img));
      decode_estimate_reply(proc.read_line(timeout), width, height);
      ok(label);
    };
    probe(0.1, "estimate 1");
    probe(0.5, "estimate 2");
    probe(0.9, "estimate 3");

    proc.write_line("{not json");
    const auto reply = nlohmann::json::parse(proc.read_line(timeout), nullptr, false);
    if (reply.is_discarded() || !reply.is_object() || reply.value("ok", true) != false) {
      return fail("malformed request was not answered with ok=false");
    }
    ok("malformed request rejected");
    probe(0.3, "recovery estimate");
    rep.passed = true;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return rep;
}

}  // namespace pitl::protocol

#endif  // PITL_CONFORMANCE_HPP_
