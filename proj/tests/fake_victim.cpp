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

// Scriptable protocol peer for tests. Misbehaviours are selected by flags:
//
//   --version N         announce protocol version N
//   --max W H           declared size limits
//   --mode M            brightness (2 + 2 L), echo (red channel) or uniform (3.0)
//   --die-after K       exit(3) on receiving estimate request K+1
//   --garbage-after K   reply with non-JSON from estimate K+1 on
//   --hang-after K      never answer estimate K+1
//   --wrong-shape       reply with a 1x1 depth map

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "pitl/scene.hpp"
#include "pitl/victim_protocol.hpp"

int main(int argc, char** argv) {
  int version = 1;
  int max_w = 4096, max_h = 4096;
  std::string mode = "brightness";
  long die_after = -1, garbage_after = -1, hang_after = -1;
  bool wrong_shape = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&] { return std::string(i + 1 < argc ? argv[++i] : ""); };
    if (a == "--version") version = std::stoi(next());
    else if (a == "--max") { max_w = std::stoi(next()); max_h = std::stoi(next()); }
    else if (a == "--mode") mode = next();
    else if (a == "--die-after") die_after = std::stol(next());
    else if (a == "--garbage-after") garbage_after = std::stol(next());
    else if (a == "--hang-after") hang_after = std::stol(next());
    else if (a == "--wrong-shape") wrong_shape = true;
  }

  long served = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      std::cout << nlohmann::json{{"ok", false}, {"error", std::string("malformed request: ") + e.what()}}.dump()
                << std::endl;
      continue;
    }
    const std::string cmd = req.is_object() ? req.value("cmd", "") : "";
    if (cmd == "hello") {
      std::cout << nlohmann::json{{"ok", true}, {"version", version}, {"model", "fake-" + mode},
                                  {"max_width", max_w}, {"max_height", max_h}}.dump()
                << std::endl;
      continue;
    }
    if (cmd != "estimate") {
      std::cout << nlohmann::json{{"ok", false}, {"error", "unknown command"}}.dump() << std::endl;
      continue;
    }
    if (die_after >= 0 && served >= die_after) std::exit(3);
    if (hang_after >= 0 && served >= hang_after) {
      std::this_thread::sleep_for(std::chrono::hours(1));
    }
    if (garbage_after >= 0 && served >= garbage_after) {
      std::cout << "this is not json" << std::endl;
      ++served;
      continue;
    }
    pitl::RgbImage img;
    try {
      img = pitl::protocol::decode_estimate_request(line);
    } catch (const std::exception& e) {
      std::cout << nlohmann::json{{"ok", false}, {"error", e.what()}}.dump() << std::endl;
      continue;
    }
    pitl::DepthMap d = pitl::make_depth(wrong_shape ? 1 : img.width(), wrong_shape ? 1 : img.height());
    for (std::size_t p = 0; p < d.pixel_count(); ++p) {
      if (mode == "echo") {
        d[p] = static_cast<float>(img[3 * p]);
      } else if (mode == "uniform") {
        d[p] = 3.0f;
      } else {
        d[p] = static_cast<float>(2.0 + 2.0 * pitl::luminance(img[3 * p], img[3 * p + 1], img[3 * p + 2]));
      }
    }
    std::cout << pitl::protocol::encode_estimate_reply(d) << std::endl;
    ++served;
  }
  return 0;
}
