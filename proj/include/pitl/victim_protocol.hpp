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

// Version-1 external victim protocol: one JSON document per line.
//
//   -> {"cmd":"hello","version":1}
//   <- {"ok":true,"version":1,"model":"<name>","max_width":W,"max_height":H}
//   -> {"cmd":"estimate","width":W,"height":H,"pixels":[r,g,b,...]}
//   <- {"ok":true,"width":W,"height":H,"depth":[d,...]}
//   <- {"ok":false,"error":"<message>"}
//
// Arrays are row-major. Values travel as float32 so both ends agree bit for
// bit on what was sent.

#ifndef PITL_VICTIM_PROTOCOL_HPP_
#define PITL_VICTIM_PROTOCOL_HPP_

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "pitl/errors.hpp"
#include "pitl/image.hpp"

namespace pitl::protocol {

inline constexpr int kVersion = 1;

struct Capabilities {
  int max_width = 0;
  int max_height = 0;
  std::string model_name;
  int protocol_version = 0;
};

inline std::string encode_hello() { return nlohmann::json{{"cmd", "hello"}, {"version", kVersion}}.dump(); }

namespace detail {

inline nlohmann::json parse_reply(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw VictimFailure(std::string("malformed reply: ") + e.what());
  }
  if (!j.is_object() || !j.contains("ok") || !j["ok"].is_boolean()) {
    throw VictimFailure("reply lacks boolean 'ok'");
  }
  if (!j["ok"].get<bool>()) {
    const std::string msg = j.contains("error") && j["error"].is_string() ? j["error"].get<std::string>() : "unspecified";
    throw VictimFailure("victim reported error: " + msg);
  }
  return j;
}

inline int require_int(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer()) {
    throw VictimFailure(std::string("reply field '") + key + "' missing or not an integer");
  }
  return j[key].get<int>();
}

}  // namespace detail

inline Capabilities decode_hello_reply(const std::string& line) {
  const auto j = detail::parse_reply(line);
  Capabilities caps;
  caps.protocol_version = detail::require_int(j, "version");
  if (caps.protocol_version != kVersion) {
    throw UnsupportedProtocol("victim speaks protocol version " + std::to_string(caps.protocol_version) +
                              ", expected " + std::to_string(kVersion));
  }
  caps.max_width = detail::require_int(j, "max_width");
  caps.max_height = detail::require_int(j, "max_height");
  if (j.contains("model") && j["model"].is_string()) caps.model_name = j["model"].get<std::string>();
  return caps;
}

inline std::string encode_estimate_request(const RgbImage& image) {
  if (image.channels() != 3) throw ShapeError("estimate request needs an RGB image");
  nlohmann::json pixels = nlohmann::json::array();
  pixels.get_ref<nlohmann::json::array_t&>().reserve(image.size());
  for (double v : image.values()) pixels.push_back(static_cast<float>(v));
  return nlohmann::json{{"cmd", "estimate"}, {"width", image.width()}, {"height", image.height()}, {"pixels", std::move(pixels)}}
      .dump();
}

/// Parses a request on the adapter side.
inline RgbImage decode_estimate_request(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  if (j.value("cmd", "") != "estimate") throw FormatError("not an estimate request");
  const int w = j.at("width").get<int>();
  const int h = j.at("height").get<int>();
  const auto& px = j.at("pixels");
  if (w <= 0 || h <= 0 || !px.is_array() || px.size() != static_cast<std::size_t>(w) * h * 3) {
    throw FormatError("estimate request has inconsistent shape");
  }
  RgbImage img = make_rgb(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(px[i].get<float>());
  return img;
}

inline std::string encode_estimate_reply(const DepthMap& depth) {
  nlohmann::json d = nlohmann::json::array();
  for (float v : depth.values()) d.push_back(v);
  return nlohmann::json{{"ok", true}, {"width", depth.width()}, {"height", depth.height()}, {"depth", std::move(d)}}.dump();
}

inline DepthMap decode_estimate_reply(const std::string& line, int expect_width, int expect_height) {
  const auto j = detail::parse_reply(line);
  const int w = detail::require_int(j, "width");
  const int h = detail::require_int(j, "height");
  if (w != expect_width || h != expect_height) {
    throw VictimFailure("depth reply is " + std::to_string(w) + "x" + std::to_string(h) + ", expected " +
                        std::to_string(expect_width) + "x" + std::to_string(expect_height));
  }
  if (!j.contains("depth") || !j["depth"].is_array() || j["depth"].size() != static_cast<std::size_t>(w) * h) {
    throw VictimFailure("depth reply array has wrong length");
  }
  DepthMap d = make_depth(w, h);
  const auto& arr = j["depth"];
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!arr[i].is_number()) throw VictimFailure("depth reply contains a non-number");
    const float v = arr[i].get<float>();
    if (!std::isfinite(v) || v < 0.0f) throw VictimFailure("depth reply contains a negative or non-finite value");
    d[i] = v;
  }
  return d;
}

}  // namespace pitl::protocol

#endif  // PITL_VICTIM_PROTOCOL_HPP_
