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

// Binary Netpbm (P5/P6) and Portable FloatMap (Pf/PF) codecs.
//
// PPM/PGM samples are linearized by dividing by maxval. PFM is written
// little-endian (scale -1.0) with the bottom row first, as the format
// requires; readers accept either byte order.

#ifndef PITL_NETPBM_HPP_
#define PITL_NETPBM_HPP_

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "pitl/errors.hpp"
#include "pitl/image.hpp"

namespace pitl::netpbm {

namespace detail {

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spill(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

// Header tokenizer: whitespace separated, '#' comments to end of line.
class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<unsigned char>& buf) : buf_(buf) {}

  std::string token() {
    skip_space_and_comments();
    std::string t;
    while (pos_ < buf_.size() && !std::isspace(buf_[pos_]) && buf_[pos_] != '#') {
      t.push_back(static_cast<char>(buf_[pos_++]));
    }
    if (t.empty()) throw FormatError("truncated header");
    return t;
  }

  long integer() {
    const std::string t = token();
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (*end != '\0') throw FormatError("bad header integer '" + t + "'");
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= buf_.size() || !std::isspace(buf_[pos_])) {
      throw FormatError("missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < buf_.size()) {
      if (std::isspace(buf_[pos_])) {
        ++pos_;
      } else if (buf_[pos_] == '#') {
        while (pos_ < buf_.size() && buf_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& buf_;
  std::size_t pos_ = 0;
};

inline Image<double> decode_pnm(const std::vector<unsigned char>& buf, int want_channels,
                                const char* magic) {
  HeaderReader hdr(buf);
  if (hdr.token() != magic) throw FormatError(std::string("expected magic ") + magic);
  const long w = hdr.integer();
  const long h = hdr.integer();
  const long maxval = hdr.integer();
  if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) throw FormatError("bad dimensions");
  if (maxval <= 0 || maxval > 65535) throw FormatError("bad maxval");
  const std::size_t off = hdr.raster_offset();
  const std::size_t bps = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(w) * h * want_channels;
  if (buf.size() - off < count * bps) throw FormatError("truncated raster");

  Image<double> img(static_cast<int>(w), static_cast<int>(h), want_channels);
  const double scale = 1.0 / static_cast<double>(maxval);
  const unsigned char* p = buf.data() + off;
  for (std::size_t i = 0; i < count; ++i) {
    unsigned v = bps == 2 ? (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
    img[i] = std::min(1.0, v * scale);
  }
  return img;
}

inline std::string encode_pnm(const Image<double>& img, const char* magic) {
  std::ostringstream os;
  os << magic << '\n' << img.width() << ' ' << img.height() << "\n255\n";
  std::string out = os.str();
  out.reserve(out.size() + img.size());
  for (double v : img.values()) {
    const double c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  return out;
}

}  // namespace detail

/// Reads a binary P6 file into a three-channel image in [0,1].
inline RgbImage read_ppm(const std::filesystem::path& path) {
  return detail::decode_pnm(detail::slurp(path), 3, "P6");
}

/// Reads a binary P5 file into a one-channel image in [0,1].
inline Image<double> read_pgm(const std::filesystem::path& path) {
  return detail::decode_pnm(detail::slurp(path), 1, "P5");
}

/// 8-bit P6 output; values are clamped to [0,1] and rounded.
inline void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  if (img.channels() != 3) throw ShapeError("write_ppm needs three channels");
  detail::spill(path, detail::encode_pnm(img, "P6"));
}

inline void write_pgm(const std::filesystem::path& path, const Image<double>& img) {
  if (img.channels() != 1) throw ShapeError("write_pgm needs one channel");
  detail::spill(path, detail::encode_pnm(img, "P5"));
}

/// Reads "Pf" (grey) or "PF" (colour) float maps.
inline Image<float> read_pfm(const std::filesystem::path& path) {
  const auto buf = detail::slurp(path);
  detail::HeaderReader hdr(buf);
  const std::string magic = hdr.token();
  int channels = 0;
  if (magic == "Pf") {
    channels = 1;
  } else if (magic == "PF") {
    channels = 3;
  } else {
    throw FormatError("not a PFM file: " + path.string());
  }
  const long w = hdr.integer();
  const long h = hdr.integer();
  const std::string scale_tok = hdr.token();
  char* end = nullptr;
  const double scale = std::strtod(scale_tok.c_str(), &end);
  if (*end != '\0' || scale == 0.0 || !std::isfinite(scale)) throw FormatError("bad PFM scale");
  if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) throw FormatError("bad dimensions");
  const std::size_t off = hdr.raster_offset();
  const std::size_t row = static_cast<std::size_t>(w) * channels;
  if (buf.size() - off < row * h * 4) throw FormatError("truncated PFM raster");

  const bool file_little = scale < 0.0;
  const bool host_little = std::endian::native == std::endian::little;
  Image<float> img(static_cast<int>(w), static_cast<int>(h), channels);
  for (long y = 0; y < h; ++y) {
    // bottom-to-top storage
    const unsigned char* src = buf.data() + off + static_cast<std::size_t>(h - 1 - y) * row * 4;
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, src + 4 * i, 4);
      if (file_little != host_little) bits = __builtin_bswap32(bits);
      img[static_cast<std::size_t>(y) * row + i] = std::bit_cast<float>(bits);
    }
  }
  return img;
}

inline std::string encode_pfm(const Image<float>& img) {
  if (img.channels() != 1 && img.channels() != 3) throw ShapeError("PFM needs 1 or 3 channels");
  std::ostringstream os;
  os << (img.channels() == 1 ? "Pf" : "PF") << '\n'
     << img.width() << ' ' << img.height() << "\n-1.0\n";
  std::string out = os.str();
  const std::size_t row = static_cast<std::size_t>(img.width()) * img.channels();
  for (int y = img.height() - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(img[static_cast<std::size_t>(y) * row + i]);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      char b[4];
      std::memcpy(b, &bits, 4);
      out.append(b, 4);
    }
  }
  return out;
}

inline void write_pfm(const std::filesystem::path& path, const Image<float>& img) {
  detail::spill(path, encode_pfm(img));
}

}  // namespace pitl::netpbm

#endif  // PITL_NETPBM_HPP_
