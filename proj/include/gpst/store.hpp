#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpst/errors.hpp"
#include "gpst/gaussian.hpp"
#include "gpst/image.hpp"

namespace gpst {

// GPST container: little-endian header (magic "GPST", u16 version, u32 width,
// u32 height, u32 l, u16 c_f, f32 s, u16 flags; 26 bytes), then l records of
// 5 geometry f32s (sigma_x, sigma_y, rho, mu_x, mu_y) followed by c_f feature
// f32s. Flags bit 0 marks the record as one packed (5+c_f)-float token
// vector; the byte layout is identical either way.
inline constexpr uint16_t kGpstVersion = 1;
inline constexpr uint16_t kGpstFlagPacked = 1;
inline constexpr size_t kGpstHeaderSize = 26;

namespace detail {

inline void put_u16(std::vector<uint8_t>& buf, uint16_t v) {
  buf.push_back(static_cast<uint8_t>(v & 0xff));
  buf.push_back(static_cast<uint8_t>(v >> 8));
}
inline void put_u32(std::vector<uint8_t>& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::vector<uint8_t>& buf, float v) {
  put_u32(buf, std::bit_cast<uint32_t>(v));
}

struct Cursor {
  const uint8_t* p;
  size_t left;
  void need(size_t n) const {
    if (left < n) throw CorruptFile("unexpected end of token file");
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(p[0] | (p[1] << 8));
    p += 2;
    left -= 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
    p += 4;
    left -= 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
};

inline void check_geom_invariants(const GaussianGeom& g, int width, int height, float s) {
  if (!std::isfinite(g.sigma_x) || !std::isfinite(g.sigma_y) || !std::isfinite(g.rho) ||
      !std::isfinite(g.mu_x) || !std::isfinite(g.mu_y))
    throw InvariantViolation("non-finite gaussian parameter in token file");
  if (g.sigma_x < kSigmaEps || g.sigma_y < kSigmaEps)
    throw InvariantViolation("sigma below the minimum in token file");
  if (std::abs(g.rho) > 1.0f - kRhoEps)
    throw InvariantViolation("|rho| out of range in token file");
  const float margin = s * std::max(g.sigma_x, g.sigma_y);
  if (g.mu_x < -margin || g.mu_x > width + margin || g.mu_y < -margin ||
      g.mu_y > height + margin)
    throw InvariantViolation("mean outside the extended frame in token file");
}

}  // namespace detail

inline void write_tokens(const TokenSet& ts, const std::string& path, uint16_t flags = 0) {
  if (ts.tokens.empty()) throw InvalidInput("token set is empty");
  const int c_f = ts.channels();
  for (const Token& t : ts.tokens)
    if (static_cast<int>(t.f.size()) != c_f)
      throw InvalidInput("tokens disagree on feature length");

  std::vector<uint8_t> buf;
  buf.reserve(kGpstHeaderSize + ts.tokens.size() * (5 + c_f) * 4);
  buf.insert(buf.end(), {'G', 'P', 'S', 'T'});
  detail::put_u16(buf, kGpstVersion);
  detail::put_u32(buf, static_cast<uint32_t>(ts.width));
  detail::put_u32(buf, static_cast<uint32_t>(ts.height));
  detail::put_u32(buf, static_cast<uint32_t>(ts.tokens.size()));
  detail::put_u16(buf, static_cast<uint16_t>(c_f));
  detail::put_f32(buf, ts.s);
  detail::put_u16(buf, flags);
  for (const Token& t : ts.tokens) {
    detail::put_f32(buf, t.geom.sigma_x);
    detail::put_f32(buf, t.geom.sigma_y);
    detail::put_f32(buf, t.geom.rho);
    detail::put_f32(buf, t.geom.mu_x);
    detail::put_f32(buf, t.geom.mu_y);
    for (float v : t.f) detail::put_f32(buf, v);
  }

  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open " + path + " for writing");
  detail::FileHandle file(fp);
  if (std::fwrite(buf.data(), 1, buf.size(), fp) != buf.size() || std::fflush(fp) != 0)
    throw IoError("failed to write " + path);
}

inline TokenSet read_tokens(const std::string& path, uint16_t* flags_out = nullptr) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw FileNotFound("cannot open " + path);
  detail::FileHandle file(fp);
  std::fseek(fp, 0, SEEK_END);
  long size = std::ftell(fp);
  std::rewind(fp);
  if (size < 0) throw IoError("cannot stat " + path);
  std::vector<uint8_t> buf(static_cast<size_t>(size));
  if (std::fread(buf.data(), 1, buf.size(), fp) != buf.size())
    throw IoError("failed to read " + path);

  detail::Cursor cur{buf.data(), buf.size()};
  cur.need(4);
  if (std::memcmp(cur.p, "GPST", 4) != 0) throw CorruptFile("bad magic");
  cur.p += 4;
  cur.left -= 4;
  const uint16_t version = cur.u16();
  if (version != kGpstVersion)
    throw UnsupportedVersion("token file version " + std::to_string(version));
  TokenSet ts;
  ts.width = static_cast<int>(cur.u32());
  ts.height = static_cast<int>(cur.u32());
  const uint32_t l = cur.u32();
  const uint16_t c_f = cur.u16();
  ts.s = cur.f32();
  const uint16_t flags = cur.u16();
  if (ts.width < 1 || ts.height < 1 || l < 1 || c_f < 1)
    throw CorruptFile("bad header fields");
  if (!std::isfinite(ts.s) || ts.s <= 0.0f)
    throw InvariantViolation("support factor must be positive");
  if (cur.left != static_cast<size_t>(l) * (5 + c_f) * 4)
    throw CorruptFile("file length does not match the header");

  ts.tokens.resize(l);
  for (uint32_t i = 0; i < l; ++i) {
    Token& t = ts.tokens[i];
    t.geom.sigma_x = cur.f32();
    t.geom.sigma_y = cur.f32();
    t.geom.rho = cur.f32();
    t.geom.mu_x = cur.f32();
    t.geom.mu_y = cur.f32();
    detail::check_geom_invariants(t.geom, ts.width, ts.height, ts.s);
    t.f.resize(c_f);
    for (uint16_t k = 0; k < c_f; ++k) {
      t.f[k] = cur.f32();
      if (!std::isfinite(t.f[k]))
        throw InvariantViolation("non-finite feature value in token file");
    }
  }
  if (flags_out) *flags_out = flags;
  return ts;
}

// JSON debug form mirroring the binary field names.
inline nlohmann::json tokens_to_json(const TokenSet& ts, uint16_t flags = 0) {
  nlohmann::json j;
  j["width"] = ts.width;
  j["height"] = ts.height;
  j["l"] = ts.tokens.size();
  j["c_f"] = ts.channels();
  j["s"] = ts.s;
  j["flags"] = flags;
  j["tokens"] = nlohmann::json::array();
  for (const Token& t : ts.tokens) {
    nlohmann::json tok;
    tok["sigma_x"] = t.geom.sigma_x;
    tok["sigma_y"] = t.geom.sigma_y;
    tok["rho"] = t.geom.rho;
    tok["mu_x"] = t.geom.mu_x;
    tok["mu_y"] = t.geom.mu_y;
    tok["f"] = t.f;
    j["tokens"].push_back(std::move(tok));
  }
  return j;
}

}  // namespace gpst
