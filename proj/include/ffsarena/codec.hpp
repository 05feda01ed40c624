#pragma once

// Compression codecs and the stored-container framing shared by every
// filesystem model.
//
//   container := codec_id u8 | raw_len u32 | stored_len u32 | crc32(raw) u32 | stored bytes
//
// LzFast is a byte-oriented LZ77 (token = literal run + back-reference),
// Deflate is zlib. FavorFast picks LzFast unless Deflate is more than 20%
// smaller than the LzFast output.

#include "ffsarena/bytes.hpp"

#include <zlib.h>

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ffsarena {

enum class Codec : std::uint8_t { None = 0, LzFast = 1, Deflate = 2, FavorFast = 3 };

inline std::string_view to_string(Codec c) {
  switch (c) {
    case Codec::None: return "none";
    case Codec::LzFast: return "lzfast";
    case Codec::Deflate: return "deflate";
    case Codec::FavorFast: return "favorfast";
  }
  return "?";
}

inline std::optional<Codec> parse_codec(std::string_view s) {
  for (auto c : {Codec::None, Codec::LzFast, Codec::Deflate, Codec::FavorFast})
    if (to_string(c) == s) return c;
  if (s == "lzo") return Codec::LzFast;
  if (s == "zlib") return Codec::Deflate;
  if (s == "favor_lzo") return Codec::FavorFast;
  return std::nullopt;
}

struct CodecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace lz {

inline constexpr std::size_t kMinMatch = 4;
inline constexpr std::size_t kWindow = 65535;
inline constexpr int kHashBits = 14;

inline std::uint32_t hash4(const std::uint8_t *p) {
  std::uint32_t v = std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
                    std::uint32_t{p[3]} << 24;
  return (v * 2654435761u) >> (32 - kHashBits);
}

inline void put_len(Bytes &out, std::size_t n) {
  while (n >= 255) {
    out.push_back(255);
    n -= 255;
  }
  out.push_back(static_cast<std::uint8_t>(n));
}

// Sequence: token(hi=literal len, lo=match len-4), [ext lit len], literals,
// offset u16, [ext match len]. The final sequence has literals only.
inline Bytes compress(ByteSpan in) {
  Bytes out;
  out.reserve(in.size() + in.size() / 255 + 16);
  std::array<std::int64_t, 1u << kHashBits> table;
  table.fill(-1);
  const std::uint8_t *base = in.data();
  const std::size_t n = in.size();
  std::size_t anchor = 0, i = 0;

  auto emit = [&](std::size_t lit_end, std::size_t match_len, std::size_t offset) {
    std::size_t lit = lit_end - anchor;
    std::uint8_t token = static_cast<std::uint8_t>((lit >= 15 ? 15 : lit) << 4);
    std::size_t ml = match_len ? match_len - kMinMatch : 0;
    if (match_len) token |= static_cast<std::uint8_t>(ml >= 15 ? 15 : ml);
    out.push_back(token);
    if (lit >= 15) put_len(out, lit - 15);
    out.insert(out.end(), base + anchor, base + lit_end);
    if (match_len) {
      out.push_back(static_cast<std::uint8_t>(offset));
      out.push_back(static_cast<std::uint8_t>(offset >> 8));
      if (ml >= 15) put_len(out, ml - 15);
    }
  };

  while (n >= kMinMatch && i + kMinMatch <= n) {
    auto h = hash4(base + i);
    auto cand = table[h];
    table[h] = static_cast<std::int64_t>(i);
    if (cand >= 0 && i - static_cast<std::size_t>(cand) <= kWindow &&
        std::memcmp(base + cand, base + i, kMinMatch) == 0) {
      std::size_t len = kMinMatch;
      while (i + len < n && base[cand + len] == base[i + len]) ++len;
      emit(i, len, i - static_cast<std::size_t>(cand));
      i += len;
      anchor = i;
    } else {
      ++i;
    }
  }
  emit(n, 0, 0);
  return out;
}

inline Bytes decompress(ByteSpan in, std::size_t raw_len) {
  Bytes out;
  out.reserve(raw_len);
  std::size_t i = 0;
  auto get_len = [&](std::size_t v) {
    if (v != 15) return v;
    for (;;) {
      if (i >= in.size()) throw CodecError("lzfast: truncated length");
      auto b = in[i++];
      v += b;
      if (b != 255) return v;
    }
  };
  while (i < in.size()) {
    auto token = in[i++];
    std::size_t lit = get_len(token >> 4);
    if (in.size() - i < lit) throw CodecError("lzfast: truncated literals");
    out.insert(out.end(), in.begin() + static_cast<std::ptrdiff_t>(i),
               in.begin() + static_cast<std::ptrdiff_t>(i + lit));
    i += lit;
    if (i == in.size()) break;
    if (in.size() - i < 2) throw CodecError("lzfast: truncated offset");
    std::size_t off = in[i] | std::size_t{in[i + 1]} << 8;
    i += 2;
    std::size_t ml = get_len(token & 15) + kMinMatch;
    if (off == 0 || off > out.size()) throw CodecError("lzfast: bad offset");
    std::size_t from = out.size() - off;
    for (std::size_t k = 0; k < ml; ++k) out.push_back(out[from + k]);
  }
  if (out.size() != raw_len) throw CodecError("lzfast: length mismatch");
  return out;
}

}  // namespace lz

namespace deflate {

inline Bytes compress(ByteSpan in) {
  uLongf bound = compressBound(static_cast<uLong>(in.size()));
  Bytes out(bound);
  if (compress2(out.data(), &bound, in.data(), static_cast<uLong>(in.size()), Z_DEFAULT_COMPRESSION) != Z_OK)
    throw CodecError("deflate failed");
  out.resize(bound);
  return out;
}

inline Bytes decompress(ByteSpan in, std::size_t raw_len) {
  Bytes out(raw_len);
  uLongf len = static_cast<uLongf>(raw_len);
  int rc = uncompress(out.data(), &len, in.data(), static_cast<uLong>(in.size()));
  if (rc != Z_OK || len != raw_len) throw CodecError("inflate failed");
  return out;
}

}  // namespace deflate

// Portion of a payload that FavorFast requires Deflate to save, relative to
// the LzFast output, before choosing it.
inline constexpr double kFavorMargin = 0.20;

struct Compressed {
  Codec used;  // never FavorFast
  Bytes bytes;
};

inline Compressed compress(Codec codec, ByteSpan payload) {
  switch (codec) {
    case Codec::None: return {Codec::None, Bytes(payload.begin(), payload.end())};
    case Codec::LzFast: return {Codec::LzFast, lz::compress(payload)};
    case Codec::Deflate: return {Codec::Deflate, deflate::compress(payload)};
    case Codec::FavorFast: {
      auto fast = lz::compress(payload);
      auto slow = deflate::compress(payload);
      if (static_cast<double>(slow.size()) < (1.0 - kFavorMargin) * static_cast<double>(fast.size()))
        return {Codec::Deflate, std::move(slow)};
      return {Codec::LzFast, std::move(fast)};
    }
  }
  throw CodecError("unknown codec");
}

inline Bytes decompress(Codec used, ByteSpan stored, std::size_t raw_len) {
  switch (used) {
    case Codec::None:
      if (stored.size() != raw_len) throw CodecError("stored length mismatch");
      return Bytes(stored.begin(), stored.end());
    case Codec::LzFast: return lz::decompress(stored, raw_len);
    case Codec::Deflate: return deflate::decompress(stored, raw_len);
    case Codec::FavorFast: break;
  }
  throw CodecError("invalid stored codec id");
}

inline constexpr std::size_t kContainerHeader = 1 + 4 + 4 + 4;

struct ContainerHeader {
  Codec codec = Codec::None;
  std::uint32_t raw_len = 0;
  std::uint32_t stored_len = 0;
  std::uint32_t raw_crc = 0;
};

// Compresses with `codec` and frames the result. Falls back to storing the
// raw bytes when compression does not shrink them.
inline Bytes pack_container(Codec codec, ByteSpan payload) {
  auto c = compress(codec, payload);
  if (c.bytes.size() >= payload.size()) c = {Codec::None, Bytes(payload.begin(), payload.end())};
  Bytes out;
  out.reserve(kContainerHeader + c.bytes.size());
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(c.used));
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.u32(static_cast<std::uint32_t>(c.bytes.size()));
  w.u32(crc32(payload));
  w.raw(c.bytes);
  return out;
}

inline ContainerHeader read_container_header(ByteReader &r) {
  ContainerHeader h;
  auto id = r.u8();
  if (id > static_cast<std::uint8_t>(Codec::Deflate)) throw CodecError("bad container codec");
  h.codec = static_cast<Codec>(id);
  h.raw_len = r.u32();
  h.stored_len = r.u32();
  h.raw_crc = r.u32();
  return h;
}

// Parses and decodes one container from `r`, verifying the payload CRC.
inline Bytes unpack_container(ByteReader &r) {
  auto h = read_container_header(r);
  auto raw = decompress(h.codec, r.raw(h.stored_len), h.raw_len);
  if (crc32(raw) != h.raw_crc) throw CodecError("container crc mismatch");
  return raw;
}

inline Bytes unpack_container(ByteSpan bytes) {
  ByteReader r(bytes);
  return unpack_container(r);
}

}  // namespace ffsarena
