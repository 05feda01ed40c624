#pragma once

// Raw NAND chip model behind an MTD-like partition interface.
//
// The chip is a flat array of erase blocks (planes are not modeled). Every
// page is one-shot programmable between erases and every operation advances
// a virtual clock by its nominal latency, so elapsed time is a pure function
// of the executed operation sequence.

#include "ffsarena/bytes.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ffsarena {

using std::chrono::microseconds;
using std::chrono::nanoseconds;

struct FlashGeometry {
  std::uint32_t page_data_bytes = 2048;
  std::uint32_t oob_bytes = 64;
  std::uint32_t pages_per_block = 64;
  std::uint32_t blocks_per_chip = 2048;
  microseconds read_latency{25};
  microseconds write_latency{300};
  microseconds erase_latency{2000};
  std::uint32_t endurance_limit = 100000;

  std::uint32_t block_bytes() const { return page_data_bytes * pages_per_block; }
  std::uint64_t chip_bytes() const { return std::uint64_t{block_bytes()} * blocks_per_chip; }

  void validate() const {
    if (page_data_bytes == 0 || oob_bytes == 0 || pages_per_block == 0 || blocks_per_chip == 0 ||
        endurance_limit == 0)
      throw std::invalid_argument("flash geometry counts must be positive");
    if (read_latency.count() < 0 || write_latency.count() < 0 || erase_latency.count() < 0)
      throw std::invalid_argument("flash latencies must be non-negative");
  }

  friend bool operator==(const FlashGeometry &, const FlashGeometry &) = default;
};

// Blocks needed for a partition of `mib` MiB on this geometry.
inline std::uint32_t blocks_for_mib(const FlashGeometry &g, std::uint32_t mib) {
  return static_cast<std::uint32_t>((std::uint64_t{mib} << 20) / g.block_bytes());
}

struct Partition {
  std::uint32_t first_block = 0;
  std::uint32_t block_count = 0;

  bool overlaps(const Partition &o) const {
    return first_block < o.first_block + o.block_count && o.first_block < first_block + block_count;
  }
  friend bool operator==(const Partition &, const Partition &) = default;
};

enum class FlashErrc { OutOfRange, BadBlock, NotErased, SizeMismatch, BlockWornOut, CorruptImage };

inline const char *to_string(FlashErrc e) {
  switch (e) {
    case FlashErrc::OutOfRange: return "OutOfRange";
    case FlashErrc::BadBlock: return "BadBlock";
    case FlashErrc::NotErased: return "NotErased";
    case FlashErrc::SizeMismatch: return "SizeMismatch";
    case FlashErrc::BlockWornOut: return "BlockWornOut";
    case FlashErrc::CorruptImage: return "CorruptImage";
  }
  return "?";
}

class FlashError : public std::runtime_error {
 public:
  FlashError(FlashErrc code, const std::string &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  FlashErrc code() const { return code_; }

 private:
  FlashErrc code_;
};

enum class PageState : std::uint8_t { Erased = 0, Programmed = 1 };

struct FlashStats {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t erases = 0;
  std::uint64_t not_erased_violations = 0;

  FlashStats operator-(const FlashStats &o) const {
    return {reads - o.reads, writes - o.writes, erases - o.erases,
            not_erased_violations - o.not_erased_violations};
  }
  friend bool operator==(const FlashStats &, const FlashStats &) = default;
};

struct PageRead {
  Bytes data;
  Bytes oob;
};

// One executed chip operation, absolute block/page addressing.
struct FlashOp {
  enum Kind : std::uint8_t { Read, Program, Erase, Cpu } kind;
  std::uint32_t block = 0;
  std::uint32_t page = 0;
  std::int64_t cpu_ns = 0;
};

struct WearModel {
  // When set, erases past 90% of the endurance limit fail with rising
  // probability instead of failing exactly at the limit.
  bool probabilistic = false;
  std::uint64_t seed = 0;
};

class FlashChip {
 public:
  explicit FlashChip(FlashGeometry g = {}, WearModel wear = {})
      : geo_(g), wear_(wear), wear_rng_(wear.seed), blocks_(g.blocks_per_chip) {
    geo_.validate();
    for (auto &b : blocks_) b.pages.resize(geo_.pages_per_block);
  }

  const FlashGeometry &geometry() const { return geo_; }
  Partition whole_chip() const { return {0, geo_.blocks_per_chip}; }

  Partition make_partition(std::uint32_t first_block, std::uint32_t block_count) const {
    if (block_count == 0 || std::uint64_t{first_block} + block_count > geo_.blocks_per_chip)
      throw FlashError(FlashErrc::OutOfRange, "partition exceeds chip");
    return {first_block, block_count};
  }

  // ---- page / block operations (partition-relative addressing) ----

  PageRead read_page(const Partition &part, std::uint32_t page) {
    auto [blk, pg] = locate(part, page);
    auto &b = blocks_[blk];
    if (b.bad) throw FlashError(FlashErrc::BadBlock, "read of bad block " + std::to_string(blk));
    tick(geo_.read_latency);
    ++stats_.reads;
    log({FlashOp::Read, blk, pg, 0});
    PageRead r;
    const auto &p = b.pages[pg];
    if (p.empty()) {
      r.data.assign(geo_.page_data_bytes, 0xFF);
      r.oob.assign(geo_.oob_bytes, 0xFF);
    } else {
      r.data.assign(p.begin(), p.begin() + geo_.page_data_bytes);
      r.oob.assign(p.begin() + geo_.page_data_bytes, p.end());
    }
    return r;
  }

  // `data` and `oob` may be shorter than the geometry; the rest is 0xFF.
  void program_page(const Partition &part, std::uint32_t page, ByteSpan data, ByteSpan oob) {
    auto [blk, pg] = locate(part, page);
    auto &b = blocks_[blk];
    if (b.bad) throw FlashError(FlashErrc::BadBlock, "program of bad block " + std::to_string(blk));
    if (data.size() > geo_.page_data_bytes || oob.size() > geo_.oob_bytes)
      throw FlashError(FlashErrc::SizeMismatch, "payload larger than page");
    auto &p = b.pages[pg];
    if (!p.empty()) {
      ++stats_.not_erased_violations;
      throw FlashError(FlashErrc::NotErased,
                       "block " + std::to_string(blk) + " page " + std::to_string(pg));
    }
    p.assign(geo_.page_data_bytes + geo_.oob_bytes, 0xFF);
    std::copy(data.begin(), data.end(), p.begin());
    std::copy(oob.begin(), oob.end(), p.begin() + geo_.page_data_bytes);
    tick(geo_.write_latency);
    ++stats_.writes;
    log({FlashOp::Program, blk, pg, 0});
  }

  void erase_block(const Partition &part, std::uint32_t block) {
    std::uint32_t blk = abs_block(part, block);
    auto &b = blocks_[blk];
    if (b.bad) throw FlashError(FlashErrc::BadBlock, "erase of bad block " + std::to_string(blk));
    for (auto &p : b.pages) Bytes().swap(p);
    ++b.erase_count;
    tick(geo_.erase_latency);
    ++stats_.erases;
    log({FlashOp::Erase, blk, 0, 0});
    if (worn_out(b.erase_count)) {
      set_bad(b);
      throw FlashError(FlashErrc::BlockWornOut, "block " + std::to_string(blk));
    }
  }

  void mark_bad(const Partition &part, std::uint32_t block) { set_bad(blocks_[abs_block(part, block)]); }
  bool is_bad(const Partition &part, std::uint32_t block) const {
    return blocks_[abs_block(part, block)].bad;
  }
  std::uint32_t erase_count(const Partition &part, std::uint32_t block) const {
    return blocks_[abs_block(part, block)].erase_count;
  }
  PageState page_state(const Partition &part, std::uint32_t page) const {
    auto [blk, pg] = locate(part, page);
    return blocks_[blk].pages[pg].empty() ? PageState::Erased : PageState::Programmed;
  }
  // Number of programmed pages in the partition (no clock charge).
  std::uint64_t programmed_pages(const Partition &part) const {
    std::uint64_t n = 0;
    for (std::uint32_t b = 0; b < part.block_count; ++b)
      for (const auto &p : blocks_[part.first_block + b].pages) n += !p.empty();
    return n;
  }

  // Copies every programmed page of `src_part` on `src` into the erased
  // `dst_part` of this chip (nandwrite of an image). Charges program latency.
  void write_image_pages(const FlashChip &src, const Partition &src_part, const Partition &dst_part) {
    if (src.geometry().page_data_bytes != geo_.page_data_bytes ||
        src.geometry().pages_per_block != geo_.pages_per_block || src_part.block_count > dst_part.block_count)
      throw FlashError(FlashErrc::SizeMismatch, "image geometry mismatch");
    const auto ppb = geo_.pages_per_block;
    for (std::uint32_t b = 0; b < src_part.block_count; ++b) {
      const auto &sb = src.blocks_[src_part.first_block + b];
      for (std::uint32_t p = 0; p < ppb; ++p) {
        const auto &sp = sb.pages[p];
        if (sp.empty()) continue;
        ByteSpan all(sp);
        program_page(dst_part, b * ppb + p, all.first(geo_.page_data_bytes),
                     all.subspan(geo_.page_data_bytes));
      }
    }
  }

  // ---- clock ----

  nanoseconds elapsed() const { return now_; }
  void charge_cpu(nanoseconds cost) {
    if (cost.count() <= 0) return;
    tick(cost);
    log({FlashOp::Cpu, 0, 0, cost.count()});
  }

  const FlashStats &stats() const { return stats_; }

  void enable_op_log(bool on = true) {
    logging_ = on;
    if (!on) ops_.clear();
  }
  const std::vector<FlashOp> &op_log() const { return ops_; }

  // ---- image persistence ----

  static constexpr std::uint16_t kImageVersion = 1;

  static std::uint64_t image_size(const FlashGeometry &g) {
    std::uint64_t per_page = 1 + g.page_data_bytes + g.oob_bytes;
    std::uint64_t per_block = 4 + 1 + per_page * g.pages_per_block;
    return header_size() + per_block * g.blocks_per_chip + 4;
  }

  Bytes save_image() const {
    Bytes out;
    out.reserve(image_size(geo_));
    ByteWriter w(out);
    w.raw(as_bytes("FFSA"));
    w.u16(kImageVersion);
    w.u32(geo_.page_data_bytes);
    w.u32(geo_.oob_bytes);
    w.u32(geo_.pages_per_block);
    w.u32(geo_.blocks_per_chip);
    w.u32(static_cast<std::uint32_t>(geo_.read_latency.count()));
    w.u32(static_cast<std::uint32_t>(geo_.write_latency.count()));
    w.u32(static_cast<std::uint32_t>(geo_.erase_latency.count()));
    w.u32(geo_.endurance_limit);
    const std::size_t page_total = geo_.page_data_bytes + geo_.oob_bytes;
    for (const auto &b : blocks_) {
      w.u32(b.erase_count);
      w.u8(b.bad ? 1 : 0);
      for (const auto &p : b.pages) {
        w.u8(static_cast<std::uint8_t>(p.empty() ? PageState::Erased : PageState::Programmed));
        if (p.empty())
          out.insert(out.end(), page_total, 0xFF);
        else
          w.raw(p);
      }
    }
    w.u32(crc32(out));
    return out;
  }

  static FlashChip load_image(ByteSpan img) {
    if (img.size() < header_size() + 4) throw FlashError(FlashErrc::CorruptImage, "truncated image");
    std::uint32_t stored_crc = ByteReader(img.subspan(img.size() - 4)).u32();
    if (crc32(img.first(img.size() - 4)) != stored_crc)
      throw FlashError(FlashErrc::CorruptImage, "checksum mismatch");
    try {
      ByteReader r(img.first(img.size() - 4));
      auto magic = r.raw(4);
      if (std::memcmp(magic.data(), "FFSA", 4) != 0) throw FlashError(FlashErrc::CorruptImage, "bad magic");
      if (r.u16() != kImageVersion) throw FlashError(FlashErrc::CorruptImage, "unsupported version");
      FlashGeometry g;
      g.page_data_bytes = r.u32();
      g.oob_bytes = r.u32();
      g.pages_per_block = r.u32();
      g.blocks_per_chip = r.u32();
      g.read_latency = microseconds(r.u32());
      g.write_latency = microseconds(r.u32());
      g.erase_latency = microseconds(r.u32());
      g.endurance_limit = r.u32();
      try {
        g.validate();
      } catch (const std::invalid_argument &e) {
        throw FlashError(FlashErrc::CorruptImage, e.what());
      }
      if (img.size() != image_size(g)) throw FlashError(FlashErrc::CorruptImage, "size mismatch");
      FlashChip chip(g);
      const std::size_t page_total = g.page_data_bytes + g.oob_bytes;
      for (auto &b : chip.blocks_) {
        b.erase_count = r.u32();
        b.bad = r.u8() != 0;
        for (auto &p : b.pages) {
          auto state = r.u8();
          auto raw = r.raw(page_total);
          if (state == static_cast<std::uint8_t>(PageState::Programmed))
            p.assign(raw.begin(), raw.end());
          else if (state != static_cast<std::uint8_t>(PageState::Erased))
            throw FlashError(FlashErrc::CorruptImage, "bad page state");
        }
      }
      return chip;
    } catch (const DecodeError &e) {
      throw FlashError(FlashErrc::CorruptImage, e.what());
    }
  }

  // State equality ignoring clock, counters and logs.
  bool same_media(const FlashChip &o) const {
    if (!(geo_ == o.geo_)) return false;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto &a = blocks_[i], &b = o.blocks_[i];
      if (a.erase_count != b.erase_count || a.bad != b.bad || a.pages != b.pages) return false;
    }
    return true;
  }

 private:
  struct Block {
    std::uint32_t erase_count = 0;
    bool bad = false;
    std::vector<Bytes> pages;  // empty == erased; else data ++ oob
  };

  static std::uint64_t header_size() { return 4 + 2 + 8 * 4; }

  std::uint32_t abs_block(const Partition &part, std::uint32_t block) const {
    if (block >= part.block_count || std::uint64_t{part.first_block} + block >= geo_.blocks_per_chip)
      throw FlashError(FlashErrc::OutOfRange, "block " + std::to_string(block));
    return part.first_block + block;
  }
  std::pair<std::uint32_t, std::uint32_t> locate(const Partition &part, std::uint32_t page) const {
    return {abs_block(part, page / geo_.pages_per_block), page % geo_.pages_per_block};
  }

  void set_bad(Block &b) {
    if (b.bad) return;
    b.bad = true;
    // Factory-style marker: OOB byte 0 of page 0 != 0xFF.
    auto &p0 = b.pages[0];
    if (p0.empty()) p0.assign(geo_.page_data_bytes + geo_.oob_bytes, 0xFF);
    p0[geo_.page_data_bytes] = 0x00;
  }

  bool worn_out(std::uint32_t erase_count) {
    if (!wear_.probabilistic) return erase_count > geo_.endurance_limit;
    double start = 0.9 * geo_.endurance_limit;
    if (erase_count <= start) return false;
    double p = (erase_count - start) / (0.1 * geo_.endurance_limit + 1.0);
    return std::uniform_real_distribution<double>(0.0, 1.0)(wear_rng_) < p;
  }

  void tick(nanoseconds d) { now_ += d; }
  void log(FlashOp op) {
    if (logging_) ops_.push_back(op);
  }

  FlashGeometry geo_;
  WearModel wear_;
  std::mt19937_64 wear_rng_;
  std::vector<Block> blocks_;
  nanoseconds now_{0};
  FlashStats stats_;
  bool logging_ = false;
  std::vector<FlashOp> ops_;
};

// Replays a recorded operation log on a fresh chip and returns its elapsed
// time. Program payloads are irrelevant to timing and are replaced by zeros.
inline nanoseconds replay_elapsed(const FlashGeometry &g, const std::vector<FlashOp> &ops) {
  FlashChip chip(g);
  auto all = chip.whole_chip();
  Bytes zero(1, 0);
  for (const auto &op : ops) {
    std::uint32_t page = op.block * g.pages_per_block + op.page;
    switch (op.kind) {
      case FlashOp::Read: chip.read_page(all, page); break;
      case FlashOp::Program: chip.program_page(all, page, zero, {}); break;
      case FlashOp::Erase:
        try {
          chip.erase_block(all, op.block);
        } catch (const FlashError &e) {
          if (e.code() != FlashErrc::BlockWornOut) throw;
        }
        break;
      case FlashOp::Cpu: chip.charge_cpu(nanoseconds(op.cpu_ns)); break;
    }
  }
  return chip.elapsed();
}

// Convenience view: a chip plus one partition, with partition-relative
// block/page helpers used by the filesystem models.
class Mtd {
 public:
  Mtd(FlashChip &chip, Partition part) : chip_(&chip), part_(part) {}

  FlashChip &chip() const { return *chip_; }
  const Partition &partition() const { return part_; }
  const FlashGeometry &geometry() const { return chip_->geometry(); }
  std::uint32_t blocks() const { return part_.block_count; }
  std::uint32_t ppb() const { return geometry().pages_per_block; }
  std::uint32_t page_size() const { return geometry().page_data_bytes; }
  std::uint32_t oob_size() const { return geometry().oob_bytes; }
  std::uint32_t page_index(std::uint32_t block, std::uint32_t page) const { return block * ppb() + page; }

  PageRead read(std::uint32_t block, std::uint32_t page) const {
    return chip_->read_page(part_, page_index(block, page));
  }
  void program(std::uint32_t block, std::uint32_t page, ByteSpan data, ByteSpan oob = {}) const {
    chip_->program_page(part_, page_index(block, page), data, oob);
  }
  void erase(std::uint32_t block) const { chip_->erase_block(part_, block); }
  bool is_bad(std::uint32_t block) const { return chip_->is_bad(part_, block); }
  void mark_bad(std::uint32_t block) const { chip_->mark_bad(part_, block); }
  bool is_erased(std::uint32_t block, std::uint32_t page) const {
    return chip_->page_state(part_, page_index(block, page)) == PageState::Erased;
  }
  std::uint32_t erase_count(std::uint32_t block) const { return chip_->erase_count(part_, block); }

 private:
  FlashChip *chip_;
  Partition part_;
};

}  // namespace ffsarena
