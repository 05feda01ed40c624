#pragma once

// UBI-style logical erase block layer.
//
// Each physical block (PEB) carries an erase-counter header in page 0 and,
// once mapped, a volume-id header in page 1. A logical block (LEB) is the
// remaining pages. Attach reads both header pages of every PEB and rebuilds
// the LEB->PEB map. Unmapped PEBs are erased lazily; a wear-leveling step
// moves cold data off the least-worn PEB when the erase-count spread exceeds
// the threshold.
//
//   EC header:  magic "UBI#" u32 | ec u64 | crc32
//   VID header: magic "UBI!" u32 | lnum u32 | sqnum u64 | crc32

#include "ffsarena/flash.hpp"
#include "ffsarena/fs_types.hpp"

#include <deque>
#include <limits>
#include <optional>

namespace ffsarena {

struct UbiConfig {
  std::uint32_t wl_threshold = 16;
  // PEBs held back from the volume for wear leveling and bad-block handling.
  std::uint32_t reserved_pebs = 2;
};

class UbiDevice {
 public:
  static constexpr std::uint32_t kEcMagic = 0x23494255;   // "UBI#"
  static constexpr std::uint32_t kVidMagic = 0x21494255;  // "UBI!"
  static constexpr std::uint32_t kHeaderPages = 2;

  enum class PebState : std::uint8_t { Free, Used, Erase, Bad };

  struct Stats {
    std::uint64_t erases = 0;
    std::uint64_t wl_moves = 0;
    std::uint64_t maps = 0;
  };

  explicit UbiDevice(Mtd mtd, UbiConfig cfg = {}) : mtd_(mtd), cfg_(cfg) {
    if (mtd.ppb() <= kHeaderPages) throw FsError(FsErrc::PartitionTooSmall, "ubi: block too small");
    if (mtd.blocks() <= cfg.reserved_pebs) throw FsError(FsErrc::PartitionTooSmall, "ubi");
  }

  const Mtd &mtd() const { return mtd_; }
  std::uint32_t peb_count() const { return mtd_.blocks(); }
  std::uint32_t leb_count() const { return mtd_.blocks() - cfg_.reserved_pebs; }
  std::uint32_t leb_pages() const { return mtd_.ppb() - kHeaderPages; }
  std::uint32_t page_size() const { return mtd_.page_size(); }
  std::uint32_t leb_size() const { return leb_pages() * page_size(); }
  const UbiConfig &config() const { return cfg_; }
  const Stats &stats() const { return stats_; }
  bool attached() const { return attached_; }
  nanoseconds last_attach_time() const { return attach_time_; }

  // ubiformat: every good PEB ends up erased with an EC header. Existing
  // erase counters are carried over when readable. Blocks that are already
  // erased are not erased again.
  void format() {
    if (attached_) throw FsError(FsErrc::AlreadyMounted, "ubi format");
    std::vector<std::uint64_t> ecs(mtd_.blocks(), 0);
    std::uint64_t known = 0, sum = 0;
    for (std::uint32_t b = 0; b < mtd_.blocks(); ++b) {
      if (mtd_.is_bad(b)) continue;
      if (auto ec = parse_ec(mtd_.read(b, 0).data)) {
        ecs[b] = *ec;
        sum += *ec;
        ++known;
      }
    }
    const std::uint64_t mean = known ? sum / known : 0;
    for (std::uint32_t b = 0; b < mtd_.blocks(); ++b) {
      if (mtd_.is_bad(b)) continue;
      bool dirty = false;
      for (std::uint32_t p = 0; p < mtd_.ppb() && !dirty; ++p) dirty = !mtd_.is_erased(b, p);
      std::uint64_t ec = ecs[b] ? ecs[b] : mean;
      if (dirty) {
        if (!raw_erase(b)) continue;
        ++ec;
      }
      write_ec(b, ec);
    }
  }

  void attach() {
    if (attached_) throw FsError(FsErrc::AlreadyMounted, "ubi attach");
    auto t0 = mtd_.chip().elapsed();
    pebs_.assign(mtd_.blocks(), Peb{});
    leb_map_.assign(leb_count(), kUnmapped);
    erase_queue_.clear();
    next_sqnum_ = 1;
    std::vector<std::uint64_t> sqnums(leb_count(), 0);
    std::uint64_t ec_sum = 0, ec_known = 0;
    for (std::uint32_t b = 0; b < mtd_.blocks(); ++b) {
      auto &peb = pebs_[b];
      if (mtd_.is_bad(b)) {
        peb.state = PebState::Bad;
        continue;
      }
      auto ec = parse_ec(mtd_.read(b, 0).data);
      auto vid = parse_vid(mtd_.read(b, 1).data);
      if (!ec) {
        peb.state = PebState::Erase;
        peb.ec_unknown = true;
        continue;
      }
      peb.ec = *ec;
      ec_sum += *ec;
      ++ec_known;
      if (!vid || vid->lnum >= leb_count()) {
        peb.state = vid ? PebState::Erase : PebState::Free;
        continue;
      }
      next_sqnum_ = std::max(next_sqnum_, vid->sqnum + 1);
      auto &slot = leb_map_[vid->lnum];
      if (slot != kUnmapped) {
        // Two copies of one LEB: a move was interrupted. Newer wins.
        if (sqnums[vid->lnum] > vid->sqnum) {
          peb.state = PebState::Erase;
          continue;
        }
        pebs_[slot].state = PebState::Erase;
      }
      slot = b;
      sqnums[vid->lnum] = vid->sqnum;
      peb.state = PebState::Used;
      peb.leb = vid->lnum;
    }
    const std::uint64_t mean = ec_known ? ec_sum / ec_known : 0;
    for (std::uint32_t b = 0; b < mtd_.blocks(); ++b) {
      auto &peb = pebs_[b];
      if (peb.ec_unknown) peb.ec = mean;
      if (peb.state == PebState::Erase) erase_queue_.push_back(b);
    }
    attached_ = true;
    attach_time_ = mtd_.chip().elapsed() - t0;
  }

  // Pending erases complete before detach so unmapped LEBs stay unmapped.
  void detach() {
    require_attached();
    flush_erases();
    attached_ = false;
  }

  bool is_mapped(std::uint32_t leb) const { return leb_map_.at(leb) != kUnmapped; }
  std::optional<std::uint32_t> peb_of(std::uint32_t leb) const {
    auto p = leb_map_.at(leb);
    if (p == kUnmapped) return std::nullopt;
    return p;
  }

  void map(std::uint32_t leb) {
    require_attached();
    check_leb(leb);
    if (is_mapped(leb)) return;
    auto b = take_free(std::nullopt);
    write_vid(b, leb);
    leb_map_[leb] = b;
    pebs_[b].state = PebState::Used;
    pebs_[b].leb = leb;
    ++stats_.maps;
  }

  // Drops the mapping; the PEB is erased later.
  void unmap(std::uint32_t leb) {
    require_attached();
    check_leb(leb);
    auto b = leb_map_[leb];
    if (b == kUnmapped) return;
    leb_map_[leb] = kUnmapped;
    pebs_[b].state = PebState::Erase;
    erase_queue_.push_back(b);
  }

  void write(std::uint32_t leb, std::uint32_t page, ByteSpan data) {
    require_attached();
    if (page >= leb_pages()) throw FlashError(FlashErrc::OutOfRange, "ubi: page beyond LEB");
    map(leb);
    mtd_.program(leb_map_[leb], page + kHeaderPages, data);
  }

  // Unmapped LEBs read as erased without touching flash.
  PageRead read(std::uint32_t leb, std::uint32_t page) {
    require_attached();
    check_leb(leb);
    if (page >= leb_pages()) throw FlashError(FlashErrc::OutOfRange, "ubi: page beyond LEB");
    auto b = leb_map_[leb];
    if (b == kUnmapped) return PageRead{Bytes(page_size(), 0xff), Bytes(mtd_.oob_size(), 0xff)};
    return mtd_.read(b, page + kHeaderPages);
  }

  // Erases one queued PEB. Returns false when the queue is empty.
  bool erase_one() {
    if (erase_queue_.empty()) return false;
    auto b = erase_queue_.front();
    erase_queue_.pop_front();
    erase_peb(b);
    return true;
  }

  void flush_erases() {
    while (erase_one()) {
    }
  }

  std::size_t pending_erases() const { return erase_queue_.size(); }

  std::size_t free_pebs() const {
    return static_cast<std::size_t>(
        std::count_if(pebs_.begin(), pebs_.end(), [](const Peb &p) { return p.state == PebState::Free; }));
  }

  // One wear-leveling move if the erase-count spread exceeds the threshold.
  bool wear_level_step() {
    require_attached();
    std::optional<std::uint32_t> cold, hot;
    std::uint64_t max_ec = 0;
    for (std::uint32_t b = 0; b < pebs_.size(); ++b) {
      const auto &p = pebs_[b];
      if (p.state == PebState::Bad) continue;
      max_ec = std::max(max_ec, p.ec);
      if (p.state == PebState::Used && (!cold || p.ec < pebs_[*cold].ec)) cold = b;
      if (p.state == PebState::Free && (!hot || p.ec > pebs_[*hot].ec)) hot = b;
    }
    if (!cold || !hot || max_ec - pebs_[*cold].ec <= cfg_.wl_threshold) return false;
    if (pebs_[*hot].ec <= pebs_[*cold].ec) return false;
    auto src = *cold, dst = *hot;
    auto leb = pebs_[src].leb;
    pebs_[dst].state = PebState::Used;
    write_vid(dst, leb);
    for (std::uint32_t p = kHeaderPages; p < mtd_.ppb(); ++p) {
      auto pr = mtd_.read(src, p);
      if (!all_ff(pr.data)) mtd_.program(dst, p, pr.data);
    }
    pebs_[dst].leb = leb;
    leb_map_[leb] = dst;
    ++stats_.wl_moves;
    in_wl_ = true;
    erase_peb(src);
    in_wl_ = false;
    return true;
  }

  std::uint64_t ec(std::uint32_t peb) const { return pebs_.at(peb).ec; }
  PebState state(std::uint32_t peb) const { return pebs_.at(peb).state; }

  std::pair<std::uint64_t, std::uint64_t> ec_range() const {
    std::uint64_t lo = std::numeric_limits<std::uint64_t>::max(), hi = 0;
    for (const auto &p : pebs_) {
      if (p.state == PebState::Bad) continue;
      lo = std::min(lo, p.ec);
      hi = std::max(hi, p.ec);
    }
    if (lo > hi) lo = hi;
    return {lo, hi};
  }

  // LEB -> PEB table, -1 for unmapped.
  std::vector<std::int64_t> mapping() const {
    std::vector<std::int64_t> out;
    for (auto p : leb_map_) out.push_back(p == kUnmapped ? -1 : static_cast<std::int64_t>(p));
    return out;
  }

  // Checks that no PEB backs two LEBs and every mapped PEB is in use.
  bool mapping_injective() const {
    std::vector<bool> seen(pebs_.size(), false);
    for (std::uint32_t l = 0; l < leb_map_.size(); ++l) {
      auto p = leb_map_[l];
      if (p == kUnmapped) continue;
      if (seen[p] || pebs_[p].state != PebState::Used || pebs_[p].leb != l) return false;
      seen[p] = true;
    }
    return true;
  }

 private:
  static constexpr std::uint32_t kUnmapped = std::numeric_limits<std::uint32_t>::max();

  struct Peb {
    std::uint64_t ec = 0;
    PebState state = PebState::Free;
    std::uint32_t leb = 0;
    bool ec_unknown = false;
  };
  struct Vid {
    std::uint32_t lnum;
    std::uint64_t sqnum;
  };

  void require_attached() const {
    if (!attached_) throw FsError(FsErrc::NotMounted, "ubi");
  }
  void check_leb(std::uint32_t leb) const {
    if (leb >= leb_count()) throw FlashError(FlashErrc::OutOfRange, "ubi: LEB out of range");
  }

  static std::optional<std::uint64_t> parse_ec(ByteSpan page) {
    try {
      ByteReader r(page);
      if (r.u32() != kEcMagic) return std::nullopt;
      auto ec = r.u64();
      if (crc32(page.first(12)) != r.u32()) return std::nullopt;
      return ec;
    } catch (const DecodeError &) {
      return std::nullopt;
    }
  }

  static std::optional<Vid> parse_vid(ByteSpan page) {
    try {
      ByteReader r(page);
      if (r.u32() != kVidMagic) return std::nullopt;
      Vid v{r.u32(), r.u64()};
      if (crc32(page.first(16)) != r.u32()) return std::nullopt;
      return v;
    } catch (const DecodeError &) {
      return std::nullopt;
    }
  }

  void write_ec(std::uint32_t b, std::uint64_t ec) {
    Bytes h;
    ByteWriter w(h);
    w.u32(kEcMagic);
    w.u64(ec);
    w.u32(crc32(h));
    mtd_.program(b, 0, h);
  }

  void write_vid(std::uint32_t b, std::uint32_t leb) {
    Bytes h;
    ByteWriter w(h);
    w.u32(kVidMagic);
    w.u32(leb);
    w.u64(next_sqnum_++);
    w.u32(crc32(h));
    mtd_.program(b, 1, h);
  }

  bool raw_erase(std::uint32_t b) {
    try {
      mtd_.erase(b);
      return true;
    } catch (const FlashError &e) {
      if (e.code() != FlashErrc::BlockWornOut) throw;
      return false;
    }
  }

  void erase_peb(std::uint32_t b) {
    auto &p = pebs_[b];
    if (!raw_erase(b)) {
      p.state = PebState::Bad;
      return;
    }
    ++p.ec;
    p.ec_unknown = false;
    write_ec(b, p.ec);
    p.state = PebState::Free;
    ++stats_.erases;
    if (!in_wl_) wear_level_step();
  }

  // Lowest-EC free PEB, erasing queued PEBs when none is free.
  std::uint32_t take_free(std::optional<std::uint32_t> exclude) {
    for (;;) {
      std::optional<std::uint32_t> best;
      for (std::uint32_t b = 0; b < pebs_.size(); ++b) {
        if (pebs_[b].state != PebState::Free || b == exclude) continue;
        if (!best || pebs_[b].ec < pebs_[*best].ec) best = b;
      }
      if (best) return *best;
      if (!erase_one()) throw FsError(FsErrc::NoSpace, "ubi: no free PEB");
    }
  }

  Mtd mtd_;
  UbiConfig cfg_;
  std::vector<Peb> pebs_;
  std::vector<std::uint32_t> leb_map_;
  std::deque<std::uint32_t> erase_queue_;
  std::uint64_t next_sqnum_ = 1;
  bool attached_ = false;
  bool in_wl_ = false;
  nanoseconds attach_time_{0};
  Stats stats_;
};

}  // namespace ffsarena
