#pragma once

// YAFFS2-style chunk store.
//
// Every object has one header chunk (chunk_id 0) and page-sized data chunks.
// Chunks are appended at a strictly sequential cursor; the OOB area carries
// the tags that let a mount scan rebuild the object table by sequence number.
// A clean unmount writes a checkpoint into the last four blocks so the next
// mount can skip the scan.
//
// OOB tags (from OOB byte 2, byte 0 stays the bad-block marker):
//   object u32 | chunk_id u32 | seq u32 | byte_count u16 | crc16 of the above
// Header chunk data:
//   kind u8 | parent u32 | name | size u64 | deleted u8

#include "ffsarena/volume.hpp"

#include <map>
#include <unordered_map>

namespace ffsarena {

struct Yaffs2Config {
  VolumeConfig volume{};
  // Threshold GC runs while free blocks are below this count.
  std::uint32_t gc_free_threshold = 6;
  // Free blocks only GC may consume.
  std::uint32_t reserve_blocks = 2;
  std::uint32_t checkpoint_blocks = 4;
};

class Yaffs2Volume final : public FfsVolume {
 public:
  static constexpr std::size_t kTagOffset = 2;
  static constexpr std::size_t kTagBytes = 16;
  static constexpr std::uint32_t kCheckpointMagic = 0x504b4359;  // "YCKP"
  static constexpr std::uint32_t kNoLoc = 0xffffffff;

  struct GcStats {
    std::uint64_t inline_erases = 0;
    std::uint64_t threshold_collections = 0;
    std::uint64_t chunks_copied = 0;
  };

  struct MountInfo {
    bool from_checkpoint = false;
    std::uint32_t pages_read = 0;
  };

  Yaffs2Volume(Mtd mtd, Yaffs2Config cfg = {}) : FfsVolume(mtd, force_none(cfg.volume)), ycfg_(cfg) {
    if (mtd.blocks() < cfg.checkpoint_blocks + cfg.reserve_blocks + 2)
      throw FsError(FsErrc::PartitionTooSmall, "yaffs2");
    data_blocks_ = mtd.blocks() - cfg.checkpoint_blocks;
  }

  std::string_view name() const override { return "yaffs2"; }

  // Erases every block that holds programmed pages. An erased partition is
  // already a valid empty filesystem.
  void format() override {
    if (mounted()) throw FsError(FsErrc::AlreadyMounted, "yaffs2 format");
    for (std::uint32_t b = 0; b < mtd_.blocks(); ++b) {
      if (mtd_.is_bad(b) || !has_programmed(b)) continue;
      try {
        mtd_.erase(b);
      } catch (const FlashError &e) {
        if (e.code() != FlashErrc::BlockWornOut) throw;
      }
    }
  }

  void gc_step() override {
    require_mounted();
    if (free_count_ >= ycfg_.gc_free_threshold || !collect())
      throw FsError(FsErrc::NothingToCollect, "yaffs2");
  }

  const GcStats &gc_stats() const { return gc_stats_; }
  const MountInfo &last_mount() const { return mount_info_; }
  bool checkpoint_valid() const { return ckpt_valid_; }
  std::uint32_t seq() const { return next_seq_; }
  std::uint32_t free_blocks() const { return free_count_; }
  std::uint32_t data_blocks() const { return data_blocks_; }

  // Stored pages per object (header + data chunks); empty if absent.
  std::optional<std::uint32_t> object_chunks(Ino ino) const {
    auto it = objs_.find(ino);
    if (it == objs_.end()) return std::nullopt;
    return static_cast<std::uint32_t>(1 + it->second.chunks.size());
  }

  // Canonical dump of the object table, for comparing two mounts.
  std::string dump_objects() const {
    std::map<Ino, std::string> rows;
    for (const auto &[ino, o] : objs_) {
      std::string r = std::to_string(static_cast<int>(o.kind)) + " " + std::to_string(o.parent) + " " + o.name +
                      " " + std::to_string(o.size) + " h" + std::to_string(o.header);
      for (auto c : o.chunks) r += " " + std::to_string(c);
      rows[ino] = r;
    }
    std::string out;
    for (const auto &[ino, r] : rows) out += std::to_string(ino) + ": " + r + "\n";
    return out;
  }

  std::uint64_t meta_ram_bytes() const override {
    std::uint64_t n = 0;
    for (const auto &[ino, o] : objs_) n += 48 + o.name.size() + 4 * o.chunks.size() + 8 * o.children.size();
    return n + std::uint64_t{blocks_.size()} * 16 + std::uint64_t{data_blocks_} * mtd_.ppb() / 8;
  }
  std::uint64_t used_flash_bytes() const override {
    std::uint64_t pages = 0;
    for (const auto &b : blocks_) pages += b.valid;
    return pages * mtd_.page_size();
  }
  std::uint64_t capacity_bytes() const override {
    return std::uint64_t{data_blocks_} * mtd_.geometry().block_bytes();
  }
  std::uint64_t reclaimable_blocks() const override {
    std::uint64_t n = 0;
    for (const auto &b : blocks_)
      if (!b.bad && b.used > 0 && b.valid < b.used) ++n;
    return n;
  }

 protected:
  void do_mount() override {
    reset_ram();
    mount_info_ = {};
    auto reads_before = chip().stats().reads;
    if (!load_checkpoint()) scan();
    mount_info_.pages_read = static_cast<std::uint32_t>(chip().stats().reads - reads_before);
  }

  void do_unmount() override {
    drain_erases();
    if (!ckpt_valid_) write_checkpoint();
  }

  std::optional<DirEntry> fs_lookup(Ino dir, std::string_view name) override {
    auto &d = obj(dir);
    auto it = d.children.find(std::string(name));
    if (it == d.children.end()) return std::nullopt;
    return DirEntry{it->first, obj(it->second).kind, it->second};
  }

  std::vector<DirEntry> fs_list(Ino dir) override {
    std::vector<DirEntry> out;
    for (const auto &[n, ino] : obj(dir).children) out.push_back(DirEntry{n, obj(ino).kind, ino});
    return out;
  }

  FileAttr fs_getattr(Ino ino) override {
    auto &o = obj(ino);
    return FileAttr{o.kind, o.kind == FileKind::File ? o.size : 0, ino};
  }

  Ino fs_create(Ino dir, std::string_view name, FileKind kind) override {
    begin_mutation();
    Ino ino = next_ino_++;
    Object o;
    o.kind = kind;
    o.parent = dir;
    o.name = std::string(name);
    o.header = program_chunk(ino, 0, header_bytes(o, false), 0);
    obj(dir).children.emplace(o.name, ino);
    objs_.emplace(ino, std::move(o));
    drain_erases();
    return ino;
  }

  void fs_remove(Ino dir, const DirEntry &e) override {
    begin_mutation();
    auto &o = obj(e.inode);
    read_loc(o.header);
    // The deletion header may use the reserve so a full volume can be emptied.
    use_reserve_ = true;
    std::uint32_t del = 0;
    try {
      del = program_chunk(e.inode, 0, header_bytes(o, true), 0);
    } catch (...) {
      use_reserve_ = false;
      throw;
    }
    use_reserve_ = false;
    invalidate(o.header, false);
    for (auto loc : o.chunks)
      if (loc != kNoLoc) invalidate(loc, true);
    obj(dir).children.erase(e.name);
    objs_.erase(e.inode);
    deleted_[e.inode] = del;
    release_deletion_if_alone(e.inode);
    drain_erases();
  }

  void fs_write(Ino ino, std::uint64_t offset, ByteSpan data) override {
    begin_mutation();
    const std::uint64_t ps = mtd_.page_size();
    auto &o = obj(ino);
    const std::uint64_t end = offset + data.size();
    const std::uint64_t new_size = std::max(o.size, end);
    if (!data.empty()) {
      for (std::uint64_t k = offset / ps; k * ps < end; ++k) {
        const std::uint64_t cs = k * ps, ce = cs + ps;
        if (o.chunks.size() <= k) o.chunks.resize(k + 1, kNoLoc);
        Bytes buf(ps, 0);
        auto old = o.chunks[k];
        bool whole = offset <= cs && end >= std::min(ce, new_size);
        if (old != kNoLoc && !whole && o.size > cs) {
          auto pr = read_loc(old);
          auto keep = static_cast<std::ptrdiff_t>(std::min(ps, o.size - cs));
          std::copy(pr.data.begin(), pr.data.begin() + keep, buf.begin());
        }
        auto from = std::max(offset, cs), to = std::min(end, ce);
        std::copy(data.begin() + static_cast<std::ptrdiff_t>(from - offset),
                  data.begin() + static_cast<std::ptrdiff_t>(to - offset),
                  buf.begin() + static_cast<std::ptrdiff_t>(from - cs));
        auto count = static_cast<std::uint16_t>(std::min(ps, new_size - cs));
        buf.resize(count);
        o.chunks[k] = program_chunk(ino, static_cast<std::uint32_t>(k + 1), buf, count);
        if (old != kNoLoc) invalidate(old, whole);
      }
    }
    o.size = new_size;
    rewrite_header(ino, o);
    drain_erases();
  }

  Bytes fs_read(Ino ino) override {
    auto &o = obj(ino);
    Bytes out(o.size, 0);
    const std::uint64_t ps = mtd_.page_size();
    for (std::size_t k = 0; k < o.chunks.size(); ++k) {
      if (o.chunks[k] == kNoLoc) continue;
      auto pr = read_loc(o.chunks[k]);
      auto n = std::min<std::uint64_t>(ps, o.size - k * ps);
      std::copy(pr.data.begin(), pr.data.begin() + static_cast<std::ptrdiff_t>(n),
                out.begin() + static_cast<std::ptrdiff_t>(k * ps));
    }
    return out;
  }

  void fs_background() override {
    if (free_count_ < ycfg_.gc_free_threshold) collect();
  }

 private:
  struct Object {
    FileKind kind = FileKind::File;
    Ino parent = 0;
    std::string name;
    std::uint64_t size = 0;
    std::uint32_t header = kNoLoc;
    std::vector<std::uint32_t> chunks;  // chunk_id - 1 -> location
    std::map<std::string, Ino> children;
  };
  struct PageOwner {
    std::uint32_t object = 0;
    std::uint32_t chunk_id = 0;
    bool valid = false;
  };
  struct BlockInfo {
    std::uint32_t used = 0;
    std::uint32_t valid = 0;
    bool bad = false;
    std::vector<PageOwner> pages;
  };
  struct Tags {
    std::uint32_t object, chunk_id, seq;
    std::uint16_t byte_count;
  };

  static VolumeConfig force_none(VolumeConfig v) {
    v.codec = Codec::None;
    return v;
  }

  bool has_programmed(std::uint32_t b) const {
    for (std::uint32_t p = 0; p < mtd_.ppb(); ++p)
      if (!mtd_.is_erased(b, p)) return true;
    return false;
  }

  void reset_ram() {
    objs_.clear();
    deleted_.clear();
    phys_.clear();
    blocks_.assign(data_blocks_, BlockInfo{});
    for (auto &b : blocks_) b.pages.resize(mtd_.ppb());
    erase_queue_.clear();
    cursor_.reset();
    search_from_ = 0;
    next_seq_ = 1;
    next_ino_ = kRootIno + 1;
    free_count_ = 0;
    ckpt_valid_ = false;
    Object root;
    root.kind = FileKind::Dir;
    objs_.emplace(kRootIno, std::move(root));
  }

  Object &obj(Ino ino) {
    auto it = objs_.find(ino);
    if (it == objs_.end()) throw FsError(FsErrc::NotFound, "object " + std::to_string(ino));
    return it->second;
  }

  std::uint32_t blk(std::uint32_t loc) const { return loc / mtd_.ppb(); }
  std::uint32_t pg(std::uint32_t loc) const { return loc % mtd_.ppb(); }

  PageRead read_loc(std::uint32_t loc) { return mtd_.read(blk(loc), pg(loc)); }

  Bytes header_bytes(const Object &o, bool deleted) const {
    Bytes b;
    ByteWriter w(b);
    w.u8(static_cast<std::uint8_t>(o.kind));
    w.u32(o.parent);
    w.str(o.name);
    w.u64(deleted ? 0 : o.size);
    w.u8(deleted ? 1 : 0);
    return b;
  }

  static std::uint16_t tag_crc(ByteSpan b) { return static_cast<std::uint16_t>(crc32(b) & 0xffff); }

  Bytes encode_tags(const Tags &t) const {
    Bytes oob(mtd_.oob_size(), 0xff);
    Bytes tb;
    ByteWriter w(tb);
    w.u32(t.object);
    w.u32(t.chunk_id);
    w.u32(t.seq);
    w.u16(t.byte_count);
    w.u16(tag_crc(tb));
    std::copy(tb.begin(), tb.end(), oob.begin() + kTagOffset);
    return oob;
  }

  static std::optional<Tags> decode_tags(ByteSpan oob) {
    if (oob.size() < kTagOffset + kTagBytes) return std::nullopt;
    auto tb = oob.subspan(kTagOffset, kTagBytes);
    if (all_ff(tb)) return std::nullopt;
    ByteReader r(tb);
    Tags t{r.u32(), r.u32(), r.u32(), r.u16()};
    if (r.u16() != tag_crc(tb.first(kTagBytes - 2))) return std::nullopt;
    return t;
  }

  // --------------------------------------------------------------- allocation

  void begin_mutation() {
    if (!ckpt_valid_) return;
    ckpt_valid_ = false;
    for (std::uint32_t b = data_blocks_; b < mtd_.blocks(); ++b)
      if (!mtd_.is_bad(b) && has_programmed(b)) erase_raw(b);
  }

  std::uint32_t program_chunk(Ino object, std::uint32_t chunk_id, ByteSpan data, std::uint16_t count,
                              bool for_gc = false) {
    auto loc = allocate(for_gc);
    auto seq = next_seq_++;
    mtd_.program(blk(loc), pg(loc), data, encode_tags(Tags{object, chunk_id, seq, count}));
    auto &bi = blocks_[blk(loc)];
    bi.pages[pg(loc)] = PageOwner{object, chunk_id, true};
    ++bi.valid;
    ++phys_[object];
    return loc;
  }

  std::uint32_t allocate(bool for_gc) {
    if (!cursor_ || blocks_[*cursor_].used == mtd_.ppb()) {
      if (!for_gc) {
        std::size_t passes = 0;
        while (free_count_ <= ycfg_.reserve_blocks) {
          if (passes++ < data_blocks_ && collect()) continue;
          if (use_reserve_ && free_count_ > 0) break;
          throw FsError(FsErrc::NoSpace, "yaffs2");
        }
      }
      auto prev = cursor_;
      cursor_ = next_free_block();
      if (!cursor_) throw FsError(FsErrc::NoSpace, "yaffs2");
      --free_count_;
      if (prev) maybe_queue_erase(*prev);
    }
    auto &bi = blocks_[*cursor_];
    return *cursor_ * mtd_.ppb() + bi.used++;
  }

  std::optional<std::uint32_t> next_free_block() {
    for (std::uint32_t i = 0; i < data_blocks_; ++i) {
      auto b = (search_from_ + i) % data_blocks_;
      if (!blocks_[b].bad && blocks_[b].used == 0 && b != cursor_) {
        search_from_ = (b + 1) % data_blocks_;
        return b;
      }
    }
    return std::nullopt;
  }

  // Drops a chunk from the valid set. `read_oob` charges the tag read the
  // bookkeeping needs when the caller has not already read the chunk.
  void invalidate(std::uint32_t loc, bool read_oob) {
    if (read_oob) read_loc(loc);
    auto &bi = blocks_[blk(loc)];
    auto &po = bi.pages[pg(loc)];
    if (!po.valid) return;
    po.valid = false;
    --bi.valid;
    maybe_queue_erase(blk(loc));
  }

  void maybe_queue_erase(std::uint32_t b) {
    const auto &bi = blocks_[b];
    if (b != cursor_ && bi.used > 0 && bi.valid == 0 && !bi.bad &&
        std::find(erase_queue_.begin(), erase_queue_.end(), b) == erase_queue_.end())
      erase_queue_.push_back(b);
  }

  void drain_erases() {
    while (!erase_queue_.empty()) {
      auto b = erase_queue_.front();
      erase_queue_.erase(erase_queue_.begin());
      if (blocks_[b].valid != 0 || blocks_[b].used == 0) continue;
      ++gc_stats_.inline_erases;
      erase_data_block(b);
    }
  }

  void erase_data_block(std::uint32_t b) {
    auto &bi = blocks_[b];
    std::vector<Ino> touched;
    for (std::uint32_t p = 0; p < bi.used; ++p) {
      auto o = bi.pages[p].object;
      if (--phys_[o] == 0) phys_.erase(o);
      touched.push_back(o);
    }
    bool worn = !erase_raw(b);
    bi.used = 0;
    bi.valid = 0;
    for (auto &po : bi.pages) po = PageOwner{};
    if (worn) {
      bi.bad = true;
    } else {
      ++free_count_;
    }
    for (auto o : touched) release_deletion_if_alone(o);
  }

  bool erase_raw(std::uint32_t b) {
    try {
      mtd_.erase(b);
      return true;
    } catch (const FlashError &e) {
      if (e.code() != FlashErrc::BlockWornOut) throw;
      return false;
    }
  }

  // A deletion header must outlive every older chunk of its object, or a
  // later scan would resurrect the object.
  void release_deletion_if_alone(Ino o) {
    auto it = deleted_.find(o);
    if (it == deleted_.end()) return;
    auto ph = phys_.find(o);
    if (ph != phys_.end() && ph->second > 1) return;
    auto loc = it->second;
    deleted_.erase(it);
    invalidate(loc, false);
  }

  void rewrite_header(Ino ino, Object &o) {
    auto old = o.header;
    read_loc(old);
    o.header = program_chunk(ino, 0, header_bytes(o, false), 0);
    invalidate(old, false);
  }

  // Threshold GC: evacuates the block with the fewest valid chunks.
  bool collect() {
    std::optional<std::uint32_t> victim;
    for (std::uint32_t b = 0; b < data_blocks_; ++b) {
      const auto &bi = blocks_[b];
      if (bi.bad || bi.used == 0 || b == cursor_ || bi.valid == bi.used) continue;
      if (!victim || bi.valid < blocks_[*victim].valid) victim = b;
    }
    if (!victim) return false;
    // Copying must fit in what is left, or the victim cannot be emptied.
    std::uint64_t room = std::uint64_t{free_count_} * mtd_.ppb();
    if (cursor_) room += mtd_.ppb() - blocks_[*cursor_].used;
    if (blocks_[*victim].valid > room) return false;
    ++gc_stats_.threshold_collections;
    const auto v = *victim;
    for (std::uint32_t p = 0; p < blocks_[v].used; ++p) {
      auto po = blocks_[v].pages[p];
      if (!po.valid) continue;
      auto loc = v * mtd_.ppb() + p;
      auto pr = read_loc(loc);
      auto tags = decode_tags(pr.oob);
      std::uint16_t count = tags ? tags->byte_count : static_cast<std::uint16_t>(mtd_.page_size());
      ByteSpan data(pr.data);
      if (po.chunk_id != 0) data = data.first(count);
      auto nloc = program_chunk(po.object, po.chunk_id, data, count, true);
      if (auto d = deleted_.find(po.object); d != deleted_.end() && d->second == loc) {
        d->second = nloc;
      } else {
        auto &o = obj(po.object);
        if (po.chunk_id == 0)
          o.header = nloc;
        else
          o.chunks[po.chunk_id - 1] = nloc;
      }
      invalidate(loc, false);
      ++gc_stats_.chunks_copied;
    }
    drain_erases();
    return true;
  }

  // --------------------------------------------------------------- mount scan

  void scan() {
    struct Rec {
      Tags t;
      std::uint32_t loc;
      Bytes header;
    };
    std::vector<Rec> recs;
    for (std::uint32_t b = 0; b < mtd_.blocks(); ++b) {
      bool data_area = b < data_blocks_;
      if (mtd_.is_bad(b)) {
        if (data_area) blocks_[b].bad = true;
        continue;
      }
      for (std::uint32_t p = 0; p < mtd_.ppb(); ++p) {
        if (b == data_blocks_ && p == 0 && ckpt_probed_) continue;
        auto pr = mtd_.read(b, p);
        // Pages are programmed in order, so the rest of the block is erased.
        if (all_ff(pr.oob) && all_ff(pr.data)) break;
        if (!data_area) continue;
        auto t = decode_tags(pr.oob);
        blocks_[b].used = p + 1;
        if (!t) continue;
        Rec r{*t, b * mtd_.ppb() + p, {}};
        if (t->chunk_id == 0) r.header = std::move(pr.data);
        recs.push_back(std::move(r));
      }
    }
    std::sort(recs.begin(), recs.end(), [](const Rec &a, const Rec &b) { return a.t.seq < b.t.seq; });

    struct Scanned {
      Object o;
      bool deleted = false;
      bool has_header = false;
    };
    std::map<Ino, Scanned> found;
    for (auto &r : recs) {
      next_seq_ = std::max(next_seq_, r.t.seq + 1);
      next_ino_ = std::max(next_ino_, r.t.object + 1);
      auto &s = found[r.t.object];
      auto &bi = blocks_[blk(r.loc)];
      bi.pages[pg(r.loc)] = PageOwner{r.t.object, r.t.chunk_id, false};
      ++phys_[r.t.object];
      if (r.t.chunk_id == 0) {
        try {
          ByteReader hr(r.header);
          s.o.kind = static_cast<FileKind>(hr.u8());
          s.o.parent = hr.u32();
          s.o.name = hr.str();
          s.o.size = hr.u64();
          s.deleted = hr.u8() != 0;
          s.o.header = r.loc;
          s.has_header = true;
        } catch (const DecodeError &) {
        }
      } else {
        if (s.o.chunks.size() < r.t.chunk_id) s.o.chunks.resize(r.t.chunk_id, kNoLoc);
        s.o.chunks[r.t.chunk_id - 1] = r.loc;
      }
    }
    for (auto &[ino, s] : found) {
      if (!s.has_header || ino == kRootIno) continue;
      if (s.deleted) {
        deleted_[ino] = s.o.header;
        mark_valid(s.o.header);
        continue;
      }
      mark_valid(s.o.header);
      for (auto loc : s.o.chunks)
        if (loc != kNoLoc) mark_valid(loc);
      objs_[ino] = std::move(s.o);
    }
    for (auto &[ino, o] : objs_)
      if (ino != kRootIno) {
        auto p = objs_.find(o.parent);
        if (p != objs_.end()) p->second.children.emplace(o.name, ino);
      }
    finish_block_state(recs.empty() ? std::nullopt : std::optional<std::uint32_t>(recs.back().loc));
    for (auto it = deleted_.begin(); it != deleted_.end();) {
      auto o = (it++)->first;
      release_deletion_if_alone(o);
    }
    drain_erases();
  }

  void mark_valid(std::uint32_t loc) {
    auto &po = blocks_[blk(loc)].pages[pg(loc)];
    if (po.valid) return;
    po.valid = true;
    ++blocks_[blk(loc)].valid;
  }

  // Free count, allocation restart point and fully-invalid blocks after a
  // scan. Allocation resumes after the block holding the newest chunk.
  void finish_block_state(std::optional<std::uint32_t> newest) {
    free_count_ = 0;
    for (const auto &bi : blocks_)
      if (!bi.bad && bi.used == 0) ++free_count_;
    search_from_ = newest ? (blk(*newest) + 1) % data_blocks_ : 0;
    for (std::uint32_t b = 0; b < data_blocks_; ++b) maybe_queue_erase(b);
  }

  // --------------------------------------------------------------- checkpoint

  Bytes serialize() const {
    Bytes body;
    ByteWriter w(body);
    w.u32(next_seq_);
    w.u32(next_ino_);
    w.u32(cursor_ ? *cursor_ : kNoLoc);
    w.u32(search_from_);
    w.u32(static_cast<std::uint32_t>(objs_.size()));
    for (const auto &[ino, o] : objs_) {
      w.u32(ino);
      w.u8(static_cast<std::uint8_t>(o.kind));
      w.u32(o.parent);
      w.str(o.name);
      w.u64(o.size);
    }
    w.u32(static_cast<std::uint32_t>(deleted_.size()));
    for (const auto &[ino, loc] : deleted_) {
      w.u32(ino);
      w.u32(loc);
    }
    for (const auto &bi : blocks_) {
      w.u8(bi.bad ? 1 : 0);
      w.u16(static_cast<std::uint16_t>(bi.used));
      for (std::uint32_t p = 0; p < bi.used; ++p) {
        w.u32(bi.pages[p].object);
        w.u32(bi.pages[p].chunk_id | (bi.pages[p].valid ? 0x80000000u : 0u));
      }
    }
    return body;
  }

  std::vector<std::uint32_t> checkpoint_blocks() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t b = data_blocks_; b < mtd_.blocks(); ++b)
      if (!mtd_.is_bad(b)) out.push_back(b);
    return out;
  }

  void write_checkpoint() {
    auto body = serialize();
    Bytes img;
    ByteWriter w(img);
    w.u32(kCheckpointMagic);
    w.u32(static_cast<std::uint32_t>(body.size()));
    w.raw(body);
    w.u32(crc32(body));
    auto cbs = checkpoint_blocks();
    for (auto b : cbs)
      if (has_programmed(b)) erase_raw(b);
    const std::size_t ps = mtd_.page_size();
    // Too large for the reserved area: the next mount scans.
    if (img.size() > cbs.size() * mtd_.ppb() * ps) return;
    for (std::size_t off = 0, i = 0; off < img.size(); off += ps, ++i) {
      auto b = cbs[i / mtd_.ppb()];
      auto p = static_cast<std::uint32_t>(i % mtd_.ppb());
      mtd_.program(b, p, ByteSpan(img).subspan(off, std::min(ps, img.size() - off)));
    }
    ckpt_valid_ = true;
  }

  bool load_checkpoint() {
    ckpt_probed_ = false;
    auto cbs = checkpoint_blocks();
    if (cbs.empty()) return false;
    // The probe page counts toward the scan if the checkpoint is absent.
    ckpt_probed_ = cbs.front() == data_blocks_;
    auto first = mtd_.read(cbs.front(), 0);
    ByteReader h(first.data);
    if (h.u32() != kCheckpointMagic) return false;
    std::size_t total = 8 + std::size_t{h.u32()} + 4;
    const std::size_t ps = mtd_.page_size();
    if (total > cbs.size() * mtd_.ppb() * ps) return false;
    Bytes img(first.data.begin(), first.data.end());
    for (std::size_t i = 1; i * ps < total; ++i)
      append(img, mtd_.read(cbs[i / mtd_.ppb()], static_cast<std::uint32_t>(i % mtd_.ppb())).data);
    img.resize(total);
    ByteSpan all(img);
    auto body = all.subspan(8, total - 12);
    if (crc32(body) != ByteReader(all.subspan(total - 4)).u32()) return false;
    try {
      deserialize(body);
    } catch (const DecodeError &) {
      reset_ram();
      return false;
    }
    ckpt_valid_ = true;
    mount_info_.from_checkpoint = true;
    return true;
  }

  static void append(Bytes &dst, const Bytes &src) { dst.insert(dst.end(), src.begin(), src.end()); }

  void deserialize(ByteSpan body) {
    ByteReader r(body);
    next_seq_ = r.u32();
    next_ino_ = r.u32();
    auto cur = r.u32();
    search_from_ = r.u32();
    auto nobj = r.u32();
    for (std::uint32_t i = 0; i < nobj; ++i) {
      Ino ino = r.u32();
      Object o;
      o.kind = static_cast<FileKind>(r.u8());
      o.parent = r.u32();
      o.name = r.str();
      o.size = r.u64();
      objs_[ino] = std::move(o);
    }
    auto ndel = r.u32();
    for (std::uint32_t i = 0; i < ndel; ++i) {
      Ino ino = r.u32();
      deleted_[ino] = r.u32();
    }
    free_count_ = 0;
    for (std::uint32_t b = 0; b < data_blocks_; ++b) {
      auto &bi = blocks_[b];
      bi.bad = r.u8() != 0;
      bi.used = r.u16();
      for (std::uint32_t p = 0; p < bi.used; ++p) {
        auto object = r.u32();
        auto cid = r.u32();
        bool valid = cid & 0x80000000u;
        cid &= 0x7fffffffu;
        bi.pages[p] = PageOwner{object, cid, valid};
        ++phys_[object];
        if (!valid) continue;
        ++bi.valid;
        auto it = objs_.find(object);
        if (it == objs_.end()) continue;
        auto loc = b * mtd_.ppb() + p;
        if (cid == 0) {
          it->second.header = loc;
        } else {
          if (it->second.chunks.size() < cid) it->second.chunks.resize(cid, kNoLoc);
          it->second.chunks[cid - 1] = loc;
        }
      }
      if (!bi.bad && bi.used == 0) ++free_count_;
    }
    if (cur != kNoLoc) {
      cursor_ = cur;
      if (blocks_[cur].used == 0) --free_count_;
    }
    for (auto &[ino, o] : objs_)
      if (ino != kRootIno) obj(o.parent).children.emplace(o.name, ino);
  }

  Yaffs2Config ycfg_;
  std::uint32_t data_blocks_ = 0;
  std::unordered_map<Ino, Object> objs_;
  std::unordered_map<Ino, std::uint32_t> deleted_;  // deletion header locations
  std::unordered_map<Ino, std::uint32_t> phys_;     // programmed chunks per object
  std::vector<BlockInfo> blocks_;
  std::vector<std::uint32_t> erase_queue_;
  std::optional<std::uint32_t> cursor_;
  std::uint32_t search_from_ = 0;
  std::uint32_t next_seq_ = 1;
  Ino next_ino_ = kRootIno + 1;
  std::uint32_t free_count_ = 0;
  bool ckpt_valid_ = false;
  bool use_reserve_ = false;
  bool ckpt_probed_ = false;
  MountInfo mount_info_;
  GcStats gc_stats_;
};

}  // namespace ffsarena
