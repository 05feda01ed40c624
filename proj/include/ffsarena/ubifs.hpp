#pragma once

// UBIFS-style journaled filesystem on top of UbiDevice.
//
// LEB layout: 0 superblock, 1-2 master (written alternately), 3 log,
// 4-5 LEB property tree (LPT), then the main area. File mutations are
// appended as nodes to journal LEBs ("buds") through a page-sized write
// buffer and applied to the in-RAM tree node cache (TNC) at once. A commit
// writes the dirty part of the index out of place, then the dirty LPT pages,
// then a new master node, and empties the log. Mount reads the superblock,
// both master copies and the LPT root, then replays the buds named by the
// log; index and LPT nodes load on first use.
//
// Node header: magic u32 | crc32 u32 (of the bytes after it) | len u32 |
//              type u8 | sqnum u64
// Bodies:
//   inode:  ino u32 | kind u8 | size u64 | nlink u32
//   data:   ino u32 | block u32 | container
//   dirent: parent u32 | target u32 (0 = deletion) | kind u8 | name
//   index:  level u8 | count u16 | count x (key | lnum u32 | offs u32 | len u32)
//   key:    ino u32 | type u8 | block or name hash u64

#include "ffsarena/ubi.hpp"
#include "ffsarena/volume.hpp"

#include <functional>
#include <memory>

namespace ffsarena {

struct UbifsConfig {
  VolumeConfig volume{Codec::LzFast};
  UbiConfig ubi{};
  std::uint32_t fanout = 8;
  // 0 picks 5% of the main area, at least 4 LEBs.
  std::uint32_t journal_lebs = 0;
  // Free main-area LEBs kept for GC and commit.
  std::uint32_t reserve_lebs = 2;
};

class UbifsVolume final : public FfsVolume {
 public:
  static constexpr std::uint32_t kNodeMagic = 0x06101831;
  static constexpr std::uint32_t kSbMagic = 0x53464255;      // "UBFS"
  static constexpr std::uint32_t kMasterMagic = 0x5253414d;  // "MASR"
  static constexpr std::uint32_t kLogMagic = 0x474f4c55;     // "ULOG"
  static constexpr std::uint32_t kLptMagic = 0x5450424c;     // "LBPT"
  static constexpr std::size_t kNodeHeader = 4 + 4 + 4 + 1 + 8;
  static constexpr std::size_t kKeyBytes = 4 + 1 + 8;
  static constexpr std::size_t kBranchBytes = kKeyBytes + 12;
  static constexpr std::uint32_t kSbLeb = 0, kMasterLeb = 1, kLogLeb = 3, kLptLeb = 4, kMainFirst = 6;
  static constexpr std::uint32_t kLptPerLeaf = 200;
  static constexpr std::uint32_t kNone = 0xffffffff;

  enum class NodeType : std::uint8_t { Inode = 0, Data = 1, Dirent = 2, Index = 3 };
  enum class KeyType : std::uint8_t { Inode = 0, Data = 1, Dirent = 2 };

  struct Key {
    std::uint32_t ino = 0;
    std::uint8_t type = 0;
    std::uint64_t x = 0;
    friend auto operator<=>(const Key &, const Key &) = default;
  };

  struct Loc {
    std::uint32_t lnum = kNone;
    std::uint32_t offs = 0;
    std::uint32_t len = 0;
    bool valid() const { return lnum != kNone; }
    friend bool operator==(const Loc &, const Loc &) = default;
  };

  struct CommitStats {
    std::uint64_t commits = 0;
    std::uint64_t index_nodes = 0;
    std::uint64_t index_pages = 0;
    std::uint64_t lpt_pages = 0;
    std::uint64_t master_pages = 0;
  };

  struct MountInfo {
    nanoseconds attach_time{0};
    nanoseconds ubifs_time{0};
    std::uint64_t ubifs_reads = 0;
    std::uint64_t replayed_nodes = 0;
  };

  UbifsVolume(Mtd mtd, UbifsConfig cfg = {})
      : FfsVolume(mtd, cfg.volume), ucfg_(cfg), ubi_(mtd, cfg.ubi) {
    if (cfg.fanout < 3) throw std::invalid_argument("ubifs fanout must be >= 3");
    if (ubi_.leb_count() < kMainFirst + 4 + cfg.reserve_lebs + 2) throw FsError(FsErrc::PartitionTooSmall, "ubifs");
    if (ucfg_.journal_lebs == 0) ucfg_.journal_lebs = std::max(4u, main_lebs() / 20);
  }

  std::string_view name() const override { return "ubifs"; }
  UbiDevice &ubi() { return ubi_; }
  const MountInfo &last_mount() const { return mount_info_; }
  const CommitStats &commit_stats() const { return commit_stats_; }
  std::uint32_t main_lebs() const { return ubi_.leb_count() - kMainFirst; }
  std::size_t journal_buds() const { return buds_.size(); }

  // ubiformat followed by mkfs: superblock, an empty index, LPT, masters.
  void format() override {
    if (mounted()) throw FsError(FsErrc::AlreadyMounted, "ubifs format");
    if (ubi_.attached()) ubi_.detach();
    ubi_.format();
    ubi_.attach();
    reset_ram();
    Bytes sb;
    ByteWriter w(sb);
    w.u32(kSbMagic);
    w.u32(ubi_.leb_count());
    w.u32(ucfg_.fanout);
    w.u32(ucfg_.journal_lebs);
    w.u8(static_cast<std::uint8_t>(cfg_.codec));
    w.u32(crc32(sb));
    ubi_.write(kSbLeb, 0, sb);
    lprops_.assign(main_lebs(), LProps{ubi_.leb_size(), 0, false});
    lpt_loaded_.assign(lpt_leaf_count(), true);
    lpt_dirty_.assign(lpt_leaf_count(), true);
    lpt_leaf_loc_.assign(lpt_leaf_count(), Loc{});
    root_ = std::make_unique<Znode>();
    root_->dirty = true;
    write_index();
    write_lpt();
    cmt_no_ = 0;
    write_master();
    cmt_no_ = 1;
    write_master();
    ubi_.detach();
    reset_ram();
  }

  // Writes dirty index, LPT and a new master; empties the journal.
  void commit() {
    require_mounted();
    do_commit();
  }

  void sync() override {
    require_mounted();
    sync_wbuf();
  }

  void gc_step() override {
    require_mounted();
    if (!collect_one()) throw FsError(FsErrc::NothingToCollect, "ubifs");
  }

  std::uint64_t meta_ram_bytes() const override {
    std::uint64_t n = 0;
    std::function<void(const Znode &)> walk = [&](const Znode &z) {
      n += 48 + z.br.size() * (kBranchBytes + 16);
      for (const auto &b : z.br) {
        if (b.leaf) n += 24 + b.leaf->name.size();
        if (b.child) walk(*b.child);
      }
    };
    if (root_) walk(*root_);
    for (bool l : lpt_loaded_)
      if (l) n += kLptPerLeaf * 12;
    return n + ubi_.page_size();
  }

  std::uint64_t used_flash_bytes() const override {
    std::uint64_t used = 0;
    for (std::uint32_t i = 0; i < lprops_.size(); ++i)
      if (lpt_loaded_[leaf_of(i)]) used += ubi_.leb_size() - lprops_[i].free - lprops_[i].dirty;
    return used;
  }

  std::uint64_t reclaimable_blocks() const override {
    std::uint64_t n = 0;
    for (std::uint32_t i = 0; i < lprops_.size(); ++i)
      if (lpt_loaded_[leaf_of(i)] && lprops_[i].dirty > 0) ++n;
    return n;
  }

  std::uint64_t capacity_bytes() const override { return std::uint64_t{main_lebs()} * ubi_.leb_size(); }

  // Depth of the index: 1 for a root-only tree. Loads the leftmost path.
  std::uint32_t index_height() {
    require_mounted();
    return root()->level + 1u;
  }

  // Recomputes every main LEB's live bytes from the index and checks
  // free + dirty + live == LEB size. Loads the whole index and LPT.
  std::string check_lpt() {
    require_mounted();
    load_all_lpt();
    std::vector<std::uint64_t> live(main_lebs(), 0);
    auto add = [&](const Loc &l) {
      if (l.valid() && l.lnum >= kMainFirst) live[l.lnum - kMainFirst] += l.len;
    };
    std::function<void(Znode &)> walk = [&](Znode &z) {
      add(z.on_flash);
      for (std::size_t i = 0; i < z.br.size(); ++i) {
        if (z.level == 0) {
          add(z.br[i].loc);
        } else {
          walk(*child(z, i));
        }
      }
    };
    walk(*root());
    for (const auto &l : pending_obsolete_) add(l);
    for (std::uint32_t i = 0; i < main_lebs(); ++i) {
      const auto &p = lprops_[i];
      if (std::uint64_t{p.free} + p.dirty + live[i] != ubi_.leb_size())
        return "LEB " + std::to_string(i + kMainFirst) + ": free " + std::to_string(p.free) + " dirty " +
               std::to_string(p.dirty) + " live " + std::to_string(live[i]);
    }
    return {};
  }

 protected:
  void do_mount() override {
    reset_ram();
    mount_info_ = {};
    if (!ubi_.attached()) ubi_.attach();
    mount_info_.attach_time = ubi_.last_attach_time();
    auto t0 = chip().elapsed();
    auto r0 = chip().stats().reads;
    try {
      mount_layout();
    } catch (...) {
      ubi_.detach();
      reset_ram();
      throw;
    }
    mount_info_.ubifs_time = chip().elapsed() - t0;
    mount_info_.ubifs_reads = chip().stats().reads - r0;
  }

  void do_unmount() override {
    do_commit();
    ubi_.detach();
    reset_ram();
  }

  std::optional<DirEntry> fs_lookup(Ino dir, std::string_view name) override {
    auto *b = find(Key{dir, kDirent, fnv1a64(name)});
    if (!b) return std::nullopt;
    auto &leaf = leaf_info(*b);
    if (leaf.name != name) return std::nullopt;
    return DirEntry{leaf.name, leaf.kind, leaf.target};
  }

  std::vector<DirEntry> fs_list(Ino dir) override {
    std::vector<DirEntry> out;
    for (auto *b : range(Key{dir, kDirent, 0}, Key{dir, kDirent, ~0ull})) {
      auto &leaf = leaf_info(*b);
      out.push_back(DirEntry{leaf.name, leaf.kind, leaf.target});
    }
    return out;
  }

  FileAttr fs_getattr(Ino ino) override {
    if (ino == kRootIno) return FileAttr{FileKind::Dir, 0, kRootIno};
    auto *b = find(Key{ino, kInode, 0});
    if (!b) throw FsError(FsErrc::NotFound, "inode " + std::to_string(ino));
    auto &leaf = leaf_info(*b);
    return FileAttr{leaf.kind, leaf.kind == FileKind::File ? leaf.size : 0, ino};
  }

  Ino fs_create(Ino dir, std::string_view name, FileKind kind) override {
    Ino ino = next_ino_++;
    journal_dirent(dir, name, ino, kind);
    journal_inode(ino, kind, 0, 1);
    return ino;
  }

  void fs_remove(Ino dir, const DirEntry &e) override {
    // Deletions may dip into the reserve so a full volume can be emptied.
    use_reserve_ = true;
    try {
      journal_dirent(dir, e.name, 0, e.kind);
      journal_inode(e.inode, e.kind, 0, 0);
    } catch (...) {
      use_reserve_ = false;
      throw;
    }
    use_reserve_ = false;
  }

  void fs_write(Ino ino, std::uint64_t offset, ByteSpan data) override {
    const std::uint64_t bs = ubi_.page_size();
    auto attr = fs_getattr(ino);
    const std::uint64_t end = offset + data.size();
    const std::uint64_t new_size = std::max(attr.size, end);
    for (std::uint64_t k = offset / bs; k * bs < end; ++k) {
      const std::uint64_t cs = k * bs;
      const std::uint64_t blen = std::min(bs, new_size - cs);
      Bytes raw(blen, 0);
      bool whole = offset <= cs && end >= cs + blen;
      if (!whole) {
        if (auto *b = find(Key{ino, kData, k})) {
          auto old = read_data(b->loc);
          std::copy(old.begin(), old.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(old.size(), blen)),
                    raw.begin());
        }
      }
      auto from = std::max(offset, cs), to = std::min(end, cs + blen);
      std::copy(data.begin() + static_cast<std::ptrdiff_t>(from - offset),
                data.begin() + static_cast<std::ptrdiff_t>(to - offset),
                raw.begin() + static_cast<std::ptrdiff_t>(from - cs));
      Bytes body;
      ByteWriter w(body);
      w.u32(ino);
      w.u32(static_cast<std::uint32_t>(k));
      w.raw(pack(raw));
      auto loc = journal_append(NodeType::Data, body);
      apply(Key{ino, kData, k}, loc, std::nullopt);
    }
    journal_inode(ino, attr.kind, new_size, 1);
  }

  Bytes fs_read(Ino ino) override {
    auto attr = fs_getattr(ino);
    Bytes out(attr.size, 0);
    const std::uint64_t bs = ubi_.page_size();
    for (auto *b : range(Key{ino, kData, 0}, Key{ino, kData, ~0ull})) {
      auto raw = read_data(b->loc);
      auto start = b->key.x * bs;
      if (start >= out.size()) continue;
      auto n = std::min<std::uint64_t>(raw.size(), out.size() - start);
      std::copy(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(n), out.begin() + static_cast<std::ptrdiff_t>(start));
    }
    return out;
  }

 private:
  static constexpr std::uint8_t kInode = static_cast<std::uint8_t>(KeyType::Inode);
  static constexpr std::uint8_t kData = static_cast<std::uint8_t>(KeyType::Data);
  static constexpr std::uint8_t kDirent = static_cast<std::uint8_t>(KeyType::Dirent);

  struct LeafInfo {
    FileKind kind = FileKind::File;
    std::uint64_t size = 0;
    Ino target = 0;
    std::string name;
  };
  struct Znode;
  struct Branch {
    Key key;
    Loc loc;
    std::unique_ptr<Znode> child;
    std::unique_ptr<LeafInfo> leaf;
  };
  struct Znode {
    std::uint8_t level = 0;
    std::vector<Branch> br;
    bool dirty = false;
    Loc on_flash;
  };
  struct LProps {
    std::uint32_t free = 0;
    std::uint32_t dirty = 0;
    bool index = false;
  };
  struct Head {
    std::uint32_t lnum = kNone;
    std::uint32_t offs = 0;  // bytes used, including the buffered page
    Bytes buf;               // unprogrammed tail of the current page
  };
  struct ParsedNode {
    NodeType type;
    std::uint64_t sqnum;
    std::uint32_t len;
    ByteSpan body;
  };

  // ------------------------------------------------------------------ state

  void reset_ram() {
    root_.reset();
    root_loc_ = Loc{};
    lprops_.assign(main_lebs(), LProps{});
    lpt_loaded_.assign(lpt_leaf_count(), false);
    lpt_dirty_.assign(lpt_leaf_count(), false);
    lpt_leaf_loc_.assign(lpt_leaf_count(), Loc{});
    lpt_lnum_ = kLptLeb;
    lpt_page_ = 0;
    jhead_ = Head{};
    ihead_ = Head{};
    buds_.clear();
    log_page_ = 0;
    pending_obsolete_.clear();
    cmt_no_ = 0;
    sqnum_ = 1;
    next_ino_ = kRootIno + 1;
    in_gc_ = in_commit_ = false;
  }

  std::uint32_t lpt_leaf_count() const { return (main_lebs() + kLptPerLeaf - 1) / kLptPerLeaf; }
  static std::uint32_t leaf_of(std::uint32_t main_idx) { return main_idx / kLptPerLeaf; }

  LProps &lp(std::uint32_t lnum) {
    auto i = lnum - kMainFirst;
    load_lpt_leaf(leaf_of(i));
    lpt_dirty_[leaf_of(i)] = true;
    return lprops_[i];
  }

  void add_dirty(const Loc &l) {
    if (l.valid() && l.lnum >= kMainFirst) lp(l.lnum).dirty += l.len;
  }

  // ------------------------------------------------------------------ nodes

  Bytes make_node(NodeType t, ByteSpan body) {
    Bytes n;
    ByteWriter w(n);
    w.u32(kNodeMagic);
    w.u32(0);
    w.u32(static_cast<std::uint32_t>(kNodeHeader + body.size()));
    w.u8(static_cast<std::uint8_t>(t));
    w.u64(sqnum_++);
    w.raw(body);
    auto c = crc32(ByteSpan(n).subspan(8));
    for (int i = 0; i < 4; ++i) n[4 + i] = static_cast<std::uint8_t>(c >> (8 * i));
    return n;
  }

  static std::optional<ParsedNode> parse_node(ByteSpan buf, std::size_t pos) {
    if (buf.size() < pos + kNodeHeader) return std::nullopt;
    ByteReader r(buf.subspan(pos));
    if (r.u32() != kNodeMagic) return std::nullopt;
    auto c = r.u32();
    auto len = r.u32();
    if (len < kNodeHeader || buf.size() < pos + len) return std::nullopt;
    if (crc32(buf.subspan(pos + 8, len - 8)) != c) return std::nullopt;
    auto type = r.u8();
    if (type > 3) return std::nullopt;
    auto sq = r.u64();
    return ParsedNode{static_cast<NodeType>(type), sq, len, buf.subspan(pos + kNodeHeader, len - kNodeHeader)};
  }

  static Key read_key(ByteReader &r) {
    Key k;
    k.ino = r.u32();
    k.type = r.u8();
    k.x = r.u64();
    return k;
  }
  static void write_key(ByteWriter &w, const Key &k) {
    w.u32(k.ino);
    w.u8(k.type);
    w.u64(k.x);
  }

  // Raw bytes of a node, served from a write buffer when not yet on flash.
  Bytes read_raw(const Loc &l) {
    const std::uint32_t ps = ubi_.page_size();
    Bytes out;
    for (std::uint32_t p = l.offs / ps; p * ps < l.offs + l.len; ++p) {
      Bytes page;
      if (const Head *h = buffered(l.lnum, p)) {
        page = h->buf;
        page.resize(ps, 0xff);
      } else {
        page = ubi_.read(l.lnum, p).data;
      }
      auto from = std::max(l.offs, p * ps) - p * ps;
      auto to = std::min(l.offs + l.len, (p + 1) * ps) - p * ps;
      out.insert(out.end(), page.begin() + from, page.begin() + to);
    }
    return out;
  }

  const Head *buffered(std::uint32_t lnum, std::uint32_t page) const {
    const std::uint32_t ps = ubi_.page_size();
    for (const Head *h : {&jhead_, &ihead_})
      if (h->lnum == lnum && !h->buf.empty() && page == h->offs / ps - (h->offs % ps == 0 ? 1 : 0) &&
          h->offs % ps != 0)
        return h;
    return nullptr;
  }

  ParsedNode read_node(const Loc &l, Bytes &storage) {
    storage = read_raw(l);
    auto n = parse_node(storage, 0);
    if (!n || n->len != l.len) throw FsError(FsErrc::NoFilesystem, "ubifs: corrupt node");
    return *n;
  }

  Bytes read_data(const Loc &l) {
    Bytes s;
    auto n = read_node(l, s);
    ByteReader r(n.body);
    r.u32();
    r.u32();
    return unpack(r);
  }

  LeafInfo &leaf_info(Branch &b) {
    if (!b.leaf) {
      Bytes s;
      auto n = read_node(b.loc, s);
      b.leaf = std::make_unique<LeafInfo>(decode_leaf(n));
    }
    return *b.leaf;
  }

  static LeafInfo decode_leaf(const ParsedNode &n) {
    LeafInfo li;
    ByteReader r(n.body);
    if (n.type == NodeType::Inode) {
      r.u32();
      li.kind = static_cast<FileKind>(r.u8());
      li.size = r.u64();
    } else if (n.type == NodeType::Dirent) {
      r.u32();
      li.target = r.u32();
      li.kind = static_cast<FileKind>(r.u8());
      li.name = r.str();
    }
    return li;
  }

  // --------------------------------------------------------------- journal

  void journal_dirent(Ino parent, std::string_view name, Ino target, FileKind kind) {
    Bytes body;
    ByteWriter w(body);
    w.u32(parent);
    w.u32(target);
    w.u8(static_cast<std::uint8_t>(kind));
    w.str(name);
    auto loc = journal_append(NodeType::Dirent, body);
    Key k{parent, kDirent, fnv1a64(name)};
    if (target == 0) {
      remove_key(k);
      add_dirty(loc);
    } else {
      apply(k, loc, LeafInfo{kind, 0, target, std::string(name)});
    }
  }

  void journal_inode(Ino ino, FileKind kind, std::uint64_t size, std::uint32_t nlink) {
    Bytes body;
    ByteWriter w(body);
    w.u32(ino);
    w.u8(static_cast<std::uint8_t>(kind));
    w.u64(size);
    w.u32(nlink);
    auto loc = journal_append(NodeType::Inode, body);
    if (nlink == 0) {
      remove_ino(ino);
      add_dirty(loc);
    } else {
      apply(Key{ino, kInode, 0}, loc, LeafInfo{kind, size, 0, {}});
    }
  }

  Loc journal_append(NodeType t, ByteSpan body) { return head_append(make_node(t, body)); }

  Loc head_append(ByteSpan node) {
    while (jhead_.lnum == kNone || jhead_.offs + node.size() > ubi_.leb_size()) new_bud();
    if (!head_logged_) log_bud();
    Loc loc{jhead_.lnum, jhead_.offs, static_cast<std::uint32_t>(node.size())};
    head_write(jhead_, node);
    lp(loc.lnum).free = ubi_.leb_size() - jhead_.offs;
    return loc;
  }

  // Appends bytes at a head, programming each page as it fills.
  void head_write(Head &h, ByteSpan bytes) {
    const std::uint32_t ps = ubi_.page_size();
    std::size_t i = 0;
    while (i < bytes.size()) {
      auto room = ps - h.buf.size();
      auto n = std::min<std::size_t>(room, bytes.size() - i);
      h.buf.insert(h.buf.end(), bytes.begin() + static_cast<std::ptrdiff_t>(i),
                   bytes.begin() + static_cast<std::ptrdiff_t>(i + n));
      i += n;
      h.offs += static_cast<std::uint32_t>(n);
      if (h.buf.size() == ps) {
        ubi_.write(h.lnum, h.offs / ps - 1, h.buf);
        h.buf.clear();
      }
    }
  }

  // Programs a partly filled page; the unused tail becomes dirty space.
  void head_sync(Head &h) {
    if (h.buf.empty()) return;
    const std::uint32_t ps = ubi_.page_size();
    auto pad = static_cast<std::uint32_t>(ps - h.buf.size());
    ubi_.write(h.lnum, h.offs / ps, h.buf);
    h.buf.clear();
    h.offs += pad;
    auto &p = lp(h.lnum);
    p.dirty += pad;
    p.free = ubi_.leb_size() - h.offs;
  }

  void sync_wbuf() { head_sync(jhead_); }

  // Closes the current head LEB and opens a fresh bud.
  void new_bud() {
    if (jhead_.lnum != kNone) close_head(jhead_);
    if (!in_gc_ && !in_commit_ && buds_.size() >= ucfg_.journal_lebs * 3 / 4) do_commit();
    auto lnum = take_free_leb(in_gc_ || use_reserve_);
    // GC run while making room may already have opened a head.
    if (jhead_.lnum != kNone) return;
    jhead_ = Head{lnum, 0, {}};
    head_logged_ = false;
  }

  void close_head(Head &h) {
    head_sync(h);
    auto &p = lp(h.lnum);
    p.dirty += p.free;
    p.free = 0;
    h = Head{};
  }

  void log_bud() {
    if (log_page_ >= ubi_.leb_pages()) do_commit();
    Bytes e;
    ByteWriter w(e);
    w.u32(kLogMagic);
    w.u64(cmt_no_);
    w.u32(jhead_.lnum);
    w.u32(jhead_.offs);
    w.u32(crc32(e));
    ubi_.write(kLogLeb, log_page_++, e);
    buds_.push_back(jhead_.lnum);
    head_logged_ = true;
  }

  // A main LEB with no content. Unmaps it first in case stale data survived.
  std::uint32_t take_free_leb(bool may_use_reserve) {
    load_all_lpt();
    bool committed = false;
    std::uint32_t passes = 0;
    for (;;) {
      std::uint32_t nfree = 0;
      std::optional<std::uint32_t> pick;
      for (std::uint32_t i = 0; i < main_lebs(); ++i) {
        auto lnum = i + kMainFirst;
        if (lprops_[i].free != ubi_.leb_size() || lnum == jhead_.lnum || lnum == ihead_.lnum) continue;
        ++nfree;
        if (!pick) pick = lnum;
      }
      if (pick && (may_use_reserve || nfree > ucfg_.reserve_lebs)) {
        ubi_.unmap(*pick);
        lp(*pick).dirty = 0;
        return *pick;
      }
      if (in_gc_ || in_commit_) throw FsError(FsErrc::NoSpace, "ubifs: reserve exhausted");
      if (passes++ < main_lebs() && reclaimable_dirty() >= ubi_.leb_size() && collect_one(gc_min_gain())) continue;
      // Buds cannot be collected until a commit releases them.
      if (!committed && !buds_.empty()) {
        committed = true;
        do_commit();
        continue;
      }
      throw FsError(FsErrc::NoSpace, "ubifs");
    }
  }

  // Dirty space below this per LEB is dark: collecting it would cost a
  // whole LEB copy for less than one maximum-size node.
  std::uint32_t gc_min_gain() const { return 3 * ubi_.page_size(); }

  std::uint64_t reclaimable_dirty() const {
    std::uint64_t n = 0;
    for (std::uint32_t i = 0; i < main_lebs(); ++i)
      if (gc_candidate(i + kMainFirst) && lprops_[i].dirty >= gc_min_gain()) n += lprops_[i].dirty;
    return n;
  }

  bool gc_candidate(std::uint32_t lnum) const {
    return lnum != jhead_.lnum && lnum != ihead_.lnum && std::find(buds_.begin(), buds_.end(), lnum) == buds_.end();
  }

  // ----------------------------------------------------------------- TNC

  Znode *root() {
    if (!root_) {
      if (!root_loc_.valid()) {
        root_ = std::make_unique<Znode>();
      } else {
        root_ = load_znode(root_loc_);
      }
    }
    return root_.get();
  }

  std::unique_ptr<Znode> load_znode(const Loc &l) {
    Bytes s;
    auto n = read_node(l, s);
    if (n.type != NodeType::Index) throw FsError(FsErrc::NoFilesystem, "ubifs: not an index node");
    auto z = std::make_unique<Znode>();
    ByteReader r(n.body);
    z->level = r.u8();
    auto cnt = r.u16();
    for (std::uint16_t i = 0; i < cnt; ++i) {
      Branch b;
      b.key = read_key(r);
      b.loc.lnum = r.u32();
      b.loc.offs = r.u32();
      b.loc.len = r.u32();
      z->br.push_back(std::move(b));
    }
    z->on_flash = l;
    return z;
  }

  Znode *child(Znode &z, std::size_t i) {
    auto &b = z.br[i];
    if (!b.child) b.child = load_znode(b.loc);
    return b.child.get();
  }

  static std::size_t child_slot(const Znode &z, const Key &k) {
    auto it = std::upper_bound(z.br.begin(), z.br.end(), k, [](const Key &a, const Branch &b) { return a < b.key; });
    return it == z.br.begin() ? 0 : static_cast<std::size_t>(it - z.br.begin()) - 1;
  }

  struct PathStep {
    Znode *z;
    std::size_t slot;  // index of z within its parent
  };

  std::vector<PathStep> descend(const Key &k, std::uint8_t to_level = 0) {
    std::vector<PathStep> path{{root(), 0}};
    while (path.back().z->level > to_level && !path.back().z->br.empty()) {
      auto *z = path.back().z;
      auto i = child_slot(*z, k);
      path.push_back({child(*z, i), i});
    }
    return path;
  }

  Branch *find(const Key &k) {
    auto path = descend(k);
    auto *z = path.back().z;
    if (z->level != 0) return nullptr;
    auto it = std::lower_bound(z->br.begin(), z->br.end(), k, [](const Branch &b, const Key &a) { return b.key < a; });
    if (it == z->br.end() || it->key != k) return nullptr;
    return &*it;
  }

  std::vector<Branch *> range(const Key &lo, const Key &hi) {
    std::vector<Branch *> out;
    std::function<void(Znode &)> visit = [&](Znode &z) {
      for (std::size_t i = 0; i < z.br.size(); ++i) {
        if (z.level == 0) {
          if (z.br[i].key >= lo && z.br[i].key <= hi) out.push_back(&z.br[i]);
          continue;
        }
        bool below = i + 1 < z.br.size() && z.br[i + 1].key <= lo;
        bool above = i > 0 && z.br[i].key > hi;
        if (!below && !above) visit(*child(z, i));
      }
    };
    visit(*root());
    return out;
  }

  void mark_dirty(std::vector<PathStep> &path) {
    for (auto &s : path) s.z->dirty = true;
  }

  // Keeps each parent key equal to the smallest key below it.
  static void fix_keys(std::vector<PathStep> &path) {
    for (std::size_t d = path.size() - 1; d > 0; --d) {
      auto *z = path[d].z;
      if (!z->br.empty()) path[d - 1].z->br[path[d].slot].key = z->br.front().key;
    }
  }

  void apply(const Key &k, const Loc &loc, std::optional<LeafInfo> leaf) {
    auto path = descend(k);
    auto *z = path.back().z;
    auto it = std::lower_bound(z->br.begin(), z->br.end(), k, [](const Branch &b, const Key &a) { return b.key < a; });
    Branch *b;
    bool appended = false;
    if (it != z->br.end() && it->key == k) {
      add_dirty(it->loc);
      b = &*it;
    } else {
      appended = it == z->br.end();
      b = &*z->br.insert(it, Branch{k, {}, nullptr, nullptr});
    }
    b->loc = loc;
    b->leaf = leaf ? std::make_unique<LeafInfo>(std::move(*leaf)) : nullptr;
    mark_dirty(path);
    fix_keys(path);
    split_up(path, appended);
  }

  void split_up(std::vector<PathStep> &path, bool appended) {
    for (std::size_t d = path.size(); d-- > 0;) {
      auto *z = path[d].z;
      if (z->br.size() <= ucfg_.fanout) return;
      // Appends keep the left node full, as sequential inserts are common.
      std::size_t keep = appended ? ucfg_.fanout : z->br.size() / 2;
      auto sib = std::make_unique<Znode>();
      sib->level = z->level;
      sib->dirty = true;
      for (std::size_t i = keep; i < z->br.size(); ++i) sib->br.push_back(std::move(z->br[i]));
      z->br.resize(keep);
      Key sk = sib->br.front().key;
      if (d == 0) {
        auto nr = std::make_unique<Znode>();
        nr->level = static_cast<std::uint8_t>(z->level + 1);
        nr->dirty = true;
        Key lk = z->br.front().key;
        Loc old = root_->on_flash;
        nr->br.push_back(Branch{lk, old, std::move(root_), nullptr});
        nr->br.push_back(Branch{sk, {}, std::move(sib), nullptr});
        root_ = std::move(nr);
        return;
      }
      auto *parent = path[d - 1].z;
      auto slot = path[d].slot;
      parent->br.insert(parent->br.begin() + static_cast<std::ptrdiff_t>(slot + 1), Branch{sk, {}, std::move(sib), nullptr});
      appended = appended && slot + 2 == parent->br.size();
    }
  }

  void remove_key(const Key &k) {
    auto path = descend(k);
    auto *z = path.back().z;
    auto it = std::lower_bound(z->br.begin(), z->br.end(), k, [](const Branch &b, const Key &a) { return b.key < a; });
    if (it == z->br.end() || it->key != k) return;
    add_dirty(it->loc);
    z->br.erase(it);
    mark_dirty(path);
    prune(path);
  }

  void remove_ino(Ino ino) {
    std::vector<Key> keys;
    for (auto *b : range(Key{ino, 0, 0}, Key{ino, 0xff, ~0ull})) keys.push_back(b->key);
    for (const auto &k : keys) remove_key(k);
  }

  // Drops empty nodes bottom-up and collapses single-child roots.
  void prune(std::vector<PathStep> &path) {
    for (std::size_t d = path.size() - 1; d > 0; --d) {
      auto *z = path[d].z;
      if (!z->br.empty()) break;
      if (z->on_flash.valid()) pending_obsolete_.push_back(z->on_flash);
      auto *parent = path[d - 1].z;
      parent->br.erase(parent->br.begin() + static_cast<std::ptrdiff_t>(path[d].slot));
      path.resize(d);
    }
    fix_keys(path);
    while (root_->level > 0 && root_->br.size() == 1) {
      child(*root_, 0);
      if (root_->on_flash.valid()) pending_obsolete_.push_back(root_->on_flash);
      auto c = std::move(root_->br[0].child);
      c->dirty = true;
      root_ = std::move(c);
    }
    if (root_->level > 0 && root_->br.empty()) {
      if (root_->on_flash.valid()) pending_obsolete_.push_back(root_->on_flash);
      root_ = std::make_unique<Znode>();
      root_->dirty = true;
    }
  }

  // ---------------------------------------------------------------- commit

  void do_commit() {
    if (in_commit_) return;
    in_commit_ = true;
    sync_wbuf();
    if (root_ && root_->dirty) write_index();
    for (const auto &l : pending_obsolete_) add_dirty(l);
    pending_obsolete_.clear();
    if (std::find(lpt_dirty_.begin(), lpt_dirty_.end(), true) != lpt_dirty_.end()) write_lpt();
    ++cmt_no_;
    write_master();
    if (log_page_ > 0) {
      ubi_.unmap(kLogLeb);
      log_page_ = 0;
    }
    buds_.clear();
    head_logged_ = false;
    ++commit_stats_.commits;
    in_commit_ = false;
  }

  void write_index() {
    std::function<void(Znode &, Loc &)> put = [&](Znode &z, Loc &slot) {
      if (!z.dirty) return;
      for (auto &b : z.br)
        if (b.child) put(*b.child, b.loc);
      Bytes body;
      ByteWriter w(body);
      w.u8(z.level);
      w.u16(static_cast<std::uint16_t>(z.br.size()));
      for (const auto &b : z.br) {
        write_key(w, b.key);
        w.u32(b.loc.lnum);
        w.u32(b.loc.offs);
        w.u32(b.loc.len);
      }
      auto node = make_node(NodeType::Index, body);
      if (ihead_.lnum == kNone || ihead_.offs + node.size() > ubi_.leb_size()) {
        if (ihead_.lnum != kNone) close_head(ihead_);
        ihead_ = Head{take_free_leb(true), 0, {}};
        lp(ihead_.lnum).index = true;
      }
      Loc nl{ihead_.lnum, ihead_.offs, static_cast<std::uint32_t>(node.size())};
      auto pages_before = chip().stats().writes;
      head_write(ihead_, node);
      commit_stats_.index_pages += chip().stats().writes - pages_before;
      lp(ihead_.lnum).free = ubi_.leb_size() - ihead_.offs;
      if (z.on_flash.valid()) pending_obsolete_.push_back(z.on_flash);
      z.on_flash = nl;
      slot = nl;
      z.dirty = false;
      ++commit_stats_.index_nodes;
    };
    Loc rl = root_loc_;
    put(*root(), rl);
    root_loc_ = rl;
    auto before = chip().stats().writes;
    head_sync(ihead_);
    commit_stats_.index_pages += chip().stats().writes - before;
  }

  // ------------------------------------------------------------------- LPT

  void load_lpt_leaf(std::uint32_t leaf) {
    if (lpt_loaded_[leaf]) return;
    auto l = lpt_leaf_loc_[leaf];
    if (!l.valid()) throw FsError(FsErrc::NoFilesystem, "ubifs: LPT leaf missing");
    auto page = ubi_.read(l.lnum, l.offs).data;
    ByteReader r(page);
    if (r.u32() != kLptMagic || r.u32() != leaf) throw FsError(FsErrc::NoFilesystem, "ubifs: bad LPT leaf");
    auto n = r.u32();
    auto first = leaf * kLptPerLeaf;
    for (std::uint32_t i = 0; i < n && first + i < lprops_.size(); ++i) {
      auto &p = lprops_[first + i];
      p.free = r.u32();
      p.dirty = r.u32();
      p.index = r.u8() != 0;
    }
    auto pos = r.pos();
    if (crc32(ByteSpan(page).first(pos)) != r.u32()) throw FsError(FsErrc::NoFilesystem, "ubifs: LPT crc");
    lpt_loaded_[leaf] = true;
  }

  void load_all_lpt() {
    for (std::uint32_t i = 0; i < lpt_leaf_count(); ++i) load_lpt_leaf(i);
  }

  void write_lpt() {
    std::uint32_t need = 1;
    for (bool d : lpt_dirty_) need += d ? 1 : 0;
    if (lpt_page_ + need > ubi_.leb_pages()) {
      // Switch LPT LEBs and rewrite every leaf there.
      load_all_lpt();
      lpt_old_ = lpt_lnum_;
      lpt_lnum_ = lpt_lnum_ == kLptLeb ? kLptLeb + 1 : kLptLeb;
      ubi_.unmap(lpt_lnum_);
      lpt_page_ = 0;
      std::fill(lpt_dirty_.begin(), lpt_dirty_.end(), true);
    }
    for (std::uint32_t leaf = 0; leaf < lpt_leaf_count(); ++leaf) {
      if (!lpt_dirty_[leaf]) continue;
      Bytes page;
      ByteWriter w(page);
      w.u32(kLptMagic);
      w.u32(leaf);
      auto first = leaf * kLptPerLeaf;
      auto n = std::min<std::uint32_t>(kLptPerLeaf, main_lebs() - first);
      w.u32(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        const auto &p = lprops_[first + i];
        w.u32(p.free);
        w.u32(p.dirty);
        w.u8(p.index ? 1 : 0);
      }
      w.u32(crc32(page));
      ubi_.write(lpt_lnum_, lpt_page_, page);
      lpt_leaf_loc_[leaf] = Loc{lpt_lnum_, lpt_page_, 0};
      ++lpt_page_;
      ++commit_stats_.lpt_pages;
      lpt_dirty_[leaf] = false;
    }
    Bytes rootp;
    ByteWriter w(rootp);
    w.u32(kLptMagic);
    w.u32(kNone);
    w.u32(lpt_leaf_count());
    for (const auto &l : lpt_leaf_loc_) {
      w.u32(l.lnum);
      w.u32(l.offs);
    }
    w.u32(crc32(rootp));
    ubi_.write(lpt_lnum_, lpt_page_, rootp);
    lpt_root_ = Loc{lpt_lnum_, lpt_page_, 0};
    ++lpt_page_;
    ++commit_stats_.lpt_pages;
  }

  // ---------------------------------------------------------------- master

  void write_master() {
    auto lnum = kMasterLeb + static_cast<std::uint32_t>(cmt_no_ % 2);
    Bytes m;
    ByteWriter w(m);
    w.u32(kMasterMagic);
    w.u64(cmt_no_);
    w.u64(sqnum_);
    w.u32(next_ino_);
    w.u32(root_loc_.lnum);
    w.u32(root_loc_.offs);
    w.u32(root_loc_.len);
    w.u32(ihead_.lnum);
    w.u32(ihead_.offs);
    w.u32(lpt_root_.lnum);
    w.u32(lpt_root_.offs);
    w.u32(lpt_page_);
    w.u32(crc32(m));
    ubi_.unmap(lnum);
    ubi_.write(lnum, 0, m);
    ++commit_stats_.master_pages;
    if (lpt_old_ != kNone) {
      ubi_.unmap(lpt_old_);
      lpt_old_ = kNone;
    }
  }

  struct Master {
    std::uint64_t cmt_no, sqnum;
    Ino next_ino;
    Loc root, ihead, lpt_root;
    std::uint32_t lpt_page;
  };

  std::optional<Master> read_master(std::uint32_t lnum) {
    auto page = ubi_.read(lnum, 0).data;
    try {
      ByteReader r(page);
      if (r.u32() != kMasterMagic) return std::nullopt;
      Master m{};
      m.cmt_no = r.u64();
      m.sqnum = r.u64();
      m.next_ino = r.u32();
      m.root = Loc{r.u32(), r.u32(), r.u32()};
      m.ihead = Loc{r.u32(), r.u32(), 0};
      m.lpt_root = Loc{r.u32(), r.u32(), 0};
      m.lpt_page = r.u32();
      auto pos = r.pos();
      if (crc32(ByteSpan(page).first(pos)) != r.u32()) return std::nullopt;
      return m;
    } catch (const DecodeError &) {
      return std::nullopt;
    }
  }

  // ----------------------------------------------------------------- mount

  void mount_layout() {
    auto sbp = ubi_.read(kSbLeb, 0).data;
    {
      ByteReader r(sbp);
      if (r.u32() != kSbMagic || r.u32() != ubi_.leb_count())
        throw FsError(FsErrc::NoFilesystem, "ubifs: no superblock");
    }
    auto m1 = read_master(kMasterLeb), m2 = read_master(kMasterLeb + 1);
    if (!m1 && !m2) throw FsError(FsErrc::NoFilesystem, "ubifs: no master node");
    const Master &m = !m2 || (m1 && m1->cmt_no > m2->cmt_no) ? *m1 : *m2;
    cmt_no_ = m.cmt_no;
    sqnum_ = m.sqnum;
    next_ino_ = m.next_ino;
    root_loc_ = m.root;
    lpt_root_ = m.lpt_root;
    lpt_lnum_ = m.lpt_root.lnum;
    lpt_page_ = m.lpt_page;
    if (m.ihead.lnum != kNone) ihead_ = Head{m.ihead.lnum, m.ihead.offs, {}};

    auto rp = ubi_.read(lpt_root_.lnum, lpt_root_.offs).data;
    ByteReader r(rp);
    if (r.u32() != kLptMagic || r.u32() != kNone || r.u32() != lpt_leaf_count())
      throw FsError(FsErrc::NoFilesystem, "ubifs: bad LPT root");
    for (auto &l : lpt_leaf_loc_) l = Loc{r.u32(), r.u32(), 0};
    auto pos = r.pos();
    if (crc32(ByteSpan(rp).first(pos)) != r.u32()) throw FsError(FsErrc::NoFilesystem, "ubifs: LPT root crc");
    replay();
  }

  void replay() {
    const std::uint32_t ps = ubi_.page_size();
    std::vector<std::pair<std::uint32_t, std::uint32_t>> refs;
    for (std::uint32_t p = 0; p < ubi_.leb_pages(); ++p) {
      auto page = ubi_.read(kLogLeb, p).data;
      ByteReader r(page);
      if (r.u32() != kLogMagic) break;
      auto cno = r.u64();
      auto lnum = r.u32();
      auto offs = r.u32();
      if (crc32(ByteSpan(page).first(r.pos())) != r.u32() || cno != cmt_no_) break;
      refs.emplace_back(lnum, offs);
      log_page_ = p + 1;
    }
    if (refs.empty()) return;
    for (auto [lnum, start] : refs) {
      buds_.push_back(lnum);
      Bytes content;
      for (std::uint32_t p = start / ps; p < ubi_.leb_pages(); ++p) {
        auto page = ubi_.read(lnum, p).data;
        if (all_ff(page)) break;
        content.insert(content.end(), page.begin(), page.end());
      }
      std::uint32_t pad = 0;
      std::size_t pos = 0;
      while (pos < content.size()) {
        auto n = parse_node(content, pos);
        if (!n) {
          auto next = (pos / ps + 1) * ps;
          pad += static_cast<std::uint32_t>(next - pos);
          pos = next;
          continue;
        }
        replay_node(*n, Loc{lnum, static_cast<std::uint32_t>(start + pos), n->len});
        pos += n->len;
        ++mount_info_.replayed_nodes;
      }
      auto end = static_cast<std::uint32_t>(start + content.size());
      auto &p = lp(lnum);
      p.free = ubi_.leb_size() - end;
      p.dirty += pad;
      jhead_ = Head{lnum, end, {}};
    }
    head_logged_ = true;
    // LEBs reclaimed by GC since the last commit are unmapped but the
    // committed LPT still describes their old contents.
    load_all_lpt();
    for (std::uint32_t i = 0; i < main_lebs(); ++i) {
      auto lnum = i + kMainFirst;
      if (lprops_[i].free != ubi_.leb_size() && !ubi_.is_mapped(lnum)) lp(lnum) = LProps{ubi_.leb_size(), 0, false};
    }
  }

  void replay_node(const ParsedNode &n, const Loc &loc) {
    sqnum_ = std::max(sqnum_, n.sqnum + 1);
    ByteReader r(n.body);
    switch (n.type) {
      case NodeType::Inode: {
        Ino ino = r.u32();
        auto kind = static_cast<FileKind>(r.u8());
        auto size = r.u64();
        auto nlink = r.u32();
        next_ino_ = std::max(next_ino_, ino + 1);
        if (nlink == 0) {
          remove_ino(ino);
          add_dirty(loc);
        } else {
          apply(Key{ino, kInode, 0}, loc, LeafInfo{kind, size, 0, {}});
        }
        break;
      }
      case NodeType::Data: {
        Ino ino = r.u32();
        auto blk = r.u32();
        apply(Key{ino, kData, blk}, loc, std::nullopt);
        break;
      }
      case NodeType::Dirent: {
        Ino parent = r.u32();
        Ino target = r.u32();
        auto kind = static_cast<FileKind>(r.u8());
        auto nm = r.str();
        Key k{parent, kDirent, fnv1a64(nm)};
        if (target == 0) {
          remove_key(k);
          add_dirty(loc);
        } else {
          next_ino_ = std::max(next_ino_, target + 1);
          apply(k, loc, LeafInfo{kind, 0, target, nm});
        }
        break;
      }
      case NodeType::Index: add_dirty(loc); break;
    }
  }

  // -------------------------------------------------------------------- GC

  // Reclaims the main LEB with the most dirty space. Returns false if none.
  bool collect_one(std::uint32_t min_dirty = 1) {
    load_all_lpt();
    std::optional<std::uint32_t> victim;
    std::uint32_t best = min_dirty - 1;
    for (std::uint32_t i = 0; i < main_lebs(); ++i) {
      auto lnum = i + kMainFirst;
      if (!gc_candidate(lnum)) continue;
      if (lprops_[i].dirty > best) {
        best = lprops_[i].dirty;
        victim = lnum;
      }
    }
    if (!victim) return false;
    const auto v = *victim;
    in_gc_ = true;
    auto &vp = lp(v);
    auto used = ubi_.leb_size() - vp.free;
    if (used > vp.dirty) {
      Bytes content;
      const std::uint32_t ps = ubi_.page_size();
      for (std::uint32_t p = 0; p * ps < used; ++p) {
        auto page = ubi_.read(v, p).data;
        content.insert(content.end(), page.begin(), page.end());
      }
      if (vp.index) {
        relocate_index(v, content);
      } else {
        relocate_data(v, content);
      }
    }
    in_gc_ = false;
    ubi_.unmap(v);
    lp(v) = LProps{ubi_.leb_size(), 0, false};
    return true;
  }

  void relocate_data(std::uint32_t v, const Bytes &content) {
    const std::uint32_t ps = ubi_.page_size();
    std::size_t pos = 0;
    while (pos < content.size()) {
      auto n = parse_node(content, pos);
      if (!n) {
        pos = (pos / ps + 1) * ps;
        continue;
      }
      Loc here{v, static_cast<std::uint32_t>(pos), n->len};
      std::optional<Key> key;
      ByteReader r(n->body);
      if (n->type == NodeType::Inode) {
        key = Key{r.u32(), kInode, 0};
      } else if (n->type == NodeType::Data) {
        Ino ino = r.u32();
        key = Key{ino, kData, r.u32()};
      } else if (n->type == NodeType::Dirent) {
        Ino parent = r.u32();
        r.u32();
        r.u8();
        key = Key{parent, kDirent, fnv1a64(r.str())};
      }
      if (key) {
        if (auto *b = find(*key); b && b->loc == here) {
          Bytes copy(content.begin() + static_cast<std::ptrdiff_t>(pos),
                     content.begin() + static_cast<std::ptrdiff_t>(pos + n->len));
          auto nl = head_append(copy);
          auto path = descend(*key);
          b = find(*key);
          b->loc = nl;
          mark_dirty(path);
        }
      }
      pos += n->len;
    }
    sync_wbuf();
  }

  // Marks every live index node in the LEB dirty, then commits so they are
  // rewritten elsewhere.
  void relocate_index(std::uint32_t v, const Bytes &content) {
    const std::uint32_t ps = ubi_.page_size();
    std::size_t pos = 0;
    while (pos < content.size()) {
      auto n = parse_node(content, pos);
      if (!n) {
        pos = (pos / ps + 1) * ps;
        continue;
      }
      Loc here{v, static_cast<std::uint32_t>(pos), n->len};
      if (n->type == NodeType::Index) {
        ByteReader r(n->body);
        auto level = r.u8();
        auto cnt = r.u16();
        Key first{};
        if (cnt > 0) first = read_key(r);
        auto path = descend(first, level);
        if (path.back().z->on_flash == here) mark_dirty(path);
      }
      pos += n->len;
    }
    in_gc_ = false;
    do_commit();
    in_gc_ = true;
  }

  UbifsConfig ucfg_;
  UbiDevice ubi_;
  std::unique_ptr<Znode> root_;
  Loc root_loc_;
  std::vector<LProps> lprops_;
  std::vector<bool> lpt_loaded_, lpt_dirty_;
  std::vector<Loc> lpt_leaf_loc_;
  Loc lpt_root_;
  std::uint32_t lpt_lnum_ = kLptLeb;
  std::uint32_t lpt_page_ = 0;
  std::uint32_t lpt_old_ = kNone;
  Head jhead_, ihead_;
  bool head_logged_ = false;
  std::vector<std::uint32_t> buds_;
  std::uint32_t log_page_ = 0;
  std::vector<Loc> pending_obsolete_;
  std::uint64_t cmt_no_ = 0;
  std::uint64_t sqnum_ = 1;
  Ino next_ino_ = kRootIno + 1;
  bool in_gc_ = false;
  bool use_reserve_ = false;
  bool in_commit_ = false;
  MountInfo mount_info_;
  CommitStats commit_stats_;
};

}  // namespace ffsarena
