#pragma once

// JFFS2-style log-structured filesystem model.
//
// Storage unit is the node: a page-aligned record between one page and half
// an erase block. Blocks live on one of three lists (free, clean, dirty);
// mount rebuilds the in-RAM node map by reading every page of the partition.
// A cooperative GC task formats freshly created partitions and reclaims dirty
// blocks, occasionally picking a clean block instead for wear leveling.
//
// Node layout (first page, little-endian):
//   magic u16 | kind u8 | inode u32 | version u32 | file_offset u32 |
//   container | crc32 of all preceding bytes
// Dirent payload: target inode u32 (0 = deletion) | kind u8 | name

#include "ffsarena/volume.hpp"

#include <deque>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

namespace ffsarena {

struct Jffs2Config {
  VolumeConfig volume{Codec::Deflate};
  double wear_prob = 0.01;
  // Background GC runs while free blocks drop below this count.
  std::uint32_t gc_free_trigger = 8;
  // Free blocks only GC may consume.
  std::uint32_t reserve_blocks = 2;
  std::uint64_t seed = 1;
};

class Jffs2Volume final : public FfsVolume {
 public:
  static constexpr std::uint16_t kMagic = 0x1985;
  static constexpr std::size_t kNodeHeader = 2 + 1 + 4 + 4 + 4;
  static constexpr std::size_t kNodeOverhead = kNodeHeader + kContainerHeader + 4;
  static constexpr std::uint32_t kMinBlocks = 5;

  enum class NodeKind : std::uint8_t { Dirent = 1, Data = 2 };
  enum class GcState { Idle, Formatting, Collecting };
  enum class BlockList { Free, Clean, Dirty, Bad };

  struct GcStats {
    std::uint64_t steps = 0;
    std::uint64_t clean_picks = 0;
    std::uint64_t dirty_picks = 0;
    std::uint64_t nodes_copied = 0;
    std::uint64_t format_erases = 0;
  };

  Jffs2Volume(Mtd mtd, Jffs2Config cfg = {})
      : FfsVolume(mtd, cfg.volume), jcfg_(cfg), rng_(cfg.seed), blocks_(mtd.blocks()) {}

  std::string_view name() const override { return "jffs2"; }

  // mkfs: nothing is written; every block is queued for the GC task to
  // erase once the volume is mounted.
  void format() override {
    if (mounted()) throw FsError(FsErrc::AlreadyMounted, "jffs2 format");
    if (mtd_.blocks() < kMinBlocks) throw FsError(FsErrc::PartitionTooSmall, "jffs2 needs >= 5 blocks");
    format_pending_ = true;
  }

  void gc_step() override {
    require_mounted();
    if (!pending_.empty()) {
      format_one();
      return;
    }
    if (!collect(true)) throw FsError(FsErrc::NothingToCollect, "jffs2");
  }

  GcState gc_state() const {
    if (!pending_.empty()) return GcState::Formatting;
    return collecting_ ? GcState::Collecting : GcState::Idle;
  }
  const GcStats &gc_stats() const { return gc_stats_; }
  std::size_t pending_format() const { return pending_.size(); }

  std::size_t free_blocks() const { return free_.size(); }
  std::size_t clean_blocks() const { return count_list(BlockList::Clean); }
  std::size_t dirty_blocks() const { return count_list(BlockList::Dirty); }
  BlockList block_list(std::uint32_t b) const { return blocks_[b].list; }
  std::uint32_t valid_nodes() const { return static_cast<std::uint32_t>(valid_node_count_); }
  std::uint32_t block_valid_pages(std::uint32_t b) const { return blocks_[b].valid_pages; }

  // Checks that the lists partition the non-bad blocks and that free blocks
  // hold nothing. Returns an empty string when consistent.
  std::string check_lists() const {
    for (std::uint32_t b = 0; b < blocks_.size(); ++b) {
      const auto &bi = blocks_[b];
      bool in_free = std::find(free_.begin(), free_.end(), b) != free_.end();
      if ((bi.list == BlockList::Free) != in_free) return "free list mismatch at " + std::to_string(b);
      if (bi.list == BlockList::Free && (bi.used != 0 || !bi.nodes.empty()))
        return "free block not empty: " + std::to_string(b);
      if (bi.list == BlockList::Clean && dirt(b) != 0) return "clean block has dirt: " + std::to_string(b);
      if (bi.list == BlockList::Dirty && dirt(b) == 0 && !bi.pending)
        return "dirty block has no dirt: " + std::to_string(b);
    }
    return {};
  }

  std::uint64_t meta_ram_bytes() const override {
    std::uint64_t names = 0;
    for (const auto &[id, n] : nodes_) names += n.name.size();
    return nodes_.size() * 40 + inodes_.size() * 48 + names + blocks_.size() * 16;
  }
  std::uint64_t used_flash_bytes() const override {
    std::uint64_t pages = 0;
    for (const auto &b : blocks_) pages += b.valid_pages;
    return pages * mtd_.page_size();
  }
  std::uint64_t reclaimable_blocks() const override { return dirty_blocks(); }
  std::uint64_t capacity_bytes() const override {
    return std::uint64_t{mtd_.blocks() - jcfg_.reserve_blocks} * mtd_.geometry().block_bytes();
  }

 protected:
  // ---------------------------------------------------------------- mount

  void do_mount() override {
    reset_ram();
    struct ScannedNode {
      std::uint32_t block, page, pages;
      NodeKind kind;
      Ino inode;
      std::uint32_t version, offset, raw_len;
      Ino target = 0;
      FileKind tkind = FileKind::File;
      std::string name;
    };
    std::vector<ScannedNode> found;
    const auto ppb = mtd_.ppb();
    for (std::uint32_t b = 0; b < mtd_.blocks(); ++b) {
      auto &bi = blocks_[b];
      if (mtd_.is_bad(b)) {
        bi.list = BlockList::Bad;
        continue;
      }
      std::vector<PageRead> pages;
      pages.reserve(ppb);
      for (std::uint32_t p = 0; p < ppb; ++p) pages.push_back(mtd_.read(b, p));
      std::uint32_t p = 0;
      while (p < ppb) {
        if (all_ff(pages[p].data)) {
          ++p;
          continue;
        }
        bi.used = p + 1;
        auto parsed = parse_node(pages, p);
        if (!parsed) {
          ++corrupt_nodes_;
          ++p;
          continue;
        }
        auto &[hdr, body_pages, payload] = *parsed;
        ScannedNode sn{b, p, body_pages, hdr.kind, hdr.inode, hdr.version, hdr.offset, hdr.raw_len, 0, FileKind::File, {}};
        if (hdr.kind == NodeKind::Dirent) {
          ByteReader r(payload);
          sn.target = r.u32();
          sn.tkind = static_cast<FileKind>(r.u8());
          sn.name = r.str();
        }
        found.push_back(std::move(sn));
        bi.used = p + body_pages;
        p += body_pages;
      }
    }

    // Highest version wins per (parent, name); then walk from the root.
    std::map<std::pair<Ino, std::string>, std::size_t> latest;
    for (std::size_t i = 0; i < found.size(); ++i) {
      const auto &n = found[i];
      next_version_ = std::max(next_version_, n.version + 1);
      next_ino_ = std::max({next_ino_, n.inode + 1, n.target + 1});
      if (n.kind != NodeKind::Dirent) continue;
      auto key = std::make_pair(n.inode, n.name);
      auto it = latest.find(key);
      if (it == latest.end() || found[it->second].version < n.version) latest[key] = i;
    }
    std::map<Ino, std::vector<std::size_t>> children;  // parent -> winning dirents
    for (const auto &[key, idx] : latest) children[key.first].push_back(idx);

    inodes_[kRootIno] = make_inode(FileKind::Dir);
    std::deque<Ino> todo{kRootIno};
    while (!todo.empty()) {
      Ino dir = todo.front();
      todo.pop_front();
      for (auto idx : children[dir]) {
        const auto &n = found[idx];
        if (n.target == 0 || inodes_.count(n.target)) continue;
        inodes_[n.target] = make_inode(n.tkind);
        if (n.tkind == FileKind::Dir) todo.push_back(n.target);
      }
    }

    // Register every physical node, valid or not, so erases can account them.
    std::vector<std::uint32_t> ids(found.size());
    for (std::size_t i = 0; i < found.size(); ++i) {
      const auto &n = found[i];
      NodeRef ref{n.block, n.page, n.pages, n.kind, n.inode, n.version, n.offset, n.raw_len,
                  n.target, n.tkind, {}, false, fnv1a64(n.name), false};
      ids[i] = add_node(std::move(ref));
      if (n.kind == NodeKind::Dirent && n.target != 0) ++dirent_copies_[{n.inode, fnv1a64(n.name)}];
    }
    for (const auto &[key, idx] : latest) {
      const auto &n = found[idx];
      auto inode = inodes_.find(n.inode);
      if (inode == inodes_.end()) continue;  // parent gone
      auto &ref = nodes_.at(ids[idx]);
      if (n.target == 0) {
        ref.marker = true;
        if (dirent_copies_[{n.inode, ref.name_hash}] > 0) {
          make_valid(ids[idx]);
          markers_[{n.inode, ref.name_hash}] = ids[idx];
        }
        continue;
      }
      make_valid(ids[idx]);
      inode->second.dirents.emplace(ref.name_hash, ids[idx]);
    }
    std::vector<std::size_t> data_order;
    for (std::size_t i = 0; i < found.size(); ++i)
      if (found[i].kind == NodeKind::Data && inodes_.count(found[i].inode)) data_order.push_back(i);
    std::sort(data_order.begin(), data_order.end(),
              [&](auto a, auto b) { return found[a].version < found[b].version; });
    for (auto i : data_order) {
      make_valid(ids[i]);
      apply_fragment(ids[i]);
    }

    for (std::uint32_t b = 0; b < blocks_.size(); ++b) {
      auto &bi = blocks_[b];
      if (bi.list == BlockList::Bad) continue;
      if (format_pending_) {
        bi.pending = true;
        bi.list = BlockList::Dirty;
        pending_.push_back(b);
      } else if (bi.used == 0) {
        bi.list = BlockList::Free;
        free_.push_back(b);
      } else {
        bi.closed = true;
        bi.list = BlockList::Clean;
        relist(b);
      }
    }
    if (format_pending_) {
      // Scanned contents are discarded; the partition is being created.
      nodes_.clear();
      inodes_.clear();
      inodes_[kRootIno] = make_inode(FileKind::Dir);
      dirent_copies_.clear();
      markers_.clear();
      valid_node_count_ = 0;
      for (auto &bi : blocks_) {
        bi.nodes.clear();
        bi.valid_pages = 0;
      }
    }
    format_pending_ = false;
  }

  void do_unmount() override {
    while (!pending_.empty()) format_one();
    close_write_block();
    collecting_ = false;
  }

  // ---------------------------------------------------------------- namespace

  std::optional<DirEntry> fs_lookup(Ino dir, std::string_view name) override {
    auto &d = inode(dir);
    if (d.kind != FileKind::Dir) return std::nullopt;
    auto [lo, hi] = d.dirents.equal_range(fnv1a64(name));
    for (auto it = lo; it != hi; ++it) {
      auto &ref = touch(it->second);
      if (ref.name == name) return DirEntry{ref.name, ref.target_kind, ref.target};
    }
    return std::nullopt;
  }

  std::vector<DirEntry> fs_list(Ino dir) override {
    std::vector<DirEntry> out;
    auto &d = inode(dir);
    for (const auto &[h, id] : d.dirents) {
      auto &ref = touch(id);
      out.push_back(DirEntry{ref.name, ref.target_kind, ref.target});
    }
    return out;
  }

  FileAttr fs_getattr(Ino ino) override {
    auto &i = inode(ino);
    return FileAttr{i.kind, i.kind == FileKind::File ? i.size : 0, ino};
  }

  Ino fs_create(Ino dir, std::string_view name, FileKind kind) override {
    Ino ino = next_ino_++;
    inodes_[ino] = make_inode(kind);
    write_dirent(dir, name, ino, kind);
    return ino;
  }

  void fs_remove(Ino dir, const DirEntry &e) override {
    auto &d = inode(dir);
    auto h = fnv1a64(e.name);
    auto [lo, hi] = d.dirents.equal_range(h);
    for (auto it = lo; it != hi; ++it) {
      if (touch(it->second).name == e.name) {
        obsolete(it->second);
        d.dirents.erase(it);
        break;
      }
    }
    auto &victim = inode(e.inode);
    for (const auto &[start, frag] : victim.frags) release_frag(frag.node);
    inodes_.erase(e.inode);
    // The deletion marker shadows older dirents still physically present.
    // It may use the reserve so that a full volume can be emptied.
    use_reserve_ = true;
    std::uint32_t id = 0;
    try {
      id = write_dirent(dir, e.name, 0, e.kind);
    } catch (...) {
      use_reserve_ = false;
      throw;
    }
    use_reserve_ = false;
    if (dirent_copies_[{dir, h}] == 0) {
      obsolete(id);
    } else {
      markers_[{dir, h}] = id;
    }
  }

  void fs_write(Ino ino, std::uint64_t offset, ByteSpan data) override {
    const std::size_t max_raw = max_node_bytes() - kNodeOverhead;
    std::size_t done = 0;
    do {
      std::size_t n = std::min(max_raw, data.size() - done);
      auto chunk = data.subspan(done, n);
      Bytes payload = pack(chunk);
      auto id = write_node(NodeKind::Data, ino, static_cast<std::uint32_t>(offset + done), payload,
                           static_cast<std::uint32_t>(n));
      apply_fragment(id);
      done += n;
    } while (done < data.size());
  }

  Bytes fs_read(Ino ino) override {
    auto &i = inode(ino);
    Bytes out(i.size, 0);
    std::unordered_map<std::uint32_t, Bytes> decoded;
    for (const auto &[start, frag] : i.frags) {
      auto &ref = nodes_.at(frag.node);
      auto it = decoded.find(frag.node);
      if (it == decoded.end()) it = decoded.emplace(frag.node, read_payload(ref)).first;
      const auto &raw = it->second;
      std::copy(raw.begin() + static_cast<std::ptrdiff_t>(start - ref.offset),
                raw.begin() + static_cast<std::ptrdiff_t>(frag.end - ref.offset),
                out.begin() + static_cast<std::ptrdiff_t>(start));
    }
    return out;
  }

  void fs_background() override {
    if (!pending_.empty()) {
      format_one();
    } else if (free_.size() < jcfg_.gc_free_trigger) {
      collecting_ = collect(true);
    } else {
      collecting_ = false;
    }
  }

 private:
  struct NodeRef {
    std::uint32_t block, page, pages;
    NodeKind kind;
    Ino inode;  // parent for dirents
    std::uint32_t version, offset, raw_len;
    Ino target;
    FileKind target_kind;
    std::string name;  // resident only once touched
    bool touched;
    std::uint64_t name_hash;
    bool valid;
    bool marker = false;
    std::uint32_t frag_refs = 0;
  };
  struct Frag {
    std::uint64_t end;
    std::uint32_t node;
  };
  struct InodeInfo {
    FileKind kind = FileKind::File;
    std::uint64_t size = 0;
    std::map<std::uint64_t, Frag> frags;                    // files
    std::unordered_multimap<std::uint64_t, std::uint32_t> dirents;  // dirs: name hash -> node
  };
  static InodeInfo make_inode(FileKind k) {
    InodeInfo i;
    i.kind = k;
    return i;
  }
  struct BlockInfo {
    BlockList list = BlockList::Free;
    std::uint32_t used = 0;         // pages consumed from the start
    std::uint32_t valid_pages = 0;  // pages of valid nodes
    bool closed = false;            // no further appends
    bool pending = false;           // awaiting format erase
    std::vector<std::uint32_t> nodes;
  };
  struct NodeHeader {
    NodeKind kind;
    Ino inode;
    std::uint32_t version, offset, raw_len;
  };
  struct KeyHash {
    std::size_t operator()(const std::pair<Ino, std::uint64_t> &k) const {
      return static_cast<std::size_t>(mix64(k.second ^ k.first));
    }
  };

  std::size_t max_node_bytes() const { return std::size_t{mtd_.geometry().block_bytes()} / 2; }
  std::uint32_t pages_for(std::size_t bytes) const {
    return static_cast<std::uint32_t>((bytes + mtd_.page_size() - 1) / mtd_.page_size());
  }

  void reset_ram() {
    nodes_.clear();
    inodes_.clear();
    dirent_copies_.clear();
    markers_.clear();
    free_.clear();
    pending_.clear();
    for (auto &b : blocks_) b = BlockInfo{};
    write_block_.reset();
    next_node_id_ = 1;
    next_version_ = 1;
    next_ino_ = kRootIno + 1;
    valid_node_count_ = 0;
    corrupt_nodes_ = 0;
  }

  InodeInfo &inode(Ino ino) {
    auto it = inodes_.find(ino);
    if (it == inodes_.end()) throw FsError(FsErrc::NotFound, "inode " + std::to_string(ino));
    return it->second;
  }

  std::size_t count_list(BlockList l) const {
    return static_cast<std::size_t>(std::count_if(blocks_.begin(), blocks_.end(), [&](const auto &b) {
      return b.list == l;
    }));
  }

  std::uint32_t dirt(std::uint32_t b) const {
    const auto &bi = blocks_[b];
    std::uint32_t d = bi.used - bi.valid_pages;
    if (bi.closed) d += mtd_.ppb() - bi.used;
    return d;
  }

  void relist(std::uint32_t b) {
    auto &bi = blocks_[b];
    if (bi.list == BlockList::Free || bi.list == BlockList::Bad || bi.pending) return;
    bi.list = dirt(b) ? BlockList::Dirty : BlockList::Clean;
  }

  std::uint32_t add_node(NodeRef ref) {
    auto id = next_node_id_++;
    blocks_[ref.block].nodes.push_back(id);
    nodes_.emplace(id, std::move(ref));
    return id;
  }

  void make_valid(std::uint32_t id) {
    auto &ref = nodes_.at(id);
    if (ref.valid) return;
    ref.valid = true;
    ++valid_node_count_;
    blocks_[ref.block].valid_pages += ref.pages;
  }

  void obsolete(std::uint32_t id) {
    auto &ref = nodes_.at(id);
    if (!ref.valid) return;
    ref.valid = false;
    --valid_node_count_;
    blocks_[ref.block].valid_pages -= ref.pages;
    relist(ref.block);
  }

  void release_frag(std::uint32_t id) {
    auto &ref = nodes_.at(id);
    if (--ref.frag_refs == 0) obsolete(id);
  }

  // Overlays a data node onto its inode's fragment map.
  void apply_fragment(std::uint32_t id) {
    auto &ref = nodes_.at(id);
    auto &f = inode(ref.inode);
    std::uint64_t start = ref.offset, end = start + ref.raw_len;
    f.size = std::max(f.size, end);
    if (ref.raw_len == 0) {
      if (ref.frag_refs == 0) obsolete(id);
      return;
    }
    auto it = f.frags.lower_bound(start);
    if (it != f.frags.begin()) {
      auto prev = std::prev(it);
      if (prev->second.end > start) it = prev;
    }
    std::vector<std::pair<std::uint64_t, Frag>> keep;
    while (it != f.frags.end() && it->first < end) {
      auto [s, fr] = *it;
      it = f.frags.erase(it);
      if (s < start) {
        keep.push_back({s, Frag{start, fr.node}});
        ++nodes_.at(fr.node).frag_refs;
      }
      if (fr.end > end) {
        keep.push_back({end, Frag{fr.end, fr.node}});
        ++nodes_.at(fr.node).frag_refs;
      }
      release_frag(fr.node);
    }
    for (auto &k : keep) f.frags.insert(k);
    f.frags[start] = Frag{end, id};
    ++ref.frag_refs;
  }

  NodeRef &touch(std::uint32_t id) {
    auto &ref = nodes_.at(id);
    if (!ref.touched) {
      auto pages = read_node_pages(ref);
      auto parsed = parse_node(pages, 0);
      if (!parsed) throw FsError(FsErrc::NoFilesystem, "jffs2: dirent unreadable");
      ByteReader r(std::get<2>(*parsed));
      r.u32();
      r.u8();
      ref.name = r.str();
      ref.touched = true;
    }
    return ref;
  }

  std::vector<PageRead> read_node_pages(const NodeRef &ref) {
    std::vector<PageRead> pages;
    for (std::uint32_t p = 0; p < ref.pages; ++p) pages.push_back(mtd_.read(ref.block, ref.page + p));
    return pages;
  }

  Bytes read_payload(const NodeRef &ref) {
    auto pages = read_node_pages(ref);
    Bytes all;
    for (auto &p : pages) all.insert(all.end(), p.data.begin(), p.data.end());
    ByteReader r(all);
    r.raw(kNodeHeader);
    return unpack(r);
  }

  // Parses the node starting at pages[first]; returns header, footprint in
  // pages, and the decoded payload.
  std::optional<std::tuple<NodeHeader, std::uint32_t, Bytes>> parse_node(const std::vector<PageRead> &pages,
                                                                          std::uint32_t first) const {
    try {
      ByteReader h(pages[first].data);
      if (h.u16() != kMagic) return std::nullopt;
      NodeHeader hdr{};
      auto kind = h.u8();
      if (kind != 1 && kind != 2) return std::nullopt;
      hdr.kind = static_cast<NodeKind>(kind);
      hdr.inode = h.u32();
      hdr.version = h.u32();
      hdr.offset = h.u32();
      auto ch = read_container_header(h);
      hdr.raw_len = ch.raw_len;
      std::size_t total = kNodeOverhead + ch.stored_len;
      if (total > max_node_bytes()) return std::nullopt;
      auto npages = pages_for(total);
      if (first + npages > pages.size()) return std::nullopt;
      Bytes all;
      for (std::uint32_t p = first; p < first + npages; ++p)
        all.insert(all.end(), pages[p].data.begin(), pages[p].data.end());
      ByteSpan span(all);
      std::uint32_t stored_crc = ByteReader(span.subspan(total - 4, 4)).u32();
      if (crc32(span.first(total - 4)) != stored_crc) return std::nullopt;
      Bytes payload;
      if (hdr.kind == NodeKind::Dirent) {
        ByteReader pr(span.subspan(kNodeHeader));
        payload = unpack_container(pr);
      }
      return std::make_tuple(hdr, npages, std::move(payload));
    } catch (const DecodeError &) {
      return std::nullopt;
    } catch (const CodecError &) {
      return std::nullopt;
    }
  }

  std::uint32_t write_dirent(Ino parent, std::string_view name, Ino target, FileKind kind) {
    Bytes raw;
    ByteWriter w(raw);
    w.u32(target);
    w.u8(static_cast<std::uint8_t>(kind));
    w.str(name);
    auto payload = pack_container(Codec::None, raw);
    auto id = write_node(NodeKind::Dirent, parent, 0, payload, static_cast<std::uint32_t>(raw.size()));
    auto &ref = nodes_.at(id);
    ref.target = target;
    ref.target_kind = kind;
    ref.name = std::string(name);
    ref.touched = true;
    ref.name_hash = fnv1a64(name);
    ref.marker = target == 0;
    std::pair<Ino, std::uint64_t> key{parent, ref.name_hash};
    if (target != 0) {
      ++dirent_copies_[key];
      inode(parent).dirents.emplace(ref.name_hash, id);
      // A live dirent supersedes any deletion marker for the name.
      if (auto m = markers_.find(key); m != markers_.end()) {
        obsolete(m->second);
        markers_.erase(m);
      }
    }
    return id;
  }

  std::uint32_t write_node(NodeKind kind, Ino ino, std::uint32_t offset, const Bytes &container,
                           std::uint32_t raw_len) {
    Bytes node;
    ByteWriter w(node);
    w.u16(kMagic);
    w.u8(static_cast<std::uint8_t>(kind));
    w.u32(ino);
    auto version = next_version_++;
    w.u32(version);
    w.u32(offset);
    w.raw(container);
    w.u32(crc32(node));
    auto npages = pages_for(node.size());
    auto [blk, page] = allocate(npages, false);
    program_node(blk, page, node);
    NodeRef ref{blk, page, npages, kind, ino, version, offset, raw_len, 0, FileKind::File, {}, false, 0, false};
    auto id = add_node(std::move(ref));
    make_valid(id);
    relist(blk);
    return id;
  }

  void program_node(std::uint32_t blk, std::uint32_t page, ByteSpan node) {
    const auto ps = mtd_.page_size();
    for (std::size_t off = 0, p = page; off < node.size(); off += ps, ++p)
      mtd_.program(blk, static_cast<std::uint32_t>(p), node.subspan(off, std::min<std::size_t>(ps, node.size() - off)));
  }

  // ---------------------------------------------------------------- space

  std::pair<std::uint32_t, std::uint32_t> allocate(std::uint32_t npages, bool for_gc) {
    if (write_block_ && blocks_[*write_block_].used + npages <= mtd_.ppb()) {
      auto b = *write_block_;
      auto page = blocks_[b].used;
      blocks_[b].used += npages;
      return {b, page};
    }
    close_write_block();
    auto b = take_free(for_gc);
    auto &bi = blocks_[b];
    bi.list = BlockList::Clean;
    bi.used = npages;
    write_block_ = b;
    return {b, 0};
  }

  void close_write_block() {
    if (!write_block_) return;
    auto b = *write_block_;
    write_block_.reset();
    blocks_[b].closed = true;
    relist(b);
  }

  std::uint32_t take_free(bool for_gc) {
    std::size_t passes = 0;
    for (;;) {
      if (!pending_.empty() && free_.size() <= jcfg_.reserve_blocks) {
        format_one();
        continue;
      }
      if (free_.size() > (for_gc ? 0u : jcfg_.reserve_blocks)) break;
      if (for_gc) throw FsError(FsErrc::NoSpace, "jffs2: gc has no free block");
      if (passes++ < blocks_.size() && collect(false)) continue;
      if (use_reserve_ && !free_.empty()) break;
      throw FsError(FsErrc::NoSpace, "jffs2");
    }
    auto b = free_.front();
    free_.pop_front();
    return b;
  }

  void format_one() {
    auto b = pending_.front();
    pending_.pop_front();
    blocks_[b].pending = false;
    ++gc_stats_.format_erases;
    erase_to_free(b);
  }

  void erase_to_free(std::uint32_t b) {
    auto &bi = blocks_[b];
    for (auto id : bi.nodes) {
      auto &ref = nodes_.at(id);
      if (ref.kind == NodeKind::Dirent && ref.target != 0) {
        std::pair<Ino, std::uint64_t> key{ref.inode, ref.name_hash};
        auto &copies = dirent_copies_[key];
        if (copies > 0 && --copies == 0) {
          if (auto m = markers_.find(key); m != markers_.end() && nodes_.at(m->second).block != b) {
            obsolete(m->second);
            markers_.erase(m);
          }
        }
      }
      if (ref.marker) {
        std::pair<Ino, std::uint64_t> key{ref.inode, ref.name_hash};
        if (auto m = markers_.find(key); m != markers_.end() && m->second == id) markers_.erase(m);
      }
      nodes_.erase(id);
    }
    bi = BlockInfo{};
    try {
      mtd_.erase(b);
    } catch (const FlashError &e) {
      if (e.code() != FlashErrc::BlockWornOut) throw;
      bi.list = BlockList::Bad;
      return;
    }
    bi.list = BlockList::Free;
    free_.push_back(b);
  }

  // One GC pass. `allow_wear` enables the probabilistic clean-block pick.
  bool collect(bool allow_wear) {
    std::optional<std::uint32_t> victim;
    bool clean_pick = false;
    if (allow_wear && jcfg_.wear_prob > 0) {
      bool draw = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < jcfg_.wear_prob;
      if (draw) {
        std::vector<std::uint32_t> clean;
        for (std::uint32_t b = 0; b < blocks_.size(); ++b)
          if (blocks_[b].list == BlockList::Clean && blocks_[b].used > 0 && b != write_block_) clean.push_back(b);
        if (!clean.empty()) {
          victim = clean[std::uniform_int_distribution<std::size_t>(0, clean.size() - 1)(rng_)];
          clean_pick = true;
        }
      }
    }
    if (!victim) {
      std::uint32_t best = 0;
      for (std::uint32_t b = 0; b < blocks_.size(); ++b) {
        const auto &bi = blocks_[b];
        if (bi.list != BlockList::Dirty || bi.pending || b == write_block_) continue;
        auto d = dirt(b);
        if (d > best) {
          best = d;
          victim = b;
        }
      }
    }
    // Live nodes of one block always fit in one fresh block.
    if (!victim || free_.empty()) return false;
    ++gc_stats_.steps;
    ++(clean_pick ? gc_stats_.clean_picks : gc_stats_.dirty_picks);
    auto ids = blocks_[*victim].nodes;
    for (auto id : ids) {
      auto &ref = nodes_.at(id);
      if (!ref.valid) continue;
      auto pages = read_node_pages(ref);
      Bytes node;
      for (auto &p : pages) node.insert(node.end(), p.data.begin(), p.data.end());
      auto [blk, page] = allocate(ref.pages, true);
      program_node(blk, page, ByteSpan(node).first(node.size()));
      // Move the node: same id, new location.
      auto &src = blocks_[ref.block];
      src.valid_pages -= ref.pages;
      src.nodes.erase(std::find(src.nodes.begin(), src.nodes.end(), id));
      ref.block = blk;
      ref.page = page;
      blocks_[blk].nodes.push_back(id);
      blocks_[blk].valid_pages += ref.pages;
      if (ref.kind == NodeKind::Dirent && ref.target != 0) ++dirent_copies_[{ref.inode, ref.name_hash}];
      relist(blk);
      ++gc_stats_.nodes_copied;
    }
    erase_to_free(*victim);
    return true;
  }

  Jffs2Config jcfg_;
  std::mt19937_64 rng_;
  std::vector<BlockInfo> blocks_;
  std::deque<std::uint32_t> free_;
  std::deque<std::uint32_t> pending_;
  std::optional<std::uint32_t> write_block_;
  std::unordered_map<std::uint32_t, NodeRef> nodes_;
  std::unordered_map<Ino, InodeInfo> inodes_;
  std::unordered_map<std::pair<Ino, std::uint64_t>, std::uint32_t, KeyHash> dirent_copies_;
  std::unordered_map<std::pair<Ino, std::uint64_t>, std::uint32_t, KeyHash> markers_;
  std::uint32_t next_node_id_ = 1;
  std::uint32_t next_version_ = 1;
  Ino next_ino_ = kRootIno + 1;
  std::size_t valid_node_count_ = 0;
  std::size_t corrupt_nodes_ = 0;
  bool format_pending_ = false;
  bool collecting_ = false;
  bool use_reserve_ = false;
  GcStats gc_stats_;

 public:
  std::size_t corrupt_nodes() const { return corrupt_nodes_; }
};

}  // namespace ffsarena
