#pragma once

// The uniform filesystem contract every flash filesystem model implements.
//
// FfsVolume owns path handling, argument checking and the metadata cache;
// concrete models implement the inode-level hooks. After every public
// operation the volume gets one background slot (GC, formatting), which is
// how cooperative background work interleaves with foreground I/O.

#include "ffsarena/codec.hpp"
#include "ffsarena/flash.hpp"
#include "ffsarena/fs_types.hpp"
#include "ffsarena/meta_cache.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ffsarena {

struct VolumeConfig {
  Codec codec = Codec::None;
  // CPU cost charged per raw byte (de)compressed by a non-identity codec.
  nanoseconds compress_cost_per_byte{0};
  bool meta_cache = true;
  std::size_t meta_cache_capacity = 4096;
};

inline constexpr std::size_t kMaxNameLen = 255;

// Splits an absolute path into components. "/" yields an empty list.
inline std::vector<std::string> split_path(std::string_view path) {
  if (path.empty() || path.front() != '/') throw FsError(FsErrc::InvalidPath, path);
  std::vector<std::string> parts;
  std::size_t i = 1;
  while (i <= path.size()) {
    auto j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    if (j > i) {
      auto part = path.substr(i, j - i);
      if (part == "." || part == ".." || part.size() > kMaxNameLen) throw FsError(FsErrc::InvalidPath, path);
      parts.emplace_back(part);
    }
    i = j + 1;
  }
  return parts;
}

inline std::string join_path(const std::vector<std::string> &parts, std::size_t n) {
  if (n == 0) return "/";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += "/" + parts[i];
  return s;
}

inline std::string child_path(std::string_view dir, std::string_view name) {
  std::string s(dir);
  if (s.empty() || s.back() != '/') s += '/';
  s += name;
  return s;
}

class FfsVolume {
 public:
  FfsVolume(Mtd mtd, VolumeConfig cfg)
      : mtd_(mtd), cfg_(cfg), cache_(cfg.meta_cache_capacity, cfg.meta_cache) {}
  virtual ~FfsVolume() = default;
  FfsVolume(const FfsVolume &) = delete;
  FfsVolume &operator=(const FfsVolume &) = delete;

  virtual std::string_view name() const = 0;

  // Creates an empty filesystem on the partition. The volume stays unmounted.
  virtual void format() = 0;

  void mount() {
    if (mounted_) throw FsError(FsErrc::AlreadyMounted, name());
    do_mount();
    mounted_ = true;
  }

  void unmount() {
    require_mounted();
    do_unmount();
    cache_.clear();
    mounted_ = false;
  }

  bool mounted() const { return mounted_; }

  void create_file(std::string_view path) { make(path, FileKind::File); }
  void mkdir(std::string_view path) { make(path, FileKind::Dir); }

  void write_file(std::string_view path, std::uint64_t offset, ByteSpan data) {
    require_mounted();
    auto [p, e] = resolve_existing(path);
    if (e.kind != FileKind::File) throw FsError(FsErrc::IsADirectory, path);
    fs_write(e.inode, offset, data);
    cache_.drop_attr(p);
    boundary();
  }

  Bytes read_file(std::string_view path) {
    require_mounted();
    auto [p, e] = resolve_existing(path);
    if (e.kind != FileKind::File) throw FsError(FsErrc::IsADirectory, path);
    auto out = fs_read(e.inode);
    boundary();
    return out;
  }

  void delete_file(std::string_view path) { remove(path, FileKind::File); }
  void rmdir(std::string_view path) { remove(path, FileKind::Dir); }

  std::vector<DirEntry> readdir(std::string_view path) {
    require_mounted();
    auto [p, e] = resolve_existing(path);
    if (e.kind != FileKind::Dir) throw FsError(FsErrc::NotADirectory, path);
    auto out = list_cached(p, e.inode);
    boundary();
    return out;
  }

  std::optional<FileAttr> lookup(std::string_view path) {
    require_mounted();
    auto parts = split_path(path);
    auto e = resolve(parts);
    std::optional<FileAttr> out;
    if (e) out = attr_cached(join_path(parts, parts.size()), *e);
    boundary();
    return out;
  }

  FileAttr stat(std::string_view path) {
    auto a = lookup(path);
    if (!a) throw FsError(FsErrc::NotFound, path);
    return *a;
  }

  // Makes buffered state durable. No-op for write-through models.
  virtual void sync() { require_mounted(); }

  // One unit of garbage collection. Throws NothingToCollect when idle.
  virtual void gc_step() = 0;
  bool try_gc_step() {
    try {
      gc_step();
      return true;
    } catch (const FsError &e) {
      if (e.code() != FsErrc::NothingToCollect) throw;
      return false;
    }
  }

  // Gauges.
  virtual std::uint64_t meta_ram_bytes() const = 0;
  virtual std::uint64_t used_flash_bytes() const = 0;
  // Erase blocks holding at least some invalid data awaiting reclamation.
  virtual std::uint64_t reclaimable_blocks() const = 0;
  // Space available to file data, before node overhead.
  virtual std::uint64_t capacity_bytes() const { return std::uint64_t{mtd_.blocks()} * mtd_.geometry().block_bytes(); }

  const Mtd &mtd() const { return mtd_; }
  FlashChip &chip() const { return mtd_.chip(); }
  const VolumeConfig &config() const { return cfg_; }
  MetaCache &cache() { return cache_; }

 protected:
  virtual void do_mount() = 0;
  virtual void do_unmount() = 0;

  virtual std::optional<DirEntry> fs_lookup(Ino dir, std::string_view name) = 0;
  virtual std::vector<DirEntry> fs_list(Ino dir) = 0;
  virtual FileAttr fs_getattr(Ino ino) = 0;
  virtual Ino fs_create(Ino dir, std::string_view name, FileKind kind) = 0;
  virtual void fs_remove(Ino dir, const DirEntry &entry) = 0;
  virtual void fs_write(Ino ino, std::uint64_t offset, ByteSpan data) = 0;
  virtual Bytes fs_read(Ino ino) = 0;
  // Background slot granted after every foreground operation.
  virtual void fs_background() {}

  void require_mounted() const {
    if (!mounted_) throw FsError(FsErrc::NotMounted, name());
  }

  Bytes pack(ByteSpan raw) {
    if (cfg_.codec != Codec::None) chip().charge_cpu(cfg_.compress_cost_per_byte * static_cast<std::int64_t>(raw.size()));
    return pack_container(cfg_.codec, raw);
  }
  Bytes unpack(ByteReader &r) {
    auto raw = unpack_container(r);
    if (cfg_.codec != Codec::None) chip().charge_cpu(cfg_.compress_cost_per_byte * static_cast<std::int64_t>(raw.size()));
    return raw;
  }

  Mtd mtd_;
  VolumeConfig cfg_;

 private:
  void boundary() { fs_background(); }

  std::optional<DirEntry> resolve(const std::vector<std::string> &parts) {
    DirEntry cur{"", FileKind::Dir, kRootIno};
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (cur.kind != FileKind::Dir) throw FsError(FsErrc::NotADirectory, join_path(parts, i));
      auto p = join_path(parts, i + 1);
      if (auto *c = cache_.find(p)) {
        ++cache_.hits;
        cur = DirEntry{parts[i], c->kind, c->inode};
        continue;
      }
      ++cache_.misses;
      auto next = fs_lookup(cur.inode, parts[i]);
      if (!next) return std::nullopt;
      cache_.put(p, next->inode, next->kind);
      cur = *next;
    }
    return cur;
  }

  std::pair<std::string, DirEntry> resolve_existing(std::string_view path) {
    auto parts = split_path(path);
    auto e = resolve(parts);
    if (!e) throw FsError(FsErrc::NotFound, path);
    return {join_path(parts, parts.size()), *e};
  }

  FileAttr attr_cached(const std::string &p, const DirEntry &e) {
    auto *c = cache_.find(p);
    if (c && c->attr) {
      ++cache_.hits;
      return *c->attr;
    }
    ++cache_.misses;
    auto a = fs_getattr(e.inode);
    if (auto *slot = cache_.put(p, e.inode, e.kind)) slot->attr = a;
    return a;
  }

  std::vector<DirEntry> list_cached(const std::string &p, Ino ino) {
    auto *c = cache_.find(p);
    if (c && c->children) {
      ++cache_.hits;
      return *c->children;
    }
    ++cache_.misses;
    auto list = fs_list(ino);
    std::sort(list.begin(), list.end(), [](const auto &a, const auto &b) { return a.name < b.name; });
    if (auto *slot = cache_.put(p, ino, FileKind::Dir)) slot->children = list;
    for (const auto &d : list) cache_.put(child_path(p, d.name), d.inode, d.kind);
    return list;
  }

  void make(std::string_view path, FileKind kind) {
    require_mounted();
    auto parts = split_path(path);
    if (parts.empty()) throw FsError(FsErrc::Exists, path);
    auto leaf = parts.back();
    parts.pop_back();
    auto parent = resolve(parts);
    if (!parent) throw FsError(FsErrc::NotFound, path);
    if (parent->kind != FileKind::Dir) throw FsError(FsErrc::NotADirectory, path);
    auto ppath = join_path(parts, parts.size());
    if (cache_.find(child_path(ppath, leaf)) || fs_lookup(parent->inode, leaf))
      throw FsError(FsErrc::Exists, path);
    fs_create(parent->inode, leaf, kind);
    cache_.drop_children(ppath);
    boundary();
  }

  void remove(std::string_view path, FileKind kind) {
    require_mounted();
    auto parts = split_path(path);
    if (parts.empty()) throw FsError(FsErrc::InvalidPath, "cannot remove root");
    auto leaf = parts.back();
    parts.pop_back();
    auto parent = resolve(parts);
    if (!parent) throw FsError(FsErrc::NotFound, path);
    if (parent->kind != FileKind::Dir) throw FsError(FsErrc::NotADirectory, path);
    auto ppath = join_path(parts, parts.size());
    auto p = child_path(ppath, leaf);
    std::optional<DirEntry> e;
    if (auto *c = cache_.find(p)) {
      ++cache_.hits;
      e = DirEntry{leaf, c->kind, c->inode};
    } else {
      ++cache_.misses;
      e = fs_lookup(parent->inode, leaf);
    }
    if (!e) throw FsError(FsErrc::NotFound, path);
    if (kind == FileKind::File && e->kind == FileKind::Dir) throw FsError(FsErrc::IsADirectory, path);
    if (kind == FileKind::Dir && e->kind != FileKind::Dir) throw FsError(FsErrc::NotADirectory, path);
    if (kind == FileKind::Dir && !list_cached(p, e->inode).empty()) throw FsError(FsErrc::NotEmpty, path);
    fs_remove(parent->inode, DirEntry{leaf, e->kind, e->inode});
    cache_.erase(p);
    cache_.drop_children(ppath);
    boundary();
  }

  MetaCache cache_;
  bool mounted_ = false;
};

}  // namespace ffsarena
