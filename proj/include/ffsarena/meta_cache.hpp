#pragma once

#include "ffsarena/fs_types.hpp"

#include <list>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ffsarena {

// Bounded LRU of resolved path metadata, standing in for the dentry/inode
// caches above the filesystem. A hit costs no flash operation.
class MetaCache {
 public:
  struct Entry {
    Ino inode = 0;
    FileKind kind = FileKind::File;
    std::optional<FileAttr> attr;
    std::optional<std::vector<DirEntry>> children;
  };

  explicit MetaCache(std::size_t capacity = 4096, bool enabled = true)
      : capacity_(capacity), enabled_(enabled) {}

  bool enabled() const { return enabled_ && capacity_ > 0; }
  void set_enabled(bool on) {
    enabled_ = on;
    clear();
  }

  Entry *find(const std::string &path) {
    if (!enabled()) return nullptr;
    auto it = map_.find(path);
    if (it == map_.end()) return nullptr;
    lru_.splice(lru_.begin(), lru_, it->second.pos);
    return &it->second.entry;
  }

  // Returns nullptr when the cache is disabled.
  Entry *put(const std::string &path, Ino ino, FileKind kind) {
    if (!enabled()) return nullptr;
    auto it = map_.find(path);
    if (it != map_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.pos);
      if (it->second.entry.inode != ino) it->second.entry = Entry{ino, kind, {}, {}};
      return &it->second.entry;
    }
    lru_.push_front(path);
    auto &slot = map_[path];
    slot.entry = Entry{ino, kind, {}, {}};
    slot.pos = lru_.begin();
    while (map_.size() > capacity_) {
      map_.erase(lru_.back());
      lru_.pop_back();
    }
    return find(path);
  }

  void erase(const std::string &path) {
    auto it = map_.find(path);
    if (it == map_.end()) return;
    lru_.erase(it->second.pos);
    map_.erase(it);
  }

  void drop_children(const std::string &path) {
    auto it = map_.find(path);
    if (it != map_.end()) it->second.entry.children.reset();
  }

  void drop_attr(const std::string &path) {
    auto it = map_.find(path);
    if (it != map_.end()) it->second.entry.attr.reset();
  }

  void clear() {
    map_.clear();
    lru_.clear();
  }

  std::size_t size() const { return map_.size(); }
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;

 private:
  struct Slot {
    Entry entry;
    std::list<std::string>::iterator pos;
  };
  std::size_t capacity_;
  bool enabled_;
  std::unordered_map<std::string, Slot> map_;
  std::list<std::string> lru_;
};

}  // namespace ffsarena
