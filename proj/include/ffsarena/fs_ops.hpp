#pragma once

// Tree-wide operations built on the volume API: ls -R, find, rm -r.

#include "ffsarena/volume.hpp"

namespace ffsarena {

struct WalkStats {
  std::uint64_t dirs = 0;     // directories listed, including the start
  std::uint64_t entries = 0;  // entries seen across all listings
  std::uint64_t matches = 0;
};

// Lists every directory below `root`, depth first in name order.
template <typename Visit>
WalkStats walk_tree(FfsVolume &vol, std::string_view root, Visit &&visit) {
  WalkStats st;
  std::vector<std::string> stack{std::string(root)};
  while (!stack.empty()) {
    auto dir = std::move(stack.back());
    stack.pop_back();
    ++st.dirs;
    auto list = vol.readdir(dir);
    st.entries += list.size();
    for (auto it = list.rbegin(); it != list.rend(); ++it) {
      auto p = child_path(dir, it->name);
      if (it->kind == FileKind::Dir) stack.push_back(p);
    }
    for (const auto &e : list) visit(dir, e);
  }
  return st;
}

struct Listing {
  std::vector<std::pair<std::string, FileAttr>> entries;
  WalkStats stats;
};

// ls -R: every entry below `root` with its attributes, one stat per entry.
inline Listing readdir_recursive(FfsVolume &vol, std::string_view root = "/") {
  Listing out;
  out.stats = walk_tree(vol, root, [&](std::string_view dir, const DirEntry &e) {
    auto p = child_path(dir, e.name);
    out.entries.emplace_back(p, vol.stat(p));
  });
  return out;
}

// Searches the whole tree for `name`; never stops early.
inline WalkStats find_name(FfsVolume &vol, std::string_view name, std::string_view root = "/") {
  std::uint64_t hits = 0;
  auto st = walk_tree(vol, root, [&](std::string_view, const DirEntry &e) {
    if (e.name == name) ++hits;
  });
  st.matches = hits;
  return st;
}

inline WalkStats find_missing(FfsVolume &vol, std::string_view root = "/") {
  return find_name(vol, "missing.target", root);
}

// Removes everything below `root`, children before parents. The root
// itself is removed too unless it is "/".
inline std::uint64_t delete_tree(FfsVolume &vol, std::string_view root = "/") {
  std::uint64_t removed = 0;
  auto rec = [&](auto &self, const std::string &dir) -> void {
    for (const auto &e : vol.readdir(dir)) {
      auto p = child_path(dir, e.name);
      if (e.kind == FileKind::Dir) {
        self(self, p);
        vol.rmdir(p);
      } else {
        vol.delete_file(p);
      }
      ++removed;
    }
  };
  rec(rec, std::string(root));
  if (root != "/") {
    vol.rmdir(root);
    ++removed;
  }
  return removed;
}

}  // namespace ffsarena
