#pragma once

// In-memory reference filesystem and an op-log checker that replays the same
// log against it and a flash volume, comparing every observable result.

#include "ffsarena/treegen.hpp"
#include "ffsarena/volume.hpp"

#include <map>
#include <memory>

namespace ffsarena {

class RefModel {
 public:
  RefModel() : root_(std::make_unique<Node>()) { root_->kind = FileKind::Dir; }

  void create_file(std::string_view path) { make(path, FileKind::File); }
  void mkdir(std::string_view path) { make(path, FileKind::Dir); }

  void write_file(std::string_view path, std::uint64_t offset, ByteSpan data) {
    auto &n = existing(path);
    if (n.kind != FileKind::File) throw FsError(FsErrc::IsADirectory, path);
    if (n.data.size() < offset + data.size()) n.data.resize(offset + data.size(), 0);
    std::copy(data.begin(), data.end(), n.data.begin() + static_cast<std::ptrdiff_t>(offset));
  }

  Bytes read_file(std::string_view path) {
    auto &n = existing(path);
    if (n.kind != FileKind::File) throw FsError(FsErrc::IsADirectory, path);
    return n.data;
  }

  void delete_file(std::string_view path) { remove(path, FileKind::File); }
  void rmdir(std::string_view path) { remove(path, FileKind::Dir); }

  std::vector<DirEntry> readdir(std::string_view path) {
    auto &n = existing(path);
    if (n.kind != FileKind::Dir) throw FsError(FsErrc::NotADirectory, path);
    std::vector<DirEntry> out;
    for (const auto &[name, c] : n.children) out.push_back(DirEntry{name, c->kind, 0});
    return out;
  }

  FileAttr stat(std::string_view path) {
    auto &n = existing(path);
    return FileAttr{n.kind, n.kind == FileKind::File ? n.data.size() : 0, 0};
  }

  bool exists(std::string_view path) {
    auto parts = split_path(path);
    try {
      return resolve(parts) != nullptr;
    } catch (const FsError &) {
      return false;
    }
  }

 private:
  struct Node {
    FileKind kind = FileKind::File;
    Bytes data;
    std::map<std::string, std::unique_ptr<Node>, std::less<>> children;
  };

  Node *resolve(const std::vector<std::string> &parts) {
    Node *cur = root_.get();
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (cur->kind != FileKind::Dir) throw FsError(FsErrc::NotADirectory, join_path(parts, i));
      auto it = cur->children.find(parts[i]);
      if (it == cur->children.end()) return nullptr;
      cur = it->second.get();
    }
    return cur;
  }

  Node &existing(std::string_view path) {
    auto *n = resolve(split_path(path));
    if (!n) throw FsError(FsErrc::NotFound, path);
    return *n;
  }

  Node &parent_of(std::string_view path, std::vector<std::string> &parts) {
    parts = split_path(path);
    if (parts.empty()) throw FsError(FsErrc::InvalidPath, path);
    auto leaf = parts.back();
    parts.pop_back();
    auto *p = resolve(parts);
    if (!p) throw FsError(FsErrc::NotFound, path);
    if (p->kind != FileKind::Dir) throw FsError(FsErrc::NotADirectory, path);
    parts.push_back(leaf);
    return *p;
  }

  void make(std::string_view path, FileKind kind) {
    if (split_path(path).empty()) throw FsError(FsErrc::Exists, path);
    std::vector<std::string> parts;
    auto &p = parent_of(path, parts);
    if (p.children.contains(parts.back())) throw FsError(FsErrc::Exists, path);
    auto n = std::make_unique<Node>();
    n->kind = kind;
    p.children.emplace(parts.back(), std::move(n));
  }

  void remove(std::string_view path, FileKind kind) {
    if (split_path(path).empty()) throw FsError(FsErrc::InvalidPath, path);
    std::vector<std::string> parts;
    auto &p = parent_of(path, parts);
    auto it = p.children.find(parts.back());
    if (it == p.children.end()) throw FsError(FsErrc::NotFound, path);
    auto &n = *it->second;
    if (kind == FileKind::File && n.kind == FileKind::Dir) throw FsError(FsErrc::IsADirectory, path);
    if (kind == FileKind::Dir && n.kind != FileKind::Dir) throw FsError(FsErrc::NotADirectory, path);
    if (kind == FileKind::Dir && !n.children.empty()) throw FsError(FsErrc::NotEmpty, path);
    p.children.erase(it);
  }

  std::unique_ptr<Node> root_;
};

enum class OpKind : std::uint8_t { Create, Mkdir, Write, Read, Delete, Rmdir, Readdir, Stat, Remount, Gc };

inline std::string_view to_string(OpKind k) {
  switch (k) {
    case OpKind::Create: return "create";
    case OpKind::Mkdir: return "mkdir";
    case OpKind::Write: return "write";
    case OpKind::Read: return "read";
    case OpKind::Delete: return "delete";
    case OpKind::Rmdir: return "rmdir";
    case OpKind::Readdir: return "readdir";
    case OpKind::Stat: return "stat";
    case OpKind::Remount: return "remount";
    case OpKind::Gc: return "gc";
  }
  return "?";
}

struct Op {
  OpKind kind = OpKind::Stat;
  std::string path;
  std::uint64_t offset = 0;
  std::uint32_t len = 0;
  std::uint64_t data_seed = 0;
};

inline Bytes op_data(const Op &op) { return gen_content(op.data_seed, op.len, 0.5); }

struct OpLogParams {
  std::uint64_t seed = 1;
  std::size_t ops = 1000;
  std::size_t remounts = 0;
  std::size_t gc_every = 0;  // 0 disables forced GC
  std::uint32_t max_write = 8192;
  std::uint64_t max_file = 64 * 1024;
  std::uint32_t max_depth = 4;
};

// Random op log. Most ops target paths that exist in a shadow model; a few
// are deliberately wrong so error results get compared too. Remount and GC
// entries are extra and not counted in `ops`.
inline std::vector<Op> make_oplog(const OpLogParams &prm) {
  std::mt19937_64 rng(mix64(prm.seed));
  RefModel shadow;
  std::vector<std::string> dirs{"/"}, files;
  std::vector<std::uint64_t> sizes;
  std::uint64_t counter = 0;
  std::vector<Op> log;
  auto pick = [&](auto &v) -> std::size_t { return static_cast<std::size_t>(rng() % v.size()); };
  auto depth = [](const std::string &p) { return static_cast<std::uint32_t>(std::count(p.begin(), p.end(), '/')); };
  auto bogus = [&]() {
    switch (rng() % 3) {
      case 0: return child_path(dirs[pick(dirs)], "nope" + std::to_string(rng() % 100));
      case 1: return files.empty() ? std::string("/x/y") : child_path(files[pick(files)], "under-file");
      default: return std::string("/missing/deeper");
    }
  };
  std::size_t next_remount = prm.remounts ? prm.ops / (prm.remounts + 1) : ~std::size_t{0};
  std::size_t remounts_done = 0;
  for (std::size_t i = 0; i < prm.ops; ++i) {
    if (i == next_remount && remounts_done < prm.remounts) {
      log.push_back(Op{OpKind::Remount, "", 0, 0, 0});
      ++remounts_done;
      next_remount = prm.ops * (remounts_done + 1) / (prm.remounts + 1);
    }
    if (prm.gc_every && i > 0 && i % prm.gc_every == 0) log.push_back(Op{OpKind::Gc, "", 0, 0, 0});
    Op op;
    bool wrong = rng() % 20 == 0;
    auto r = rng() % 100;
    if (r < 20) {
      op.kind = OpKind::Create;
    } else if (r < 26) {
      op.kind = OpKind::Mkdir;
    } else if (r < 50) {
      op.kind = OpKind::Write;
    } else if (r < 64) {
      op.kind = OpKind::Read;
    } else if (r < 76) {
      op.kind = OpKind::Delete;
    } else if (r < 80) {
      op.kind = OpKind::Rmdir;
    } else if (r < 90) {
      op.kind = OpKind::Readdir;
    } else {
      op.kind = OpKind::Stat;
    }
    switch (op.kind) {
      case OpKind::Create:
      case OpKind::Mkdir: {
        auto parent = dirs[pick(dirs)];
        if (depth(parent) >= prm.max_depth && parent != "/") parent = "/";
        op.path = wrong ? bogus() : child_path(parent, (op.kind == OpKind::Mkdir ? "d" : "f") + std::to_string(counter++));
        break;
      }
      case OpKind::Write:
      case OpKind::Read:
      case OpKind::Delete:
        if (files.empty() || wrong) {
          op.path = bogus();
        } else {
          auto k = pick(files);
          op.path = files[k];
          if (op.kind == OpKind::Write) {
            auto room = prm.max_file > sizes[k] ? prm.max_file - sizes[k] : 0;
            op.offset = sizes[k] == 0 ? 0 : rng() % (sizes[k] + 1);
            op.len = static_cast<std::uint32_t>(std::min<std::uint64_t>(rng() % (prm.max_write + 1), room + (sizes[k] - op.offset)));
            op.data_seed = rng();
          }
        }
        break;
      case OpKind::Rmdir:
        op.path = wrong || dirs.size() == 1 ? bogus() : dirs[1 + rng() % (dirs.size() - 1)];
        break;
      case OpKind::Readdir:
        op.path = wrong ? bogus() : dirs[pick(dirs)];
        break;
      default:
        if (wrong) {
          op.path = bogus();
        } else if (!files.empty() && rng() % 2) {
          op.path = files[pick(files)];
        } else {
          op.path = dirs[pick(dirs)];
        }
        break;
    }
    log.push_back(op);
    // Track what exists so later ops can target it.
    try {
      switch (op.kind) {
        case OpKind::Create:
          shadow.create_file(op.path);
          files.push_back(op.path);
          sizes.push_back(0);
          break;
        case OpKind::Mkdir:
          shadow.mkdir(op.path);
          dirs.push_back(op.path);
          break;
        case OpKind::Write: {
          shadow.write_file(op.path, op.offset, op_data(op));
          auto k = static_cast<std::size_t>(std::find(files.begin(), files.end(), op.path) - files.begin());
          sizes[k] = std::max<std::uint64_t>(sizes[k], op.offset + op.len);
          break;
        }
        case OpKind::Delete: {
          shadow.delete_file(op.path);
          auto k = static_cast<std::size_t>(std::find(files.begin(), files.end(), op.path) - files.begin());
          files.erase(files.begin() + static_cast<std::ptrdiff_t>(k));
          sizes.erase(sizes.begin() + static_cast<std::ptrdiff_t>(k));
          break;
        }
        case OpKind::Rmdir:
          shadow.rmdir(op.path);
          dirs.erase(std::find(dirs.begin(), dirs.end(), op.path));
          break;
        default: break;
      }
    } catch (const FsError &) {
    }
  }
  return log;
}

struct Verdict {
  bool equal = true;
  std::size_t ops_checked = 0;
  std::size_t diverged_at = 0;
  std::string detail;
  explicit operator bool() const { return equal; }
};

// Replays `log` against a fresh reference model and `vol`, which must be
// mounted and empty.
inline Verdict reference_model_check(const std::vector<Op> &log, FfsVolume &vol) {
  RefModel ref;
  Verdict v;
  auto describe = [](const Op &op) { return std::string(to_string(op.kind)) + " " + op.path; };
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto &op = log[i];
    if (op.kind == OpKind::Remount) {
      vol.unmount();
      vol.mount();
      continue;
    }
    if (op.kind == OpKind::Gc) {
      vol.try_gc_step();
      continue;
    }
    std::string a, b;
    auto run = [&](auto &fs, std::string &out) {
      try {
        switch (op.kind) {
          case OpKind::Create: fs.create_file(op.path); break;
          case OpKind::Mkdir: fs.mkdir(op.path); break;
          case OpKind::Write: fs.write_file(op.path, op.offset, op_data(op)); break;
          case OpKind::Read: {
            auto d = fs.read_file(op.path);
            out = "len=" + std::to_string(d.size()) + " crc=" + std::to_string(crc32(d));
            break;
          }
          case OpKind::Delete: fs.delete_file(op.path); break;
          case OpKind::Rmdir: fs.rmdir(op.path); break;
          case OpKind::Readdir:
            for (const auto &e : fs.readdir(op.path))
              out += e.name + (e.kind == FileKind::Dir ? "/" : "") + " ";
            break;
          case OpKind::Stat: {
            auto s = fs.stat(op.path);
            out = (s.kind == FileKind::Dir ? "dir " : "file ") + std::to_string(s.size);
            break;
          }
          default: break;
        }
        out = "ok " + out;
      } catch (const FsError &e) {
        out = std::string("err ") + to_string(e.code());
      }
    };
    run(ref, a);
    run(vol, b);
    ++v.ops_checked;
    if (a != b) {
      v.equal = false;
      v.diverged_at = i;
      v.detail = describe(op) + ": model '" + a + "' volume '" + b + "'";
      return v;
    }
  }
  return v;
}

}  // namespace ffsarena
