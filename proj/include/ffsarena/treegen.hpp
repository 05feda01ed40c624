#pragma once

// Parametric file-tree generator.
//
// Every directory at level < depth gets sample(dirs_per_dir) subdirectories,
// and every directory gets sample(files_per_dir) files of sample(file_size)
// bytes. The root is level 0. Each directory draws from its own generator,
// seeded from (seed, path), so a subtree comes out the same whatever order
// it is built in.

#include "ffsarena/volume.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <variant>

namespace ffsarena {

struct InvalidParams : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Constant {
  std::int64_t v = 0;
};
struct Uniform {
  std::int64_t lo = 0, hi = 0;
};
struct Normal {
  double mean = 0, stddev = 0;
};

class Distribution {
 public:
  Distribution() = default;
  Distribution(Constant c) : d_(c) {}
  Distribution(Uniform u) : d_(u) {
    if (u.hi < u.lo) throw InvalidParams("uniform: hi < lo");
  }
  Distribution(Normal n) : d_(n) {
    if (!(n.stddev >= 0)) throw InvalidParams("norm: stddev < 0");
  }

  static Distribution constant(std::int64_t v) { return Constant{v}; }
  static Distribution uniform(std::int64_t lo, std::int64_t hi) { return Uniform{lo, hi}; }
  static Distribution normal(double mean, double stddev) { return Normal{mean, stddev}; }

  // Rounded to the nearest integer and clamped at zero.
  std::uint64_t sample(std::mt19937_64 &rng) const {
    double x = 0;
    if (auto *c = std::get_if<Constant>(&d_)) {
      x = static_cast<double>(c->v);
    } else if (auto *u = std::get_if<Uniform>(&d_)) {
      auto span = static_cast<std::uint64_t>(u->hi - u->lo) + 1;
      x = static_cast<double>(u->lo + static_cast<std::int64_t>(span == 0 ? rng() : rng() % span));
    } else {
      const auto &n = std::get<Normal>(d_);
      x = n.mean + n.stddev * box_muller(rng);
    }
    x = std::round(x);
    return x <= 0 ? 0 : static_cast<std::uint64_t>(x);
  }

  // Expected value before clamping.
  double mean() const {
    if (auto *c = std::get_if<Constant>(&d_)) return static_cast<double>(c->v);
    if (auto *u = std::get_if<Uniform>(&d_)) return (static_cast<double>(u->lo) + static_cast<double>(u->hi)) / 2;
    return std::get<Normal>(d_).mean;
  }

  std::string to_string() const {
    std::ostringstream os;
    if (auto *c = std::get_if<Constant>(&d_)) {
      os << "const(" << c->v << ")";
    } else if (auto *u = std::get_if<Uniform>(&d_)) {
      os << "uniform(" << u->lo << "," << u->hi << ")";
    } else {
      const auto &n = std::get<Normal>(d_);
      os << "norm(" << n.mean << "," << n.stddev << ")";
    }
    return os.str();
  }

  // Accepts const(v), uniform(lo,hi) and norm(mean,stddev).
  static Distribution parse(std::string_view text) {
    std::string s;
    for (char ch : text)
      if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    auto open = s.find('(');
    if (open == std::string::npos || s.back() != ')') throw ConfigError("bad distribution: " + std::string(text));
    auto fn = s.substr(0, open);
    auto args = split_args(s.substr(open + 1, s.size() - open - 2));
    if (fn == "const" && args.size() == 1) return constant(parse_int(args[0]));
    if (fn == "uniform" && args.size() == 2) return uniform(parse_int(args[0]), parse_int(args[1]));
    if (fn == "norm" && args.size() == 2) return normal(parse_double(args[0]), parse_double(args[1]));
    throw ConfigError("bad distribution: " + std::string(text));
  }

  friend bool operator==(const Distribution &a, const Distribution &b) { return a.to_string() == b.to_string(); }

 private:
  // Box-Muller, first variate only, so each sample consumes two draws.
  static double box_muller(std::mt19937_64 &rng) {
    constexpr double k = 1.0 / 9007199254740992.0;  // 2^-53
    double u1 = (static_cast<double>(rng() >> 11) + 1.0) * k;
    double u2 = static_cast<double>(rng() >> 11) * k;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  static std::vector<std::string> split_args(const std::string &s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i <= s.size()) {
      auto j = s.find(',', i);
      if (j == std::string::npos) j = s.size();
      out.push_back(s.substr(i, j - i));
      i = j + 1;
    }
    return out;
  }
  static std::int64_t parse_int(const std::string &s) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ConfigError("bad integer: " + s);
    return v;
  }
  static double parse_double(const std::string &s) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ConfigError("bad number: " + s);
    return v;
  }

  std::variant<Constant, Uniform, Normal> d_{Constant{0}};
};

struct TreeSpec {
  Distribution files_per_dir = Distribution::constant(1);  // A
  Distribution dirs_per_dir = Distribution::constant(1);   // B
  Distribution file_size = Distribution::constant(1024);   // C, bytes
  std::uint32_t depth = 0;                                 // D
  std::uint64_t seed = 1;
  double compressibility = 0.5;

  std::string to_config() const {
    std::ostringstream os;
    os << "depth = " << depth << "\n"
       << "files_per_dir = " << files_per_dir.to_string() << "\n"
       << "dirs_per_dir = " << dirs_per_dir.to_string() << "\n"
       << "file_size = " << file_size.to_string() << "\n"
       << "seed = " << seed << "\n"
       << "compressibility = " << compressibility << "\n";
    return os.str();
  }

  // "key = value" lines; '#' starts a comment. Unset keys keep defaults.
  static TreeSpec parse(std::string_view text) {
    TreeSpec t;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      auto eq = line.find('=');
      auto key = trim(line.substr(0, eq));
      if (key.empty() && eq == std::string::npos) continue;
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      auto val = trim(line.substr(eq + 1));
      try {
        if (key == "depth") {
          t.depth = static_cast<std::uint32_t>(std::stoul(val));
        } else if (key == "files_per_dir") {
          t.files_per_dir = Distribution::parse(val);
        } else if (key == "dirs_per_dir") {
          t.dirs_per_dir = Distribution::parse(val);
        } else if (key == "file_size") {
          t.file_size = Distribution::parse(val);
        } else if (key == "seed") {
          t.seed = std::stoull(val);
        } else if (key == "compressibility") {
          t.compressibility = std::stod(val);
          if (!(t.compressibility >= 0 && t.compressibility <= 1))
            throw ConfigError("compressibility must be in [0,1]");
        } else {
          throw ConfigError("unknown key '" + key + "'");
        }
      } catch (const std::logic_error &e) {
        throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    return t;
  }

  static TreeSpec load(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

 private:
  static std::string trim(std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
};

struct ManifestEntry {
  std::string path;
  FileKind kind = FileKind::File;
  std::uint64_t size = 0;
  std::uint64_t content_seed = 0;
  friend bool operator==(const ManifestEntry &, const ManifestEntry &) = default;
};

struct TreeManifest {
  std::vector<ManifestEntry> entries;  // parents before children; root first
  std::uint64_t dirs = 0;              // includes the root
  std::uint64_t files = 0;
  std::uint64_t bytes = 0;
  bool incomplete = false;
  friend bool operator==(const TreeManifest &, const TreeManifest &) = default;
};

inline constexpr std::string_view kMissingName = "missing.target";

inline std::string numbered(char prefix, std::uint64_t k, std::uint64_t count) {
  auto width = std::max<std::size_t>(3, std::to_string(count == 0 ? 0 : count - 1).size());
  auto n = std::to_string(k);
  return std::string(1, prefix) + std::string(width - std::min(width, n.size()), '0') + n;
}

// Deterministic file content. Each 64-byte run is either a slice of a fixed
// text dictionary (with probability `compressibility`) or random bytes. A
// run's kind is decided by comparing one fixed draw against the threshold,
// so raising compressibility only turns random runs into text.
inline Bytes gen_content(std::uint64_t content_seed, std::size_t size, double compressibility) {
  static constexpr std::string_view kDict =
      "the flash block holds pages of data and each page has a spare area for tags. "
      "an erase resets every bit of a block to one, a write can only clear bits. "
      "the file system keeps an index of nodes, a journal of recent changes and a "
      "table of free space, so that a mount can find the latest version of a file.\n";
  Bytes out;
  out.reserve(size);
  constexpr std::size_t kRun = 64;
  for (std::size_t run = 0; out.size() < size; ++run) {
    std::mt19937_64 rng(mix64(content_seed ^ mix64(run + 1)));
    double u = static_cast<double>(rng() >> 11) / 9007199254740992.0;
    std::size_t n = std::min(kRun, size - out.size());
    if (u < compressibility) {
      auto off = rng() % kDict.size();
      for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(kDict[(off + i) % kDict.size()]));
    } else {
      for (std::size_t i = 0; i < n; i += 8) {
        auto r = rng();
        for (std::size_t j = 0; j < 8 && i + j < n; ++j) out.push_back(static_cast<std::uint8_t>(r >> (8 * j)));
      }
    }
  }
  return out;
}

inline std::mt19937_64 node_rng(std::uint64_t seed, std::string_view path) {
  return std::mt19937_64(mix64(seed ^ mix64(fnv1a64(path))));
}

// Builds the manifest without touching any volume.
inline TreeManifest plan_tree(const TreeSpec &spec, std::string_view root = "/") {
  TreeManifest m;
  m.entries.push_back({std::string(root), FileKind::Dir, 0, 0});
  m.dirs = 1;
  struct Pending {
    std::string path;
    std::uint32_t level;
  };
  std::vector<Pending> stack{{std::string(root), 0}};
  while (!stack.empty()) {
    auto [path, level] = stack.back();
    stack.pop_back();
    auto rng = node_rng(spec.seed, path);
    std::uint64_t nd = level < spec.depth ? spec.dirs_per_dir.sample(rng) : 0;
    std::uint64_t nf = spec.files_per_dir.sample(rng);
    std::vector<Pending> subdirs;
    for (std::uint64_t k = 0; k < nd; ++k) {
      auto p = child_path(path, numbered('d', k, nd));
      m.entries.push_back({p, FileKind::Dir, 0, 0});
      ++m.dirs;
      subdirs.push_back({p, level + 1});
    }
    for (std::uint64_t k = 0; k < nf; ++k) {
      auto p = child_path(path, numbered('f', k, nf));
      auto size = spec.file_size.sample(rng);
      auto cs = rng();
      m.entries.push_back({p, FileKind::File, size, cs});
      ++m.files;
      m.bytes += size;
    }
    for (auto it = subdirs.rbegin(); it != subdirs.rend(); ++it) stack.push_back(*it);
  }
  return m;
}

// Creates the planned tree under an existing directory. On NoSpace the
// manifest is cut at the first entry that did not complete.
inline TreeManifest generate(const TreeSpec &spec, FfsVolume &vol, std::string_view root = "/") {
  auto m = plan_tree(spec, root);
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    const auto &e = m.entries[i];
    try {
      if (e.kind == FileKind::Dir) {
        vol.mkdir(e.path);
      } else {
        vol.create_file(e.path);
        if (e.size > 0) vol.write_file(e.path, 0, gen_content(e.content_seed, e.size, spec.compressibility));
      }
    } catch (const FsError &err) {
      if (err.code() != FsErrc::NoSpace) throw;
      m.entries.resize(i);
      m.incomplete = true;
      m.dirs = m.files = m.bytes = 0;
      for (const auto &x : m.entries) {
        if (x.kind == FileKind::Dir) {
          ++m.dirs;
        } else {
          ++m.files;
          m.bytes += x.size;
        }
      }
      break;
    }
  }
  return m;
}

}  // namespace ffsarena
