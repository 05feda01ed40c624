#pragma once

// Benchmark scenarios on the virtual clock.
//
// S1: build a rootfs image, flash it into a 100 MB partition, mount, ls -R
// twice, generate a tree, unmount.
// S2: erase, mkfs, mount, fill-and-delete warm-up, create a tree, unmount,
// mount, find a missing name, delete the tree, unmount.

#include "ffsarena/fs_ops.hpp"
#include "ffsarena/jffs2.hpp"
#include "ffsarena/treegen.hpp"
#include "ffsarena/ubifs.hpp"
#include "ffsarena/yaffs2.hpp"

#include <chrono>
#include <iomanip>
#include <memory>
#include <nlohmann/json.hpp>

namespace ffsarena {

inline constexpr std::string_view kToolVersion = "ffs-arena 0.1.0";

enum class FfsKind : std::uint8_t { Jffs2, Yaffs2, Ubifs };

inline constexpr FfsKind kAllFfs[] = {FfsKind::Jffs2, FfsKind::Yaffs2, FfsKind::Ubifs};

inline std::string_view to_string(FfsKind k) {
  switch (k) {
    case FfsKind::Jffs2: return "jffs2";
    case FfsKind::Yaffs2: return "yaffs2";
    case FfsKind::Ubifs: return "ubifs";
  }
  return "?";
}

inline std::optional<FfsKind> parse_ffs(std::string_view s) {
  for (auto k : kAllFfs)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline Codec default_codec(FfsKind k) {
  switch (k) {
    case FfsKind::Jffs2: return Codec::Deflate;
    case FfsKind::Ubifs: return Codec::LzFast;
    case FfsKind::Yaffs2: return Codec::None;
  }
  return Codec::None;
}

inline std::unique_ptr<FfsVolume> make_volume(FfsKind k, Mtd mtd, Codec codec) {
  switch (k) {
    case FfsKind::Jffs2: {
      Jffs2Config c;
      c.volume.codec = codec;
      return std::make_unique<Jffs2Volume>(mtd, c);
    }
    case FfsKind::Yaffs2: return std::make_unique<Yaffs2Volume>(mtd, Yaffs2Config{});
    case FfsKind::Ubifs: {
      UbifsConfig c;
      c.volume.codec = codec;
      return std::make_unique<UbifsVolume>(mtd, c);
    }
  }
  throw std::logic_error("unknown ffs");
}

// Rounds a target file count to files per directory for the S2 tree
// (63 directories at depth 5 with two subdirectories each).
inline std::uint64_t s2_files_per_dir(std::uint64_t files) {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(files) / 63.0));
}

inline TreeSpec s1_tree(std::uint64_t seed) {
  TreeSpec t;
  t.depth = 5;
  t.files_per_dir = Distribution::normal(4, 1);
  t.dirs_per_dir = Distribution::normal(3, 1);
  t.file_size = Distribution::normal(1024, 64);
  t.seed = seed;
  return t;
}

inline TreeSpec s2_tree(std::uint64_t files, std::uint64_t seed) {
  TreeSpec t;
  t.depth = 5;
  t.files_per_dir = Distribution::constant(static_cast<std::int64_t>(s2_files_per_dir(files)));
  t.dirs_per_dir = Distribution::constant(2);
  t.file_size = Distribution::constant(750);
  t.seed = seed;
  return t;
}

inline constexpr std::uint32_t kRootfsDirs = 213;
inline constexpr std::uint32_t kRootfsFiles = 1122;
inline constexpr std::uint64_t kRootfsMeanSize = 13 * 1024;
inline constexpr double kRootfsCompressibility = 0.6;

// A fixed rootfs-like tree: each directory hangs off a random earlier one,
// files land in random directories, sizes are log-normal scaled so the mean
// is exactly 13 KB.
inline TreeManifest rootfs_manifest(std::uint64_t seed) {
  std::mt19937_64 rng(mix64(seed ^ 0x726f6f7466730000ull));
  std::vector<std::uint32_t> parent(kRootfsDirs, 0);
  for (std::uint32_t d = 1; d < kRootfsDirs; ++d) parent[d] = static_cast<std::uint32_t>(rng() % d);
  std::vector<std::uint32_t> file_dir(kRootfsFiles);
  for (auto &f : file_dir) f = static_cast<std::uint32_t>(rng() % kRootfsDirs);
  std::normal_distribution<double> z(0.0, 1.2);
  std::vector<double> raw(kRootfsFiles);
  double sum = 0;
  for (auto &r : raw) sum += (r = std::exp(z(rng)));
  const double total = static_cast<double>(kRootfsMeanSize) * kRootfsFiles;
  std::vector<std::uint64_t> sizes(kRootfsFiles);
  std::uint64_t acc = 0;
  for (std::uint32_t i = 0; i < kRootfsFiles; ++i) acc += (sizes[i] = static_cast<std::uint64_t>(raw[i] * total / sum));
  sizes.back() += static_cast<std::uint64_t>(total) - acc;

  std::vector<std::vector<std::uint32_t>> subdirs(kRootfsDirs), files(kRootfsDirs);
  for (std::uint32_t d = 1; d < kRootfsDirs; ++d) subdirs[parent[d]].push_back(d);
  for (std::uint32_t f = 0; f < kRootfsFiles; ++f) files[file_dir[f]].push_back(f);

  TreeManifest m;
  m.entries.push_back({"/", FileKind::Dir, 0, 0});
  m.dirs = 1;
  std::vector<std::pair<std::uint32_t, std::string>> stack{{0, "/"}};
  while (!stack.empty()) {
    auto [d, path] = stack.back();
    stack.pop_back();
    const auto &sd = subdirs[d];
    std::vector<std::pair<std::uint32_t, std::string>> next;
    for (std::size_t k = 0; k < sd.size(); ++k) {
      auto p = child_path(path, numbered('d', k, sd.size()));
      m.entries.push_back({p, FileKind::Dir, 0, 0});
      ++m.dirs;
      next.emplace_back(sd[k], p);
    }
    const auto &fs = files[d];
    for (std::size_t k = 0; k < fs.size(); ++k) {
      auto p = child_path(path, numbered('f', k, fs.size()));
      m.entries.push_back({p, FileKind::File, sizes[fs[k]], mix64(seed + fs[k] + 1)});
      ++m.files;
      m.bytes += sizes[fs[k]];
    }
    for (auto it = next.rbegin(); it != next.rend(); ++it) stack.push_back(*it);
  }
  return m;
}

// Creates every manifest entry after the first (the existing root).
inline void build_tree(const TreeManifest &m, FfsVolume &vol, double compressibility) {
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    const auto &e = m.entries[i];
    if (e.kind == FileKind::Dir) {
      vol.mkdir(e.path);
    } else {
      vol.create_file(e.path);
      if (e.size > 0) vol.write_file(e.path, 0, gen_content(e.content_seed, e.size, compressibility));
    }
  }
}

struct ScenarioConfig {
  FfsKind ffs = FfsKind::Jffs2;
  std::optional<Codec> codec;  // default per filesystem
  std::uint32_t partition_mb = 100;
  std::optional<TreeSpec> tree;  // replaces the scenario's generated tree
  std::uint64_t files = 1000;    // S2 target file count
  std::uint64_t seed = 1;
  bool wallclock = false;

  Codec effective_codec() const {
    if (ffs == FfsKind::Yaffs2) return Codec::None;
    return codec.value_or(default_codec(ffs));
  }

  std::uint32_t partition_blocks(const FlashGeometry &g) const {
    return static_cast<std::uint32_t>(std::uint64_t{partition_mb} * 1024 * 1024 / g.block_bytes());
  }

  void validate() const {
    if (partition_mb == 0) throw ConfigError("partition size must be positive");
    if (partition_mb > 4096) throw ConfigError("partition larger than 4096 MB");
    if (tree && !(tree->compressibility >= 0 && tree->compressibility <= 1))
      throw ConfigError("compressibility must be in [0,1]");
  }
};

struct StepRecord {
  std::string step;
  std::int64_t duration_ns = 0;
  std::uint64_t reads = 0, writes = 0, erases = 0;
  std::uint64_t meta_ram_bytes = 0;
  std::uint64_t used_flash_bytes = 0;
  std::uint64_t image_bytes = 0;
  double wall_us = 0;
  double duration_us() const { return static_cast<double>(duration_ns) / 1000.0; }
};

struct BenchReport {
  std::string scenario;
  ScenarioConfig config;
  std::optional<double> axis_value;
  std::vector<StepRecord> steps;
  bool ok = true;
  std::string error;
  std::string version{kToolVersion};

  const StepRecord &step(std::string_view name) const {
    for (const auto &s : steps)
      if (s.step == name) return s;
    throw std::out_of_range("no step " + std::string(name));
  }
};

inline const std::vector<std::string> kS1Steps = {"build_image", "flash_image", "mount", "ls_r_1",
                                                  "ls_r_2",      "create_tree", "unmount"};
inline const std::vector<std::string> kS2Steps = {"erase",   "mkfs",  "mount",       "warmup",      "create_tree",
                                                  "unmount", "mount2", "find_missing", "delete_tree", "unmount2"};

namespace detail {

class StepClock {
 public:
  StepClock(BenchReport &r, bool wall) : r_(r), wall_(wall) {}

  template <typename F>
  void run(std::string name, FlashChip &chip, FfsVolume *vol, F &&body) {
    auto t0 = chip.elapsed();
    auto s0 = chip.stats();
    auto w0 = std::chrono::steady_clock::now();
    StepRecord rec;
    rec.step = std::move(name);
    auto finish = [&] {
      auto ds = chip.stats() - s0;
      rec.duration_ns = (chip.elapsed() - t0).count();
      rec.reads = ds.reads;
      rec.writes = ds.writes;
      rec.erases = ds.erases;
      if (vol) {
        rec.meta_ram_bytes = vol->meta_ram_bytes();
        rec.used_flash_bytes = vol->used_flash_bytes();
      }
      if (wall_) rec.wall_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - w0).count();
      r_.steps.push_back(rec);
    };
    try {
      body(rec);
    } catch (...) {
      finish();
      throw;
    }
    finish();
  }

 private:
  BenchReport &r_;
  bool wall_;
};

inline FlashChip make_chip(const ScenarioConfig &c) {
  FlashGeometry g;
  g.blocks_per_chip = std::max(g.blocks_per_chip, c.partition_blocks(g));
  return FlashChip(g);
}

// Pages belonging to the image: UBI blocks holding only an erase-counter
// header are left out, as ubiformat writes those itself.
inline std::uint64_t image_bytes(FfsKind k, const Mtd &mtd) {
  std::uint64_t pages = 0;
  for (std::uint32_t b = 0; b < mtd.blocks(); ++b) {
    std::uint64_t n = 0;
    bool only_first = true;
    for (std::uint32_t p = 0; p < mtd.ppb(); ++p) {
      if (mtd.is_erased(b, p)) continue;
      ++n;
      if (p != 0) only_first = false;
    }
    if (k == FfsKind::Ubifs && only_first) continue;
    pages += n;
  }
  return pages * mtd.page_size();
}

template <typename Body>
BenchReport guarded(BenchReport r, Body &&body) {
  try {
    body(r);
  } catch (const FsError &e) {
    r.ok = false;
    r.error = e.what();
  } catch (const FlashError &e) {
    r.ok = false;
    r.error = e.what();
  } catch (const DecodeError &e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

}  // namespace detail

inline BenchReport run_s1(const ScenarioConfig &cfg) {
  cfg.validate();
  BenchReport rep;
  rep.scenario = "s1";
  rep.config = cfg;
  return detail::guarded(std::move(rep), [&](BenchReport &r) {
    detail::StepClock clock(r, cfg.wallclock);
    const auto codec = cfg.effective_codec();
    auto chip = detail::make_chip(cfg);
    const auto part = chip.make_partition(0, cfg.partition_blocks(chip.geometry()));
    auto stage = detail::make_chip(cfg);
    const auto corpus = rootfs_manifest(cfg.seed);

    clock.run("build_image", stage, nullptr, [&](StepRecord &rec) {
      Mtd smtd(stage, part);
      auto sv = make_volume(cfg.ffs, smtd, codec);
      sv->format();
      sv->mount();
      build_tree(corpus, *sv, kRootfsCompressibility);
      // YAFFS2 images carry no checkpoint, so skip its unmount.
      if (cfg.ffs != FfsKind::Yaffs2) sv->unmount();
      rec.image_bytes = detail::image_bytes(cfg.ffs, smtd);
    });
    clock.run("flash_image", chip, nullptr, [&](StepRecord &rec) {
      chip.write_image_pages(stage, part, part);
      rec.image_bytes = r.steps.front().image_bytes;
    });
    auto vol = make_volume(cfg.ffs, Mtd(chip, part), codec);
    clock.run("mount", chip, vol.get(), [&](StepRecord &) { vol->mount(); });
    clock.run("ls_r_1", chip, vol.get(), [&](StepRecord &) { readdir_recursive(*vol); });
    clock.run("ls_r_2", chip, vol.get(), [&](StepRecord &) { readdir_recursive(*vol); });
    clock.run("create_tree", chip, vol.get(), [&](StepRecord &) {
      vol->mkdir("/tree");
      auto m = generate(cfg.tree.value_or(s1_tree(cfg.seed)), *vol, "/tree");
      if (m.incomplete) throw FsError(FsErrc::NoSpace, "tree generation");
    });
    clock.run("unmount", chip, vol.get(), [&](StepRecord &) { vol->unmount(); });
  });
}

// Writes one file of random data in 1 MiB appends until it reaches 95% of
// the volume's capacity or the volume is full, then deletes it.
inline void warm_up(FfsVolume &vol, std::uint64_t seed) {
  const std::uint64_t total = vol.capacity_bytes() * 95 / 100;
  constexpr std::uint64_t kChunk = 1 << 20;
  vol.create_file("/warmup");
  try {
    for (std::uint64_t off = 0, i = 0; off < total; off += kChunk, ++i) {
      auto n = std::min(kChunk, total - off);
      vol.write_file("/warmup", off, gen_content(mix64(seed ^ (i + 0x5741524dull)), n, 0.0));
    }
  } catch (const FsError &e) {
    if (e.code() != FsErrc::NoSpace) throw;
  }
  vol.delete_file("/warmup");
}

inline BenchReport run_s2(const ScenarioConfig &cfg) {
  cfg.validate();
  BenchReport rep;
  rep.scenario = "s2";
  rep.config = cfg;
  return detail::guarded(std::move(rep), [&](BenchReport &r) {
    detail::StepClock clock(r, cfg.wallclock);
    auto chip = detail::make_chip(cfg);
    const Mtd mtd(chip, chip.make_partition(0, cfg.partition_blocks(chip.geometry())));
    auto vol = make_volume(cfg.ffs, mtd, cfg.effective_codec());
    const auto spec = cfg.tree.value_or(s2_tree(cfg.files, cfg.seed));

    clock.run("erase", chip, nullptr, [&](StepRecord &) {
      for (std::uint32_t b = 0; b < mtd.blocks(); ++b)
        if (!mtd.is_bad(b)) mtd.erase(b);
    });
    clock.run("mkfs", chip, nullptr, [&](StepRecord &) { vol->format(); });
    clock.run("mount", chip, vol.get(), [&](StepRecord &) { vol->mount(); });
    clock.run("warmup", chip, vol.get(), [&](StepRecord &) { warm_up(*vol, cfg.seed); });
    clock.run("create_tree", chip, vol.get(), [&](StepRecord &) {
      vol->mkdir("/tree");
      auto m = generate(spec, *vol, "/tree");
      if (m.incomplete) throw FsError(FsErrc::NoSpace, "tree generation");
    });
    clock.run("unmount", chip, vol.get(), [&](StepRecord &) { vol->unmount(); });
    clock.run("mount2", chip, vol.get(), [&](StepRecord &) { vol->mount(); });
    clock.run("find_missing", chip, vol.get(), [&](StepRecord &) {
      if (find_missing(*vol, "/tree").matches != 0) throw std::logic_error("missing.target found");
    });
    clock.run("delete_tree", chip, vol.get(), [&](StepRecord &) { delete_tree(*vol, "/tree"); });
    clock.run("unmount2", chip, vol.get(), [&](StepRecord &) { vol->unmount(); });
  });
}

enum class SweepAxis : std::uint8_t { FileCount, PartitionSize };

inline std::optional<SweepAxis> parse_axis(std::string_view s) {
  if (s == "file_count" || s == "files") return SweepAxis::FileCount;
  if (s == "partition_size" || s == "partition") return SweepAxis::PartitionSize;
  return std::nullopt;
}

// One S2 run per (filesystem, value), in that order.
inline std::vector<BenchReport> sweep(const ScenarioConfig &base, const std::vector<FfsKind> &ffs, SweepAxis axis,
                                      const std::vector<std::uint64_t> &values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (ffs.empty()) throw ConfigError("sweep needs at least one filesystem");
  std::vector<BenchReport> out;
  for (auto k : ffs) {
    for (auto v : values) {
      auto c = base;
      c.ffs = k;
      if (axis == SweepAxis::FileCount) {
        c.files = v;
      } else {
        c.partition_mb = static_cast<std::uint32_t>(v);
      }
      auto r = run_s2(c);
      r.axis_value = static_cast<double>(v);
      out.push_back(std::move(r));
    }
  }
  return out;
}

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

// Least squares. A series with no spread in y fits perfectly when every
// residual is zero, so it reports R^2 = 1.
inline LinearFit linear_fit(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit needs >= 2 points");
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxx == 0 ? 0 : sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  const double scale = std::max(1.0, my * my * n);
  if (syy <= 1e-18 * scale) {
    f.r2 = ss_res <= 1e-18 * scale ? 1.0 : 0.0;
  } else {
    f.r2 = 1.0 - ss_res / syy;
  }
  return f;
}

// ---------------------------------------------------------------- emitting

struct Row {
  std::string ffs, codec, axis_value, step;
  double duration_us = 0;
  std::uint64_t reads = 0, writes = 0, erases = 0, meta_ram_bytes = 0, image_bytes = 0;
  std::optional<double> wall_us;
};

inline std::string format_number(double v) {
  std::ostringstream os;
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    os << static_cast<std::int64_t>(v);
  } else {
    os << std::fixed << std::setprecision(3) << v;
  }
  return os.str();
}

inline std::vector<Row> to_rows(const std::vector<BenchReport> &reports) {
  std::vector<Row> rows;
  for (const auto &r : reports)
    for (const auto &s : r.steps) {
      Row row;
      row.ffs = to_string(r.config.ffs);
      row.codec = to_string(r.config.effective_codec());
      row.axis_value = r.axis_value ? format_number(*r.axis_value) : "";
      row.step = s.step;
      row.duration_us = s.duration_us();
      row.reads = s.reads;
      row.writes = s.writes;
      row.erases = s.erases;
      row.meta_ram_bytes = s.meta_ram_bytes;
      row.image_bytes = s.image_bytes;
      if (r.config.wallclock) row.wall_us = s.wall_us;
      rows.push_back(std::move(row));
    }
  return rows;
}

inline const std::vector<std::string> kCsvColumns = {"ffs",    "codec",  "axis_value",     "step",       "duration_us",
                                                     "reads",  "writes", "erases", "meta_ram_bytes", "image_bytes"};

inline std::string emit_csv(const std::vector<BenchReport> &reports) {
  auto rows = to_rows(reports);
  bool wall = std::any_of(rows.begin(), rows.end(), [](const Row &r) { return r.wall_us.has_value(); });
  std::ostringstream os;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) os << (i ? "," : "") << kCsvColumns[i];
  if (wall) os << ",wall_us";
  os << "\n";
  for (const auto &r : rows) {
    os << r.ffs << ',' << r.codec << ',' << r.axis_value << ',' << r.step << ',' << format_number(r.duration_us) << ','
       << r.reads << ',' << r.writes << ',' << r.erases << ',' << r.meta_ram_bytes << ',' << r.image_bytes;
    if (wall) os << ',' << (r.wall_us ? format_number(*r.wall_us) : "");
    os << "\n";
  }
  return os.str();
}

inline nlohmann::ordered_json report_json(const BenchReport &r) {
  nlohmann::ordered_json j;
  j["version"] = r.version;
  j["scenario"] = r.scenario;
  j["ffs"] = to_string(r.config.ffs);
  j["codec"] = to_string(r.config.effective_codec());
  j["partition_mb"] = r.config.partition_mb;
  j["seed"] = r.config.seed;
  if (r.scenario == "s2") j["files"] = r.config.files;
  if (r.config.tree) j["tree"] = r.config.tree->to_config();
  j["axis_value"] = r.axis_value ? nlohmann::ordered_json(*r.axis_value) : nlohmann::ordered_json(nullptr);
  j["ok"] = r.ok;
  if (!r.ok) j["error"] = r.error;
  auto &steps = j["steps"] = nlohmann::ordered_json::array();
  for (const auto &s : r.steps) {
    nlohmann::ordered_json o;
    o["step"] = s.step;
    o["duration_us"] = s.duration_us();
    o["reads"] = s.reads;
    o["writes"] = s.writes;
    o["erases"] = s.erases;
    o["meta_ram_bytes"] = s.meta_ram_bytes;
    o["used_flash_bytes"] = s.used_flash_bytes;
    o["image_bytes"] = s.image_bytes;
    if (r.config.wallclock) o["wall_us"] = s.wall_us;
    steps.push_back(std::move(o));
  }
  return j;
}

struct FitRow {
  std::string ffs, step;
  LinearFit fit;
};

// Fits duration against axis value per (filesystem, step) over reports
// that carry an axis value.
inline std::vector<FitRow> fit_rows(const std::vector<Row> &rows) {
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::vector<double>>> series;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto &r : rows) {
    if (r.axis_value.empty()) continue;
    auto key = std::make_pair(r.ffs, r.step);
    if (!series.contains(key)) order.push_back(key);
    auto &s = series[key];
    s.first.push_back(std::stod(r.axis_value));
    s.second.push_back(r.duration_us);
  }
  std::vector<FitRow> out;
  for (const auto &k : order) {
    const auto &s = series[k];
    if (s.first.size() < 2) continue;
    out.push_back({k.first, k.second, linear_fit(s.first, s.second)});
  }
  return out;
}

inline std::string emit_json(const std::vector<BenchReport> &reports) {
  nlohmann::ordered_json j;
  j["version"] = kToolVersion;
  auto &rs = j["reports"] = nlohmann::ordered_json::array();
  for (const auto &r : reports) rs.push_back(report_json(r));
  auto &fits = j["fits"] = nlohmann::ordered_json::array();
  for (const auto &f : fit_rows(to_rows(reports))) {
    nlohmann::ordered_json o;
    o["ffs"] = f.ffs;
    o["step"] = f.step;
    o["slope"] = f.fit.slope;
    o["intercept"] = f.fit.intercept;
    o["r2"] = f.fit.r2;
    fits.push_back(std::move(o));
  }
  return j.dump(2) + "\n";
}

// Reads rows back from emit_csv output.
inline std::vector<Row> parse_csv(std::string_view text) {
  std::vector<Row> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) return rows;
  auto split = [](const std::string &l) {
    std::vector<std::string> f;
    std::size_t i = 0;
    while (i <= l.size()) {
      auto j = l.find(',', i);
      if (j == std::string::npos) j = l.size();
      f.push_back(l.substr(i, j - i));
      i = j + 1;
    }
    return f;
  };
  auto header = split(line);
  if (header.size() < kCsvColumns.size() ||
      !std::equal(kCsvColumns.begin(), kCsvColumns.end(), header.begin()))
    throw ConfigError("not a ffs-arena CSV report");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != header.size()) throw ConfigError("ragged CSV row: " + line);
    Row r;
    try {
      r.ffs = f[0];
      r.codec = f[1];
      r.axis_value = f[2];
      r.step = f[3];
      r.duration_us = std::stod(f[4]);
      r.reads = std::stoull(f[5]);
      r.writes = std::stoull(f[6]);
      r.erases = std::stoull(f[7]);
      r.meta_ram_bytes = std::stoull(f[8]);
      r.image_bytes = std::stoull(f[9]);
      if (f.size() > 10 && !f[10].empty()) r.wall_us = std::stod(f[10]);
    } catch (const std::logic_error &) {
      throw ConfigError("bad CSV row: " + line);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace ffsarena
