// ffs-arena: command-line front end for the flash filesystem benchmarks.

#include "ffsarena/ffsarena.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace ffsarena;

namespace {

constexpr int kExitScenario = 1;
constexpr int kExitConfig = 2;

struct Options {
  std::string ffs = "jffs2";
  std::string codec;
  std::uint32_t partition_mb = 100;
  std::string tree_file;
  std::uint64_t seed = 1;
  std::uint64_t files = 1000;
  std::string out;
  std::string format = "csv";
  bool wallclock = false;
};

void add_common(CLI::App *cmd, Options &o, bool allow_all) {
  cmd->add_option("--ffs", o.ffs, allow_all ? "jffs2, yaffs2, ubifs or all" : "jffs2, yaffs2 or ubifs");
  cmd->add_option("--codec", o.codec, "none, lzfast, deflate or favorfast (default per filesystem)");
  cmd->add_option("--partition-mb", o.partition_mb, "partition size in MiB")->check(CLI::Range(1u, 4096u));
  cmd->add_option("--seed", o.seed, "scenario seed");
  cmd->add_option("--out", o.out, "output file (default stdout)");
}

std::vector<FfsKind> parse_ffs_list(const std::string &s, bool allow_all) {
  if (allow_all && s == "all") return {std::begin(kAllFfs), std::end(kAllFfs)};
  auto k = parse_ffs(s);
  if (!k) throw ConfigError("unknown filesystem '" + s + "'");
  return {*k};
}

ScenarioConfig to_config(const Options &o, FfsKind k) {
  ScenarioConfig c;
  c.ffs = k;
  if (!o.codec.empty()) {
    auto cd = parse_codec(o.codec);
    if (!cd) throw ConfigError("unknown codec '" + o.codec + "'");
    c.codec = *cd;
  }
  c.partition_mb = o.partition_mb;
  if (!o.tree_file.empty()) c.tree = TreeSpec::load(o.tree_file);
  c.seed = o.seed;
  c.files = o.files;
  c.wallclock = o.wallclock;
  c.validate();
  return c;
}

void write_out(const std::string &path, const std::string &text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
}

std::string emit(const std::vector<BenchReport> &reps, const std::string &format) {
  if (format == "csv") return emit_csv(reps);
  if (format == "json") return emit_json(reps);
  throw ConfigError("unknown format '" + format + "'");
}

int finish(const std::vector<BenchReport> &reps, const Options &o) {
  write_out(o.out, emit(reps, o.format));
  int rc = 0;
  for (const auto &r : reps) {
    if (r.ok) continue;
    std::cerr << "ffs-arena: " << r.scenario << " on " << to_string(r.config.ffs) << " failed: " << r.error << "\n";
    rc = kExitScenario;
  }
  return rc;
}

std::vector<std::uint64_t> parse_values(const std::string &s) {
  std::vector<std::uint64_t> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stoull(item));
    } catch (const std::logic_error &) {
      throw ConfigError("bad sweep value '" + item + "'");
    }
  }
  return v;
}

std::string fit_table(const std::vector<Row> &rows, const std::string &format) {
  auto fits = fit_rows(rows);
  std::ostringstream os;
  if (format == "json") {
    auto j = nlohmann::ordered_json::array();
    for (const auto &f : fits)
      j.push_back({{"ffs", f.ffs}, {"step", f.step}, {"slope", f.fit.slope}, {"intercept", f.fit.intercept},
                   {"r2", f.fit.r2}});
    return j.dump(2) + "\n";
  }
  if (format != "csv") throw ConfigError("unknown format '" + format + "'");
  os << "ffs,step,slope,intercept,r2\n";
  for (const auto &f : fits)
    os << f.ffs << ',' << f.step << ',' << f.fit.slope << ',' << f.fit.intercept << ',' << f.fit.r2 << "\n";
  return os.str();
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Flash filesystem benchmark arena"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  Options o;

  auto *mkfs = app.add_subcommand("mkfs", "format a partition and save the chip image");
  add_common(mkfs, o, false);

  std::string scenario = "s2";
  auto *run = app.add_subcommand("run", "run one scenario");
  run->add_option("scenario", scenario, "s1 or s2")->check(CLI::IsMember({"s1", "s2"}));
  add_common(run, o, true);
  run->add_option("--tree", o.tree_file, "tree spec file replacing the scenario tree");
  run->add_option("--files", o.files, "S2 target file count");
  run->add_option("--format", o.format, "csv or json");
  run->add_flag("--wallclock", o.wallclock, "also record host time");

  std::string axis = "file_count", values = "250,500,1000,2000";
  auto *sw = app.add_subcommand("sweep", "repeat S2 over file counts or partition sizes");
  add_common(sw, o, true);
  sw->add_option("--axis", axis, "file_count or partition_size");
  sw->add_option("--values", values, "comma separated axis values");
  sw->add_option("--tree", o.tree_file, "tree spec file replacing the S2 tree");
  sw->add_option("--files", o.files, "S2 target file count");
  sw->add_option("--format", o.format, "csv or json");
  sw->add_flag("--wallclock", o.wallclock, "also record host time");

  std::string in;
  auto *rep = app.add_subcommand("report", "fit durations against the axis of a CSV sweep");
  rep->add_option("input", in, "CSV produced by run or sweep")->required();
  rep->add_option("--format", o.format, "csv or json");
  rep->add_option("--out", o.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*mkfs) {
      auto k = parse_ffs_list(o.ffs, false).front();
      auto cfg = to_config(o, k);
      FlashGeometry g;
      g.blocks_per_chip = cfg.partition_blocks(g);
      FlashChip chip(g);
      auto vol = make_volume(k, Mtd(chip, chip.whole_chip()), cfg.effective_codec());
      vol->format();
      if (o.out.empty()) throw ConfigError("mkfs needs --out");
      auto img = chip.save_image();
      std::ofstream f(o.out, std::ios::binary);
      if (!f) throw ConfigError("cannot write " + o.out);
      f.write(reinterpret_cast<const char *>(img.data()), static_cast<std::streamsize>(img.size()));
      std::cerr << to_string(k) << ": " << g.blocks_per_chip << " blocks formatted in "
                << static_cast<double>(chip.elapsed().count()) / 1e6 << " ms virtual\n";
      return 0;
    }
    if (*run) {
      std::vector<BenchReport> reps;
      for (auto k : parse_ffs_list(o.ffs, true)) {
        auto cfg = to_config(o, k);
        reps.push_back(scenario == "s1" ? run_s1(cfg) : run_s2(cfg));
      }
      return finish(reps, o);
    }
    if (*sw) {
      auto ax = parse_axis(axis);
      if (!ax) throw ConfigError("unknown axis '" + axis + "'");
      auto ks = parse_ffs_list(o.ffs, true);
      auto base = to_config(o, ks.front());
      return finish(sweep(base, ks, *ax, parse_values(values)), o);
    }
    if (*rep) {
      std::ifstream f(in);
      if (!f) throw ConfigError("cannot open " + in);
      std::stringstream ss;
      ss << f.rdbuf();
      write_out(o.out, fit_table(parse_csv(ss.str()), o.format));
      return 0;
    }
  } catch (const ConfigError &e) {
    std::cerr << "ffs-arena: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidParams &e) {
    std::cerr << "ffs-arena: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception &e) {
    std::cerr << "ffs-arena: " << e.what() << "\n";
    return kExitScenario;
  }
  return 0;
}
