// Prints one PASS/FAIL line per acceptance criterion. Always exits 0 so the
// full report is produced; ctest checks that the last line was reached.
#include "ffsarena/ffsarena.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace ffsarena;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string &detail) {
  if (!ok) ++failures;
  std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

double ms(std::int64_t ns) { return static_cast<double>(ns) / 1e6; }
double ms(nanoseconds d) { return ms(d.count()); }

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

FlashChip chip_of(std::uint32_t blocks) {
  FlashGeometry g;
  g.blocks_per_chip = blocks;
  return FlashChip(g);
}

// ------------------------------------------------------------- 1 and 2

std::uint64_t crit1_not_erased = 0;

void criterion1() {
  bool ok = true;
  std::ostringstream d;
  for (auto k : kAllFfs) {
    auto chip = chip_of(256);
    auto vol = make_volume(k, Mtd(chip, chip.whole_chip()), default_codec(k));
    vol->format();
    vol->mount();
    OpLogParams p;
    p.seed = 2024;
    p.ops = 10000;
    p.remounts = 5;
    p.gc_every = 50;
    auto t0 = std::chrono::steady_clock::now();
    auto log = make_oplog(p);
    auto v = reference_model_check(log, *vol);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    crit1_not_erased += chip.stats().not_erased_violations;
    bool this_ok = v.equal && v.ops_checked >= 10000 && secs <= 60.0;
    ok = ok && this_ok;
    d << to_string(k) << " " << (v.equal ? "equal" : "DIVERGED@" + std::to_string(v.diverged_at) + " " + v.detail)
      << " " << fmt(secs, 2) << "s; ";
  }
  report(1, ok, d.str());
}

void criterion2() {
  const int cases = 1000;
  std::mt19937_64 rng(20);
  FlashGeometry g;
  g.blocks_per_chip = 4;
  g.pages_per_block = 8;
  g.endurance_limit = 6;

  int erased_ok = 0, bad_ok = 0, replay_ok = 0;
  for (int c = 0; c < cases; ++c) {
    // Erased reads: any page not programmed since its block's last erase reads 0xFF.
    {
      FlashChip chip(g);
      auto all = chip.whole_chip();
      std::vector<bool> prog(32, false);
      bool good = true;
      for (int i = 0; i < 30; ++i) {
        auto p = static_cast<std::uint32_t>(rng() % 32);
        if (rng() % 2 && !prog[p]) {
          chip.program_page(all, p, Bytes(1 + rng() % 2048, static_cast<std::uint8_t>(rng() % 255)), {});
          prog[p] = true;
        } else if (rng() % 4 == 0) {
          chip.erase_block(all, p / 8);
          for (std::uint32_t k = 0; k < 8; ++k) prog[(p / 8) * 8 + k] = false;
        }
        auto q = static_cast<std::uint32_t>(rng() % 32);
        if (!prog[q]) {
          auto r = chip.read_page(all, q);
          good = good && all_ff(r.data) && all_ff(r.oob);
        }
      }
      erased_ok += good;
    }
    // Bad blocks never return to good, including through wear-out.
    {
      FlashChip chip(g);
      auto all = chip.whole_chip();
      std::vector<bool> bad(4, false);
      bool good = true;
      for (int i = 0; i < 40; ++i) {
        auto b = static_cast<std::uint32_t>(rng() % 4);
        try {
          switch (rng() % 3) {
            case 0: chip.erase_block(all, b); break;
            case 1: chip.program_page(all, b * 8 + static_cast<std::uint32_t>(rng() % 8), Bytes(1, 0), {}); break;
            default:
              if (rng() % 10 == 0) chip.mark_bad(all, b);
          }
        } catch (const FlashError &) {
        }
        for (std::uint32_t k = 0; k < 4; ++k) {
          bool now = chip.is_bad(all, k);
          if (bad[k] && !now) good = false;
          bad[k] = now;
        }
      }
      auto back = FlashChip::load_image(chip.save_image());
      for (std::uint32_t k = 0; k < 4; ++k)
        if (bad[k] && !back.is_bad(back.whole_chip(), k)) good = false;
      bad_ok += good;
    }
    // Replaying the op log on a fresh chip yields the same virtual time.
    {
      FlashChip chip(g);
      chip.enable_op_log();
      auto all = chip.whole_chip();
      for (int i = 0; i < 30; ++i) {
        auto p = static_cast<std::uint32_t>(rng() % 32);
        try {
          switch (rng() % 4) {
            case 0: chip.read_page(all, p); break;
            case 1: chip.program_page(all, p, Bytes(1, 0), {}); break;
            case 2: chip.erase_block(all, p / 8); break;
            default: chip.charge_cpu(nanoseconds(static_cast<std::int64_t>(rng() % 5000)));
          }
        } catch (const FlashError &) {
        }
      }
      replay_ok += replay_elapsed(g, chip.op_log()) == chip.elapsed();
    }
  }
  bool ok = crit1_not_erased == 0 && erased_ok == cases && bad_ok == cases && replay_ok == cases;
  report(2, ok,
         "NotErased in criterion 1: " + std::to_string(crit1_not_erased) + "; erased-reads " +
             std::to_string(erased_ok) + "/1000, bad-block " + std::to_string(bad_ok) + "/1000, replay " +
             std::to_string(replay_ok) + "/1000");
}

// ------------------------------------------------------------- 3

void criterion3() {
  auto image = [](FfsKind k, Codec c) {
    ScenarioConfig cfg;
    cfg.ffs = k;
    cfg.codec = c;
    auto r = run_s1(cfg);
    if (!r.ok) throw std::runtime_error(r.error);
    return static_cast<double>(r.step("build_image").image_bytes);
  };
  double j_def = image(FfsKind::Jffs2, Codec::Deflate), j_none = image(FfsKind::Jffs2, Codec::None);
  double u_def = image(FfsKind::Ubifs, Codec::Deflate), u_none = image(FfsKind::Ubifs, Codec::None);
  double y_none = image(FfsKind::Yaffs2, Codec::None);
  double jr = j_def / j_none, ur = u_def / u_none, yr = y_none / j_none;
  bool ok = jr <= 0.70 && ur <= 0.70 && yr >= 1.05;
  report(3, ok,
         "jffs2 deflate/none " + fmt(jr) + ", ubifs deflate/none " + fmt(ur) + ", yaffs2/jffs2 none " + fmt(yr));
}

// ------------------------------------------------------------- 4

void criterion4() {
  const std::vector<double> sizes{16, 32, 64, 128};
  std::vector<double> jffs2, yaffs2, ubifs_layer, attach;
  for (double mb : sizes) {
    ScenarioConfig cfg;
    cfg.partition_mb = static_cast<std::uint32_t>(mb);
    FlashGeometry g;
    auto blocks = cfg.partition_blocks(g);
    for (auto k : kAllFfs) {
      auto chip = chip_of(blocks);
      auto vol = make_volume(k, Mtd(chip, chip.whole_chip()), default_codec(k));
      vol->format();
      auto t0 = chip.elapsed();
      vol->mount();
      auto dt = ms(chip.elapsed() - t0);
      if (k == FfsKind::Jffs2) jffs2.push_back(dt);
      if (k == FfsKind::Yaffs2) yaffs2.push_back(dt);
      if (k == FfsKind::Ubifs) {
        auto &u = static_cast<UbifsVolume &>(*vol);
        ubifs_layer.push_back(ms(u.last_mount().ubifs_time));
        attach.push_back(ms(u.last_mount().attach_time));
      }
    }
  }
  auto fj = linear_fit(sizes, jffs2), fy = linear_fit(sizes, yaffs2), fa = linear_fit(sizes, attach);
  auto [lo, hi] = std::minmax_element(ubifs_layer.begin(), ubifs_layer.end());
  double spread = *lo > 0 ? (*hi - *lo) / *lo : 0;
  bool ok = fj.r2 >= 0.98 && fy.r2 >= 0.98 && fa.r2 >= 0.98 && spread <= 0.10;
  report(4, ok,
         "R2 jffs2 " + fmt(fj.r2, 4) + " yaffs2 " + fmt(fy.r2, 4) + " ubi-attach " + fmt(fa.r2, 4) +
             "; ubifs-layer " + fmt(*lo) + ".." + fmt(*hi) + " ms (spread " + fmt(100 * spread, 1) + "%)");
}

// ------------------------------------------------------------- sweep for 5, 8, 9

std::map<std::pair<FfsKind, std::uint64_t>, BenchReport> sweep_runs;

void run_sweep() {
  ScenarioConfig base;
  for (auto k : kAllFfs) {
    for (std::uint64_t n : {250, 500, 1000, 2000}) {
      auto c = base;
      c.ffs = k;
      c.files = n;
      sweep_runs[{k, n}] = run_s2(c);
    }
  }
}

const BenchReport &s2(FfsKind k, std::uint64_t n) { return sweep_runs.at({k, n}); }

void criterion5() {
  const auto &j = s2(FfsKind::Jffs2, 1000), &u = s2(FfsKind::Ubifs, 1000);
  if (!j.ok || !u.ok) return report(5, false, "scenario failed: " + j.error + u.error);
  double jm = ms(j.step("mount2").duration_ns), um = ms(u.step("mount2").duration_ns);
  report(5, jm >= 5 * um, "jffs2 mount " + fmt(jm) + " ms, ubifs attach+mount " + fmt(um) + " ms, ratio " +
                              fmt(jm / um, 1));
}

void criterion6() {
  ScenarioConfig cfg;
  cfg.ffs = FfsKind::Yaffs2;
  auto r = run_s2(cfg);
  if (!r.ok) return report(6, false, r.error);
  double first = ms(r.step("mount").duration_ns), again = ms(r.step("mount2").duration_ns);
  report(6, again <= 0.10 * first,
         "first mount " + fmt(first) + " ms, after clean unmount " + fmt(again) + " ms (" +
             fmt(100 * again / first, 1) + "%)");
}

void criterion7() {
  auto chip = chip_of(800);
  Jffs2Volume v(Mtd(chip, chip.whole_chip()));
  v.format();
  v.mount();
  auto t0 = chip.elapsed();
  v.unmount();
  double first = ms(chip.elapsed() - t0);
  v.mount();
  t0 = chip.elapsed();
  v.unmount();
  double second = ms(chip.elapsed() - t0);
  report(7, first >= 1500 && second <= 1,
         "unmount after mkfs " + fmt(first) + " ms, after remount " + fmt(second) + " ms");
}

void criterion8() {
  auto d = [](FfsKind k, const char *step) { return ms(s2(k, 2000).step(step).duration_ns); };
  for (auto k : kAllFfs)
    if (!s2(k, 2000).ok) return report(8, false, "scenario failed: " + s2(k, 2000).error);
  double dj = d(FfsKind::Jffs2, "delete_tree"), dy = d(FfsKind::Yaffs2, "delete_tree"),
         du = d(FfsKind::Ubifs, "delete_tree");
  double fj = d(FfsKind::Jffs2, "find_missing"), fy = d(FfsKind::Yaffs2, "find_missing"),
         fu = d(FfsKind::Ubifs, "find_missing");
  double cj = d(FfsKind::Jffs2, "create_tree"), cy = d(FfsKind::Yaffs2, "create_tree"),
         cu = d(FfsKind::Ubifs, "create_tree");
  bool del = dj < dy && dj < du && dy >= 2 * dj;
  bool find = fy < fj && fy < fu && (fy == 0 || std::max(fj, fu) >= 1.5 * fy);
  bool create = cu < cj && cu < cy;
  std::ostringstream os;
  os << "delete " << (del ? "ok" : "FAIL") << " (jffs2 " << fmt(dj) << ", yaffs2 " << fmt(dy) << ", ubifs "
     << fmt(du) << " ms); find " << (find ? "ok" : "FAIL") << " (jffs2 " << fmt(fj) << ", yaffs2 " << fmt(fy)
     << ", ubifs " << fmt(fu) << " ms); create " << (create ? "ok" : "FAIL") << " (jffs2 " << fmt(cj)
     << ", yaffs2 " << fmt(cy) << ", ubifs " << fmt(cu) << " ms)";
  report(8, del && find && create, os.str());
}

void criterion9() {
  const std::vector<double> xs{250, 500, 1000, 2000};
  bool ok = true;
  std::ostringstream os;
  for (auto k : kAllFfs) {
    os << to_string(k);
    for (const char *step : {"create_tree", "delete_tree", "find_missing"}) {
      std::vector<double> ys;
      for (double n : xs) {
        const auto &r = s2(k, static_cast<std::uint64_t>(n));
        ys.push_back(r.ok ? ms(r.step(step).duration_ns) : 0);
        ok = ok && r.ok;
      }
      auto f = linear_fit(xs, ys);
      ok = ok && f.r2 >= 0.95;
      os << " " << step << "=" << fmt(f.r2, 4);
    }
    os << "; ";
  }
  report(9, ok, "R2 " + os.str());
}

// ------------------------------------------------------------- 10

void criterion10() {
  // UBI: 50 000 hot/cold operations; spread sampled over the second half.
  auto chip = chip_of(64);
  UbiConfig uc;
  UbiDevice ubi(Mtd(chip, chip.whole_chip()), uc);
  ubi.format();
  ubi.attach();
  std::mt19937_64 rng(10);
  for (std::uint32_t l = 0; l < 40; ++l) ubi.write(l, 0, Bytes(16, static_cast<std::uint8_t>(l)));
  std::uint64_t worst = 0;
  const int ops = 50000;
  for (int i = 0; i < ops; ++i) {
    auto hot = 40 + static_cast<std::uint32_t>(rng() % 10);
    ubi.unmap(hot);
    ubi.flush_erases();
    ubi.write(hot, 0, Bytes(16, 1));
    while (ubi.wear_level_step()) {
    }
    if (i >= ops / 2) {
      auto [lo, hi] = ubi.ec_range();
      worst = std::max(worst, hi - lo);
    }
  }
  bool ubi_ok = worst <= uc.wl_threshold + 1;

  // JFFS2: every seed must pick at least one clean block in 10 000 GC steps.
  int seeds_ok = 0;
  std::uint64_t min_picks = ~0ull;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto c = chip_of(64);
    Jffs2Config jc;
    jc.seed = seed;
    jc.wear_prob = 0.01;
    Jffs2Volume v(Mtd(c, c.whole_chip()), jc);
    v.format();
    v.mount();
    while (v.pending_format() > 0) v.gc_step();
    std::mt19937_64 wr(seed);
    for (int f = 0; f < 20; ++f) {
      v.create_file("/f" + std::to_string(f));
      v.write_file("/f" + std::to_string(f), 0, gen_content(wr(), 60000, 0.0));
    }
    auto start = v.gc_stats().steps;
    while (v.gc_stats().steps - start < 10000) {
      auto f = "/f" + std::to_string(wr() % 20);
      v.write_file(f, (wr() % 20) * 2048, gen_content(wr(), 2048, 0.0));
      v.try_gc_step();
    }
    min_picks = std::min(min_picks, v.gc_stats().clean_picks);
    seeds_ok += v.gc_stats().clean_picks >= 1;
  }
  report(10, ubi_ok && seeds_ok == 20,
         "ubi steady-state ec spread " + std::to_string(worst) + " (limit " + std::to_string(uc.wl_threshold + 1) +
             "); jffs2 seeds with a clean pick " + std::to_string(seeds_ok) + "/20, min picks " +
             std::to_string(min_picks));
}

// ------------------------------------------------------------- 11

void criterion11() {
  bool ok = true;
  for (auto k : kAllFfs) {
    ScenarioConfig c;
    c.ffs = k;
    c.seed = 7;
    ok = ok && emit_csv({run_s1(c)}) == emit_csv({run_s1(c)});
    c.files = 250;
    ok = ok && emit_csv({run_s2(c)}) == emit_csv({run_s2(c)});
  }
  report(11, ok, "S1 and S2 reruns on all filesystems");
}

}  // namespace

int main() {
  std::cout << kToolVersion << " acceptance" << std::endl;
  auto guard = [](int n, auto &&fn) {
    try {
      fn();
    } catch (const std::exception &e) {
      report(n, false, std::string("exception: ") + e.what());
    }
  };
  guard(1, criterion1);
  guard(2, criterion2);
  guard(3, criterion3);
  guard(4, criterion4);
  guard(5, [] {
    run_sweep();
    criterion5();
  });
  guard(6, criterion6);
  guard(7, criterion7);
  guard(8, criterion8);
  guard(9, criterion9);
  guard(10, criterion10);
  guard(11, criterion11);
  std::cout << "failed criteria: " << failures << std::endl;
  return 0;
}
