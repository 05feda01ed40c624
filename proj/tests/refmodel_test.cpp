#include "ffsarena/jffs2.hpp"
#include "ffsarena/refmodel.hpp"
#include "ffsarena/ubifs.hpp"
#include "ffsarena/yaffs2.hpp"

#include <gtest/gtest.h>

#include <memory>

using namespace ffsarena;

namespace {

class RefCheck : public ::testing::TestWithParam<std::string> {};

std::unique_ptr<FfsVolume> make(const std::string &kind, Mtd mtd) {
  if (kind == "jffs2") return std::make_unique<Jffs2Volume>(mtd);
  if (kind == "yaffs2") return std::make_unique<Yaffs2Volume>(mtd);
  return std::make_unique<UbifsVolume>(mtd);
}

}  // namespace

TEST(RefModel, MirrorsVolumeErrors) {
  RefModel m;
  m.mkdir("/a");
  EXPECT_THROW(m.mkdir("/a"), FsError);
  m.create_file("/a/f");
  m.write_file("/a/f", 4, Bytes{1, 2});
  EXPECT_EQ(m.read_file("/a/f"), (Bytes{0, 0, 0, 0, 1, 2}));
  try {
    m.rmdir("/a");
    FAIL();
  } catch (const FsError &e) {
    EXPECT_EQ(e.code(), FsErrc::NotEmpty);
  }
  EXPECT_EQ(m.readdir("/").size(), 1u);
}

TEST(RefModel, OpLogIsDeterministic) {
  OpLogParams p;
  p.seed = 3;
  p.ops = 500;
  auto a = make_oplog(p), b = make_oplog(p);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].kind, b[i].kind);
    EXPECT_EQ(a[i].path, b[i].path);
  }
}

TEST(RefModel, OpLogIncludesRemountsAndGc) {
  OpLogParams p;
  p.ops = 1000;
  p.remounts = 3;
  p.gc_every = 50;
  auto log = make_oplog(p);
  auto count = [&](OpKind k) { return std::count_if(log.begin(), log.end(), [&](const Op &o) { return o.kind == k; }); };
  EXPECT_EQ(count(OpKind::Remount), 3);
  EXPECT_GE(count(OpKind::Gc), 19);
}

TEST_P(RefCheck, TenThousandOpsMatchReference) {
  FlashGeometry g;
  g.blocks_per_chip = 256;
  FlashChip chip(g);
  auto vol = make(GetParam(), Mtd(chip, chip.whole_chip()));
  vol->format();
  vol->mount();
  OpLogParams p;
  p.seed = 2024;
  p.ops = 10000;
  p.remounts = 5;
  p.gc_every = 50;
  auto verdict = reference_model_check(make_oplog(p), *vol);
  EXPECT_TRUE(verdict.equal) << "op " << verdict.diverged_at << ": " << verdict.detail;
  EXPECT_GE(verdict.ops_checked, 10000u);
}

TEST_P(RefCheck, DivergenceIsReported) {
  FlashGeometry g;
  g.blocks_per_chip = 64;
  FlashChip chip(g);
  auto vol = make(GetParam(), Mtd(chip, chip.whole_chip()));
  vol->format();
  vol->mount();
  // A file the reference does not know about.
  vol->create_file("/stray");
  std::vector<Op> log{Op{OpKind::Readdir, "/", 0, 0, 0}};
  auto verdict = reference_model_check(log, *vol);
  EXPECT_FALSE(verdict.equal);
  EXPECT_EQ(verdict.diverged_at, 0u);
}

INSTANTIATE_TEST_SUITE_P(AllFfs, RefCheck, ::testing::Values("jffs2", "yaffs2", "ubifs"),
                         [](const auto &info) { return info.param; });
