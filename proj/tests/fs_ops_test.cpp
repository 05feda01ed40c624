#include "ffsarena/fs_ops.hpp"
#include "ffsarena/jffs2.hpp"
#include "ffsarena/treegen.hpp"
#include "ffsarena/ubifs.hpp"
#include "ffsarena/yaffs2.hpp"

#include <gtest/gtest.h>

#include <memory>

using namespace ffsarena;

namespace {

struct Fixture {
  FlashChip chip;
  std::unique_ptr<FfsVolume> vol;
  TreeManifest manifest;
};

std::unique_ptr<Fixture> build(const std::string &kind) {
  FlashGeometry g;
  g.blocks_per_chip = 128;
  auto f = std::make_unique<Fixture>(Fixture{FlashChip(g), nullptr, {}});
  Mtd mtd(f->chip, f->chip.whole_chip());
  if (kind == "jffs2") f->vol = std::make_unique<Jffs2Volume>(mtd);
  else if (kind == "yaffs2") f->vol = std::make_unique<Yaffs2Volume>(mtd);
  else f->vol = std::make_unique<UbifsVolume>(mtd);
  f->vol->format();
  f->vol->mount();
  TreeSpec s;
  s.depth = 3;
  s.dirs_per_dir = Distribution::constant(3);
  s.files_per_dir = Distribution::normal(4, 1);
  s.file_size = Distribution::constant(300);
  f->manifest = generate(s, *f->vol);
  f->vol->unmount();
  f->vol->mount();
  return f;
}

class FsOps : public ::testing::TestWithParam<std::string> {};

}  // namespace

TEST_P(FsOps, ListingVisitsEveryEntryOnce) {
  auto f = build(GetParam());
  auto l = readdir_recursive(*f->vol);
  EXPECT_EQ(l.stats.dirs, f->manifest.dirs);
  EXPECT_EQ(l.entries.size(), f->manifest.dirs - 1 + f->manifest.files);
  EXPECT_EQ(l.stats.entries, l.entries.size());
  std::map<std::string, std::uint64_t> want;
  for (const auto &e : f->manifest.entries)
    if (e.kind == FileKind::File) want[e.path] = e.size;
  for (const auto &[p, a] : l.entries)
    if (a.kind == FileKind::File) { EXPECT_EQ(want.at(p), a.size); }
}

TEST_P(FsOps, SecondListingHitsCache) {
  auto f = build(GetParam());
  auto r0 = f->chip.stats().reads;
  readdir_recursive(*f->vol);
  auto first = f->chip.stats().reads - r0;
  r0 = f->chip.stats().reads;
  readdir_recursive(*f->vol);
  auto second = f->chip.stats().reads - r0;
  EXPECT_LE(second, first);
  if (GetParam() != "yaffs2") { EXPECT_LT(second, first); }
}

TEST_P(FsOps, FindReportsMatches) {
  auto f = build(GetParam());
  auto miss = find_missing(*f->vol);
  EXPECT_EQ(miss.matches, 0u);
  EXPECT_EQ(miss.dirs, f->manifest.dirs);
  f->vol->create_file("/d001/missing.target");
  EXPECT_EQ(find_missing(*f->vol).matches, 1u);
  EXPECT_GE(find_name(*f->vol, "f000").matches, 1u);
}

TEST_P(FsOps, DeleteTreeEmptiesVolume) {
  auto f = build(GetParam());
  auto removed = delete_tree(*f->vol, "/d000");
  EXPECT_GT(removed, 0u);
  EXPECT_FALSE(f->vol->lookup("/d000").has_value());
  removed += delete_tree(*f->vol);
  EXPECT_EQ(removed, f->manifest.entries.size() - 1);
  EXPECT_TRUE(f->vol->readdir("/").empty());
  f->vol->unmount();
  f->vol->mount();
  EXPECT_TRUE(f->vol->readdir("/").empty());
}

INSTANTIATE_TEST_SUITE_P(AllFfs, FsOps, ::testing::Values("jffs2", "yaffs2", "ubifs"),
                         [](const auto &info) { return info.param; });
