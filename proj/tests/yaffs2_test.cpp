#include "ffsarena/yaffs2.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ffsarena;

namespace {

FlashChip make_chip(std::uint32_t blocks) {
  FlashGeometry g;
  g.blocks_per_chip = blocks;
  return FlashChip(g);
}

void populate(Yaffs2Volume &v, int files) {
  v.mkdir("/d");
  for (int i = 0; i < files; ++i) {
    auto p = "/d/f" + std::to_string(i);
    v.create_file(p);
    v.write_file(p, 0, Bytes(static_cast<std::size_t>(700 + 31 * i), static_cast<std::uint8_t>(i)));
  }
}

}  // namespace

TEST(Yaffs2, CodecIsForcedToNone) {
  auto chip = make_chip(32);
  Yaffs2Config c;
  c.volume.codec = Codec::Deflate;
  Yaffs2Volume v(Mtd(chip, chip.whole_chip()), c);
  EXPECT_EQ(v.config().codec, Codec::None);
}

TEST(Yaffs2, FormatErasesOnlyProgrammedBlocks) {
  auto chip = make_chip(32);
  Mtd mtd(chip, chip.whole_chip());
  mtd.program(5, 0, Bytes(4, 1));
  Yaffs2Volume v(mtd);
  v.format();
  EXPECT_EQ(chip.stats().erases, 1u);
}

TEST(Yaffs2, CleanUnmountMountsFromCheckpoint) {
  auto chip = make_chip(64);
  Yaffs2Volume v(Mtd(chip, chip.whole_chip()));
  v.format();
  v.mount();
  populate(v, 50);
  auto scanned = v.dump_objects();
  v.unmount();
  v.mount();
  EXPECT_TRUE(v.last_mount().from_checkpoint);
  EXPECT_EQ(v.dump_objects(), scanned);
  auto ckpt_reads = v.last_mount().pages_read;
  EXPECT_LT(ckpt_reads, 20u);

  // Losing power means the next mount must scan.
  v.create_file("/late");
  EXPECT_FALSE(v.checkpoint_valid());
  auto after = v.dump_objects();
  Yaffs2Volume crashed(Mtd(chip, chip.whole_chip()));
  crashed.mount();
  EXPECT_FALSE(crashed.last_mount().from_checkpoint);
  EXPECT_GT(crashed.last_mount().pages_read, ckpt_reads);
  EXPECT_EQ(crashed.dump_objects(), after);
}

TEST(Yaffs2, SequenceNumbersIncrease) {
  auto chip = make_chip(32);
  Yaffs2Volume v(Mtd(chip, chip.whole_chip()));
  v.format();
  v.mount();
  auto s0 = v.seq();
  populate(v, 200);
  EXPECT_GT(v.seq(), s0);
}

TEST(Yaffs2, DeleteFreesWholeBlocksInline) {
  auto chip = make_chip(64);
  Yaffs2Volume v(Mtd(chip, chip.whole_chip()));
  v.format();
  v.mount();
  v.create_file("/big");
  v.write_file("/big", 0, Bytes(600000, 9));
  auto free_before = v.free_blocks();
  v.delete_file("/big");
  EXPECT_GT(v.gc_stats().inline_erases, 0u);
  EXPECT_GT(v.free_blocks(), free_before);
}

TEST(Yaffs2, ChurnSurvivesScanAndCheckpoint) {
  auto chip = make_chip(40);
  Yaffs2Volume v(Mtd(chip, chip.whole_chip()));
  v.format();
  v.mount();
  std::mt19937_64 rng(2);
  std::map<std::string, Bytes> live;
  for (int i = 0; i < 2000; ++i) {
    auto name = "/n" + std::to_string(rng() % 30);
    if (live.count(name) && rng() % 4 == 0) {
      v.delete_file(name);
      live.erase(name);
      continue;
    }
    if (!live.count(name)) v.create_file(name);
    Bytes d(1 + rng() % 9000, static_cast<std::uint8_t>(rng()));
    v.write_file(name, 0, d);
    auto &ref = live[name];
    if (ref.size() < d.size()) ref.resize(d.size());
    std::copy(d.begin(), d.end(), ref.begin());
  }
  EXPECT_GT(v.gc_stats().threshold_collections + v.gc_stats().inline_erases, 0u);
  Yaffs2Volume scanned(Mtd(chip, chip.whole_chip()));
  scanned.mount();
  for (const auto &[n, d] : live) ASSERT_EQ(scanned.read_file(n), d) << n;
  scanned.unmount();
  scanned.mount();
  EXPECT_TRUE(scanned.last_mount().from_checkpoint);
  for (const auto &[n, d] : live) ASSERT_EQ(scanned.read_file(n), d) << n;
}

TEST(Yaffs2, ChunkCountTracksFileSize) {
  auto chip = make_chip(32);
  Yaffs2Volume v(Mtd(chip, chip.whole_chip()));
  v.format();
  v.mount();
  v.create_file("/c");
  v.write_file("/c", 0, Bytes(2048 * 3 + 1, 1));
  auto ino = v.stat("/c").inode;
  EXPECT_EQ(v.object_chunks(ino), 1u + 4u);
  EXPECT_FALSE(v.object_chunks(9999).has_value());
}
