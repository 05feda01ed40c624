#include "ffsarena/flash.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ffsarena;

namespace {

FlashGeometry small_geo(std::uint32_t blocks = 16) {
  FlashGeometry g;
  g.blocks_per_chip = blocks;
  return g;
}

Bytes random_bytes(std::mt19937_64 &rng, std::size_t n) {
  Bytes b(n);
  for (auto &x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

}  // namespace

TEST(Flash, DefaultGeometryIsTheBoardChip) {
  FlashGeometry g;
  EXPECT_EQ(g.page_data_bytes, 2048u);
  EXPECT_EQ(g.oob_bytes, 64u);
  EXPECT_EQ(g.pages_per_block, 64u);
  EXPECT_EQ(g.read_latency, microseconds(25));
  EXPECT_EQ(g.write_latency, microseconds(300));
  EXPECT_EQ(g.erase_latency, microseconds(2000));
  EXPECT_EQ(g.chip_bytes(), 256ull << 20);
}

TEST(Flash, InvalidGeometryRejected) {
  auto g = small_geo();
  g.pages_per_block = 0;
  EXPECT_THROW(FlashChip{g}, std::invalid_argument);
}

TEST(Flash, ErasedPagesReadAllOnes) {
  std::mt19937_64 rng(11);
  FlashChip chip(small_geo(8));
  auto all = chip.whole_chip();
  const auto pages = 8u * 64u;
  std::vector<bool> programmed(pages, false);
  for (int i = 0; i < 1000; ++i) {
    auto p = static_cast<std::uint32_t>(rng() % pages);
    switch (rng() % 3) {
      case 0:
        if (!programmed[p]) {
          chip.program_page(all, p, random_bytes(rng, 1 + rng() % 2048), {});
          programmed[p] = true;
        }
        break;
      case 1: {
        auto b = p / 64;
        chip.erase_block(all, b);
        for (std::uint32_t k = 0; k < 64; ++k) programmed[b * 64 + k] = false;
        break;
      }
      default: break;
    }
    if (!programmed[p]) {
      auto r = chip.read_page(all, p);
      ASSERT_TRUE(all_ff(r.data)) << "case " << i;
      ASSERT_TRUE(all_ff(r.oob)) << "case " << i;
      ASSERT_EQ(r.data.size(), 2048u);
      ASSERT_EQ(r.oob.size(), 64u);
    }
  }
}

TEST(Flash, ProgramTwiceIsNotErased) {
  FlashChip chip(small_geo());
  auto all = chip.whole_chip();
  Bytes d(10, 0xAB);
  chip.program_page(all, 5, d, {});
  try {
    chip.program_page(all, 5, d, {});
    FAIL() << "expected NotErased";
  } catch (const FlashError &e) {
    EXPECT_EQ(e.code(), FlashErrc::NotErased);
  }
  EXPECT_EQ(chip.stats().not_erased_violations, 1u);
  chip.erase_block(all, 0);
  EXPECT_NO_THROW(chip.program_page(all, 5, d, {}));
}

TEST(Flash, ShortProgramPadsWithOnes) {
  FlashChip chip(small_geo());
  auto all = chip.whole_chip();
  Bytes d{1, 2, 3};
  Bytes oob{9};
  chip.program_page(all, 0, d, oob);
  auto r = chip.read_page(all, 0);
  EXPECT_EQ(r.data[0], 1);
  EXPECT_EQ(r.data[2], 3);
  EXPECT_EQ(r.data[3], 0xFF);
  EXPECT_EQ(r.oob[0], 9);
  EXPECT_EQ(r.oob[1], 0xFF);
}

TEST(Flash, OversizedProgramRejected) {
  FlashChip chip(small_geo());
  Bytes d(2049, 0);
  EXPECT_THROW(chip.program_page(chip.whole_chip(), 0, d, {}), FlashError);
}

TEST(Flash, LatenciesAdvanceClock) {
  FlashChip chip(small_geo());
  auto all = chip.whole_chip();
  Bytes d(1, 0);
  chip.read_page(all, 0);
  EXPECT_EQ(chip.elapsed(), microseconds(25));
  chip.program_page(all, 0, d, {});
  EXPECT_EQ(chip.elapsed(), microseconds(325));
  chip.erase_block(all, 0);
  EXPECT_EQ(chip.elapsed(), microseconds(2325));
  chip.charge_cpu(nanoseconds(7));
  EXPECT_EQ(chip.elapsed(), microseconds(2325) + nanoseconds(7));
  EXPECT_EQ(chip.stats().reads, 1u);
  EXPECT_EQ(chip.stats().writes, 1u);
  EXPECT_EQ(chip.stats().erases, 1u);
}

TEST(Flash, BadBlockMarkerAndRefusal) {
  FlashChip chip(small_geo());
  auto all = chip.whole_chip();
  chip.mark_bad(all, 3);
  EXPECT_TRUE(chip.is_bad(all, 3));
  EXPECT_THROW(chip.read_page(all, 3 * 64), FlashError);
  EXPECT_THROW(chip.erase_block(all, 3), FlashError);
  Bytes d(1, 0);
  EXPECT_THROW(chip.program_page(all, 3 * 64 + 1, d, {}), FlashError);
  // The marker survives a save/load round trip: OOB byte 0 of page 0.
  auto img = chip.save_image();
  auto back = FlashChip::load_image(img);
  EXPECT_TRUE(back.is_bad(back.whole_chip(), 3));
}

TEST(Flash, BadBlocksStayBad) {
  std::mt19937_64 rng(5);
  for (int c = 0; c < 1000; ++c) {
    FlashGeometry g = small_geo(4);
    g.pages_per_block = 4;
    g.endurance_limit = 3;
    FlashChip chip(g);
    auto all = chip.whole_chip();
    std::vector<bool> bad(4, false);
    for (int op = 0; op < 20; ++op) {
      auto b = static_cast<std::uint32_t>(rng() % 4);
      try {
        switch (rng() % 4) {
          case 0: chip.erase_block(all, b); break;
          case 1: chip.program_page(all, b * 4 + static_cast<std::uint32_t>(rng() % 4), Bytes(1, 0), {}); break;
          case 2: chip.read_page(all, b * 4); break;
          default:
            if (rng() % 8 == 0) chip.mark_bad(all, b);
        }
      } catch (const FlashError &) {
      }
      for (std::uint32_t k = 0; k < 4; ++k) {
        bool now = chip.is_bad(all, k);
        ASSERT_FALSE(bad[k] && !now) << "case " << c << " block " << k;
        bad[k] = now;
      }
    }
  }
}

TEST(Flash, EnduranceLimitWearsBlockOut) {
  auto g = small_geo(2);
  g.endurance_limit = 5;
  FlashChip chip(g);
  auto all = chip.whole_chip();
  for (int i = 0; i < 5; ++i) chip.erase_block(all, 0);
  try {
    chip.erase_block(all, 0);
    FAIL() << "expected BlockWornOut";
  } catch (const FlashError &e) {
    EXPECT_EQ(e.code(), FlashErrc::BlockWornOut);
  }
  EXPECT_TRUE(chip.is_bad(all, 0));
  EXPECT_EQ(chip.erase_count(all, 0), 6u);
}

TEST(Flash, ProbabilisticWearFailsBeforeLimitSometimes) {
  auto g = small_geo(1);
  g.endurance_limit = 100;
  FlashChip chip(g, WearModel{true, 3});
  auto all = chip.whole_chip();
  std::uint32_t n = 0;
  try {
    for (;; ++n) chip.erase_block(all, 0);
  } catch (const FlashError &e) {
    EXPECT_EQ(e.code(), FlashErrc::BlockWornOut);
  }
  EXPECT_GE(n, 90u);
  EXPECT_LE(n, 101u);
}

TEST(Flash, PartitionsAreRelativeAndBounded) {
  FlashChip chip(small_geo(16));
  auto p = chip.make_partition(4, 4);
  Mtd mtd(chip, p);
  EXPECT_EQ(mtd.blocks(), 4u);
  mtd.program(1, 2, Bytes(1, 7));
  EXPECT_EQ(chip.page_state(chip.whole_chip(), 5 * 64 + 2), PageState::Programmed);
  EXPECT_FALSE(mtd.is_erased(1, 2));
  EXPECT_THROW(mtd.erase(4), FlashError);
  EXPECT_THROW(chip.make_partition(10, 7), FlashError);
  EXPECT_TRUE(p.overlaps(chip.make_partition(7, 2)));
  EXPECT_FALSE(p.overlaps(chip.make_partition(8, 2)));
}

TEST(Flash, ClockReplayIsDeterministic) {
  std::mt19937_64 rng(99);
  for (int c = 0; c < 1000; ++c) {
    auto g = small_geo(4);
    g.pages_per_block = 8;
    FlashChip chip(g);
    chip.enable_op_log();
    auto all = chip.whole_chip();
    auto n = 1 + rng() % 40;
    for (std::uint64_t i = 0; i < n; ++i) {
      auto page = static_cast<std::uint32_t>(rng() % 32);
      try {
        switch (rng() % 4) {
          case 0: chip.read_page(all, page); break;
          case 1: chip.program_page(all, page, Bytes(1, 0), {}); break;
          case 2: chip.erase_block(all, page / 8); break;
          default: chip.charge_cpu(nanoseconds(static_cast<std::int64_t>(rng() % 1000)));
        }
      } catch (const FlashError &e) {
        ASSERT_EQ(e.code(), FlashErrc::NotErased);
      }
    }
    ASSERT_EQ(replay_elapsed(g, chip.op_log()), chip.elapsed()) << "case " << c;
  }
}

TEST(Flash, ImageRoundTripAndCorruption) {
  std::mt19937_64 rng(1);
  FlashChip chip(small_geo(4));
  auto all = chip.whole_chip();
  for (int i = 0; i < 50; ++i) {
    auto p = static_cast<std::uint32_t>(rng() % 256);
    if (chip.page_state(all, p) == PageState::Erased) chip.program_page(all, p, random_bytes(rng, 100), {});
  }
  chip.erase_block(all, 2);
  auto img = chip.save_image();
  EXPECT_EQ(img.size(), FlashChip::image_size(chip.geometry()));
  auto back = FlashChip::load_image(img);
  EXPECT_TRUE(back.same_media(chip));
  img[100] ^= 1;
  EXPECT_THROW(FlashChip::load_image(img), FlashError);
  EXPECT_THROW(FlashChip::load_image(Bytes(10, 0)), FlashError);
}

TEST(Flash, ImageCopyProgramsOnlyUsedPages) {
  FlashChip src(small_geo(4)), dst(small_geo(4));
  auto all = src.whole_chip();
  src.program_page(all, 3, Bytes(5, 1), {});
  src.program_page(all, 70, Bytes(5, 2), Bytes(1, 0x42));
  dst.write_image_pages(src, all, all);
  EXPECT_EQ(dst.stats().writes, 2u);
  EXPECT_EQ(dst.elapsed(), microseconds(600));
  EXPECT_EQ(dst.read_page(all, 70).oob[0], 0x42);
  EXPECT_EQ(dst.programmed_pages(all), 2u);
}
