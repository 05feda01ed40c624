#include "ffsarena/treegen.hpp"
#include "ffsarena/yaffs2.hpp"

#include <gtest/gtest.h>
#include <zlib.h>

#include <cmath>
#include <set>

using namespace ffsarena;

namespace {

// Full B-ary tree of depth D: sum of B^k for k = 0..D.
std::uint64_t full_tree_dirs(std::uint64_t b, std::uint32_t d) {
  std::uint64_t n = 0, level = 1;
  for (std::uint32_t k = 0; k <= d; ++k, level *= b) n += level;
  return n;
}

double deflate_ratio(const Bytes &b) {
  uLongf out = compressBound(static_cast<uLong>(b.size()));
  std::vector<Bytef> buf(out);
  compress2(buf.data(), &out, b.data(), static_cast<uLong>(b.size()), 9);
  return static_cast<double>(out) / static_cast<double>(b.size());
}

}  // namespace

TEST(TreeGen, ConstantShapeMatchesClosedForm) {
  TreeSpec s;
  s.depth = 5;
  s.dirs_per_dir = Distribution::constant(2);
  s.files_per_dir = Distribution::constant(3);
  s.file_size = Distribution::constant(100);
  auto m = plan_tree(s);
  EXPECT_EQ(m.dirs, full_tree_dirs(2, 5));
  EXPECT_EQ(m.dirs, 63u);
  EXPECT_EQ(m.files, 3 * m.dirs);
  EXPECT_EQ(m.bytes, 100 * m.files);
  EXPECT_EQ(m.entries.size(), m.dirs + m.files);
  EXPECT_EQ(m.entries.front().path, "/");
}

TEST(TreeGen, ParentsPrecedeChildrenAndPathsAreUnique) {
  TreeSpec s;
  s.depth = 4;
  s.dirs_per_dir = Distribution::normal(3, 1);
  s.files_per_dir = Distribution::normal(4, 1);
  auto m = plan_tree(s);
  std::set<std::string> seen;
  for (const auto &e : m.entries) {
    if (e.path != "/") {
      auto parent = e.path.substr(0, e.path.rfind('/'));
      if (parent.empty()) parent = "/";
      EXPECT_TRUE(seen.count(parent)) << e.path;
    }
    EXPECT_TRUE(seen.insert(e.path).second) << e.path;
  }
}

TEST(TreeGen, SameSeedSameTree) {
  TreeSpec s;
  s.depth = 3;
  s.dirs_per_dir = Distribution::uniform(1, 4);
  s.files_per_dir = Distribution::normal(4, 1);
  s.file_size = Distribution::normal(1024, 64);
  s.seed = 77;
  EXPECT_EQ(plan_tree(s), plan_tree(s));
  auto t = s;
  t.seed = 78;
  EXPECT_NE(plan_tree(s), plan_tree(t));
}

TEST(TreeGen, NormalSamplesHaveRequestedMeanAndNoNegatives) {
  std::mt19937_64 rng(42);
  auto d = Distribution::normal(4, 1);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(d.sample(rng));
  EXPECT_GE(sum / n, 3.9);
  EXPECT_LE(sum / n, 4.1);

  auto wide = Distribution::normal(0.5, 3);
  for (int i = 0; i < 10000; ++i) EXPECT_GE(static_cast<std::int64_t>(wide.sample(rng)), 0);
}

TEST(TreeGen, UniformStaysInRange) {
  std::mt19937_64 rng(1);
  auto d = Distribution::uniform(3, 7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    auto x = d.sample(rng);
    ASSERT_GE(x, 3u);
    ASSERT_LE(x, 7u);
    seen.insert(x);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(TreeGen, InvalidParamsRejected) {
  EXPECT_THROW(Distribution::uniform(5, 2), InvalidParams);
  EXPECT_THROW(Distribution::normal(1, -1), InvalidParams);
}

TEST(TreeGen, ConfigRoundTrip) {
  TreeSpec s;
  s.depth = 5;
  s.dirs_per_dir = Distribution::normal(3, 1);
  s.files_per_dir = Distribution::normal(4, 1);
  s.file_size = Distribution::uniform(10, 20);
  s.seed = 9;
  s.compressibility = 0.25;
  auto back = TreeSpec::parse(s.to_config());
  EXPECT_EQ(back.to_config(), s.to_config());
}

TEST(TreeGen, ConfigParsingErrors) {
  auto t = TreeSpec::parse("# comment\n depth = 2 \n files_per_dir = const(3) # trailing\n\n");
  EXPECT_EQ(t.depth, 2u);
  EXPECT_EQ(t.files_per_dir.to_string(), "const(3)");
  EXPECT_THROW(TreeSpec::parse("colour = blue"), ConfigError);
  EXPECT_THROW(TreeSpec::parse("depth"), ConfigError);
  EXPECT_THROW(TreeSpec::parse("depth = many"), ConfigError);
  EXPECT_THROW(TreeSpec::parse("file_size = gamma(1,2)"), ConfigError);
  EXPECT_THROW(TreeSpec::parse("compressibility = 2"), ConfigError);
  EXPECT_THROW(TreeSpec::load("/nonexistent/tree.conf"), ConfigError);
}

TEST(TreeGen, ExampleConfigsLoad) {
  auto s1 = TreeSpec::load(FFSARENA_EXAMPLES "/s1_tree.conf");
  EXPECT_EQ(s1.depth, 5u);
  EXPECT_EQ(s1.files_per_dir.to_string(), "norm(4,1)");
  auto s2 = TreeSpec::load(FFSARENA_EXAMPLES "/s2_tree_2000.conf");
  EXPECT_EQ(s2.file_size.to_string(), "const(750)");
}

TEST(TreeGen, ContentIsDeterministicAndSized) {
  EXPECT_EQ(gen_content(5, 1000, 0.5), gen_content(5, 1000, 0.5));
  EXPECT_NE(gen_content(5, 1000, 0.5), gen_content(6, 1000, 0.5));
  EXPECT_EQ(gen_content(5, 0, 0.5).size(), 0u);
  EXPECT_EQ(gen_content(5, 1001, 0.5).size(), 1001u);
}

TEST(TreeGen, CompressibilityControlsRatio) {
  double prev = 2.0;
  for (double c : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    auto r = deflate_ratio(gen_content(123, 65536, c));
    EXPECT_LT(r, prev) << c;
    prev = r;
  }
  EXPECT_GT(deflate_ratio(gen_content(1, 65536, 0.0)), 0.99);
  EXPECT_LT(deflate_ratio(gen_content(1, 65536, 1.0)), 0.1);
}

TEST(TreeGen, NumberedNamesSortNumerically) {
  EXPECT_EQ(numbered('f', 7, 10), "f007");
  EXPECT_EQ(numbered('d', 12, 2000), "d0012");
  EXPECT_LT(numbered('f', 9, 100), numbered('f', 10, 100));
}

TEST(TreeGen, GenerateWritesManifestToVolume) {
  FlashGeometry g;
  g.blocks_per_chip = 64;
  FlashChip chip(g);
  Yaffs2Volume v(Mtd(chip, chip.whole_chip()));
  v.format();
  v.mount();
  TreeSpec s;
  s.depth = 2;
  s.dirs_per_dir = Distribution::constant(2);
  s.files_per_dir = Distribution::constant(2);
  s.file_size = Distribution::constant(500);
  auto m = generate(s, v);
  EXPECT_FALSE(m.incomplete);
  for (const auto &e : m.entries) {
    auto a = v.stat(e.path);
    EXPECT_EQ(a.kind, e.kind) << e.path;
    if (e.kind == FileKind::File) { EXPECT_EQ(v.read_file(e.path), gen_content(e.content_seed, e.size, s.compressibility)); }
  }
}

TEST(TreeGen, GenerateStopsCleanlyWhenFull) {
  FlashGeometry g;
  g.blocks_per_chip = 16;
  FlashChip chip(g);
  Yaffs2Volume v(Mtd(chip, chip.whole_chip()));
  v.format();
  v.mount();
  TreeSpec s;
  s.depth = 1;
  s.dirs_per_dir = Distribution::constant(1);
  s.files_per_dir = Distribution::constant(40);
  s.file_size = Distribution::constant(100000);
  auto m = generate(s, v);
  EXPECT_TRUE(m.incomplete);
  EXPECT_LT(m.files, 80u);
  for (const auto &e : m.entries) EXPECT_TRUE(v.lookup(e.path).has_value()) << e.path;
}
