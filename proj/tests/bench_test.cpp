#include "ffsarena/bench.hpp"

#include <gtest/gtest.h>

using namespace ffsarena;

namespace {

ScenarioConfig small(FfsKind k) {
  ScenarioConfig c;
  c.ffs = k;
  c.partition_mb = 16;
  c.files = 250;
  c.seed = 5;
  return c;
}

// S1 needs room for the rootfs corpus and the generated tree.
ScenarioConfig small_s1(FfsKind k) {
  auto c = small(k);
  c.partition_mb = 48;
  return c;
}

// Flash time implied by the counters alone, with the default latencies.
std::int64_t latency_ns(const StepRecord &s) {
  return static_cast<std::int64_t>(s.reads) * 25000 + static_cast<std::int64_t>(s.writes) * 300000 +
         static_cast<std::int64_t>(s.erases) * 2000000;
}

class Scenarios : public ::testing::TestWithParam<FfsKind> {};

}  // namespace

TEST(Bench, FilesystemNamesAndCodecs) {
  for (auto k : kAllFfs) EXPECT_EQ(parse_ffs(to_string(k)), k);
  EXPECT_FALSE(parse_ffs("ext4").has_value());
  EXPECT_EQ(default_codec(FfsKind::Jffs2), Codec::Deflate);
  EXPECT_EQ(default_codec(FfsKind::Ubifs), Codec::LzFast);
  ScenarioConfig c;
  c.ffs = FfsKind::Yaffs2;
  c.codec = Codec::Deflate;
  EXPECT_EQ(c.effective_codec(), Codec::None);
}

TEST(Bench, PartitionSizing) {
  ScenarioConfig c;
  EXPECT_EQ(c.partition_blocks(FlashGeometry{}), 800u);
  c.partition_mb = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Bench, S2TreeShape) {
  EXPECT_EQ(s2_files_per_dir(2000), 32u);
  EXPECT_EQ(s2_files_per_dir(250), 4u);
  auto m = plan_tree(s2_tree(1000, 1));
  EXPECT_EQ(m.dirs, 63u);
  EXPECT_EQ(m.files, 63u * 16u);
  EXPECT_EQ(m.bytes, m.files * 750);
}

TEST(Bench, S1TreeAverages) {
  auto t = s1_tree(1);
  EXPECT_EQ(t.depth, 5u);
  EXPECT_DOUBLE_EQ(t.files_per_dir.mean(), 4.0);
  EXPECT_DOUBLE_EQ(t.dirs_per_dir.mean(), 3.0);
  EXPECT_DOUBLE_EQ(t.file_size.mean(), 1024.0);
}

TEST(Bench, RootfsCorpusShape) {
  auto m = rootfs_manifest(1);
  EXPECT_EQ(m.dirs, kRootfsDirs);
  EXPECT_EQ(m.files, kRootfsFiles);
  auto mean = static_cast<double>(m.bytes) / static_cast<double>(m.files);
  EXPECT_NEAR(mean, 13312.0, 1.0);
  EXPECT_EQ(rootfs_manifest(1), m);
}

TEST_P(Scenarios, S1StepsAndAccounting) {
  auto rep = run_s1(small_s1(GetParam()));
  ASSERT_TRUE(rep.ok) << rep.error;
  ASSERT_EQ(rep.steps.size(), kS1Steps.size());
  ASSERT_EQ(rep.steps.size(), 7u);
  for (std::size_t i = 0; i < kS1Steps.size(); ++i) {
    EXPECT_EQ(rep.steps[i].step, kS1Steps[i]);
    EXPECT_EQ(rep.steps[i].duration_ns, latency_ns(rep.steps[i])) << kS1Steps[i];
  }
  EXPECT_GT(rep.step("build_image").image_bytes, 0u);
  EXPECT_LE(rep.step("ls_r_2").reads, rep.step("ls_r_1").reads);
}

TEST_P(Scenarios, S2StepsAndAccounting) {
  auto rep = run_s2(small(GetParam()));
  ASSERT_TRUE(rep.ok) << rep.error;
  ASSERT_EQ(rep.steps.size(), 10u);
  std::int64_t total = 0, lat = 0;
  for (std::size_t i = 0; i < kS2Steps.size(); ++i) {
    EXPECT_EQ(rep.steps[i].step, kS2Steps[i]);
    total += rep.steps[i].duration_ns;
    lat += latency_ns(rep.steps[i]);
  }
  EXPECT_EQ(total, lat);
}

TEST_P(Scenarios, RunsAreDeterministic) {
  auto a = run_s2(small(GetParam()));
  auto b = run_s2(small(GetParam()));
  EXPECT_EQ(emit_csv({a}), emit_csv({b}));
}

INSTANTIATE_TEST_SUITE_P(AllFfs, Scenarios, ::testing::ValuesIn(kAllFfs),
                         [](const auto &info) { return std::string(to_string(info.param)); });

TEST(Bench, CsvHasOneRowPerStepPlusHeader) {
  auto rep = run_s1(small_s1(FfsKind::Yaffs2));
  auto csv = emit_csv({rep});
  auto lines = std::count(csv.begin(), csv.end(), '\n');
  EXPECT_EQ(lines, static_cast<long>(kS1Steps.size() + 1));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "ffs,codec,axis_value,step,duration_us,reads,writes,erases,meta_ram_bytes,image_bytes");
  auto rows = parse_csv(csv);
  ASSERT_EQ(rows.size(), kS1Steps.size());
  EXPECT_EQ(rows[3].step, "ls_r_1");
  EXPECT_DOUBLE_EQ(rows[3].duration_us, rep.steps[3].duration_us());
}

TEST(Bench, JsonCarriesVersionAndSteps) {
  auto rep = run_s1(small_s1(FfsKind::Ubifs));
  auto j = nlohmann::json::parse(emit_json({rep}));
  EXPECT_EQ(j["reports"][0]["version"], std::string(kToolVersion));
  EXPECT_EQ(j["reports"][0]["steps"].size(), 7u);
}

TEST(Bench, LinearFitRecoversLine) {
  auto f = linear_fit({1, 2, 3, 4}, {3, 5, 7, 9});
  EXPECT_DOUBLE_EQ(f.slope, 2);
  EXPECT_DOUBLE_EQ(f.intercept, 1);
  EXPECT_DOUBLE_EQ(f.r2, 1);
  auto flat = linear_fit({1, 2, 3}, {0, 0, 0});
  EXPECT_DOUBLE_EQ(flat.r2, 1);
  auto noisy = linear_fit({1, 2, 3, 4}, {1, 3, 2, 4});
  EXPECT_LT(noisy.r2, 1);
  EXPECT_THROW(linear_fit({1}, {1}), std::invalid_argument);
}

TEST(Bench, SweepTagsAxisValuesAndFits) {
  auto base = small(FfsKind::Ubifs);
  auto reps = sweep(base, {FfsKind::Ubifs}, SweepAxis::FileCount, {100, 200, 300});
  ASSERT_EQ(reps.size(), 3u);
  EXPECT_EQ(reps[1].axis_value, 200.0);
  auto fits = fit_rows(to_rows(reps));
  EXPECT_EQ(fits.size(), kS2Steps.size());
}

TEST(Bench, NumberFormatting) {
  EXPECT_EQ(format_number(12), "12");
  EXPECT_EQ(format_number(1.5), "1.500");
}
