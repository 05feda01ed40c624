// Values quoted in the source document, read back from its text and compared
// with the constants the simulator uses.
#include "ffsarena/bench.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>

using namespace ffsarena;

namespace {

const std::string &doc() {
  static const std::string text = [] {
    std::ifstream f(FFSARENA_SOURCE_DOC);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }();
  return text;
}

double number_after(const std::string &pattern) {
  std::smatch m;
  if (!std::regex_search(doc(), m, std::regex(pattern))) {
    ADD_FAILURE() << "pattern not found: " << pattern;
    return -1;
  }
  auto s = m[1].str();
  std::replace(s.begin(), s.end(), ',', '.');
  return std::stod(s);
}

}  // namespace

TEST(PublishedConstants, DocumentIsReadable) { ASSERT_FALSE(doc().empty()); }

TEST(PublishedConstants, FlashLatencies) {
  FlashGeometry g;
  EXPECT_EQ(number_after(R"(read latency of (\d+) \$\\mu\$s)"), static_cast<double>(g.read_latency.count()));
  EXPECT_EQ(number_after(R"(write latency of (\d+) \$\\mu\$s)"), static_cast<double>(g.write_latency.count()));
  EXPECT_EQ(number_after(R"(erase latency of (\d+) ms)") * 1000, static_cast<double>(g.erase_latency.count()));
}

TEST(PublishedConstants, FlashShape) {
  FlashGeometry g;
  EXPECT_EQ(number_after(R"(blocks with (\d+) pages)"), g.pages_per_block);
  EXPECT_EQ(number_after(R"(page size is generally (\d+) bytes)"), g.page_data_bytes);
  EXPECT_EQ(number_after(R"(a (\d+) MB SLC)") * 1024 * 1024, static_cast<double>(g.chip_bytes()));
}

TEST(PublishedConstants, RootfsCorpus) {
  EXPECT_EQ(number_after(R"(contains (\d+) directories and \d+ files)"), kRootfsDirs);
  EXPECT_EQ(number_after(R"(contains \d+ directories and (\d+) files)"), kRootfsFiles);
  EXPECT_EQ(number_after(R"(Average file size is (\d+) KB)") * 1024, static_cast<double>(kRootfsMeanSize));
}

TEST(PublishedConstants, ScenarioOne) {
  auto t = s1_tree(1);
  EXPECT_EQ(number_after(R"(S1\)[\s\S]*?a depth of (\d+))"), t.depth);
  EXPECT_EQ(number_after(R"(norm\((\d+), 1\)\}\), a number of directories)"), t.files_per_dir.mean());
  EXPECT_EQ(number_after(R"(directories per generated directory of \\textit\{norm\((\d+), 1\))"),
            t.dirs_per_dir.mean());
  EXPECT_EQ(number_after(R"(file size of \\textit\{norm\((\d+), 64\))"), t.file_size.mean());
  EXPECT_EQ(t.files_per_dir.to_string(), "norm(4,1)");
  EXPECT_EQ(t.dirs_per_dir.to_string(), "norm(3,1)");
  EXPECT_EQ(t.file_size.to_string(), "norm(1024,64)");
  ScenarioConfig c;
  EXPECT_EQ(number_after(R"(mounted in a (\d+) MB partition)"), c.partition_mb);
}

TEST(PublishedConstants, ScenarioTwo) {
  auto t = s2_tree(1000, 1);
  EXPECT_EQ(number_after(R"(S2\)[\s\S]*?a depth of (\d+))"), t.depth);
  EXPECT_EQ(number_after(R"(a file size of (\d+) bytes)"), t.file_size.mean());
  EXPECT_EQ(number_after(R"((\d+) directories per generated directory)"), t.dirs_per_dir.mean());
  ScenarioConfig c;
  EXPECT_EQ(number_after(R"(we erase a (\d+) MB flash partition)"), c.partition_mb);
}
