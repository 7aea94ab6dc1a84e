#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(DCBF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("dcbf_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run("collect --bogus"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("--config " + path("missing.json") + " collect --out " + path("d")), 2);
  std::ofstream(path("bad.json")) << R"({"train": {"sigmaa": 1}})";
  EXPECT_EQ(run("--config " + path("bad.json") + " collect --out " + path("d")), 2);
  EXPECT_EQ(run("eval --policy dcbf --episodes 1"), 2);
  EXPECT_EQ(run("collect --policy dcbf --out " + path("d")), 2);
}

TEST_F(Cli, DataErrorsExitThree) {
  EXPECT_EQ(run("inspect-dataset --data " + path("nothing")), 3);
  EXPECT_EQ(run("eval --policy 'dcbf(" + path("none.ckpt") + ")' --objects 2 --episodes 1"), 3);
  std::ofstream(path("junk.ckpt")) << "not a checkpoint";
  EXPECT_EQ(run("demo --ckpt " + path("junk.ckpt")), 3);
}

TEST_F(Cli, SmallPipelineRuns) {
  const std::string data = path("data");
  ASSERT_EQ(run("--seed 3 collect --policy donothing --n-traj 6 --episode-len 60 --objects 4 --out " + data), 0);
  EXPECT_EQ(run("inspect-dataset --data " + data), 0);
  ASSERT_EQ(run("train --seed 4 --data " + data + " --epochs 1 --out " + path("ckpt/")), 0);
  EXPECT_TRUE(fs::exists(path("ckpt/barrier.ckpt")));
  EXPECT_EQ(run("eval --policy backstep --policy 'dcbf(" + path("ckpt/barrier.ckpt") +
                ")' --objects 2 --episodes 2 --decrease-mode --out " + path("table")),
            0);
  EXPECT_TRUE(fs::exists(path("table.csv")));
  EXPECT_EQ(run("heatmap --ckpt " + path("ckpt/barrier.ckpt") + " --resolution 5 --out " + path("h.csv")), 0);
  EXPECT_TRUE(fs::exists(path("h.csv")));
}

}  // namespace
