#include "auggs/scene_io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace auggs;

namespace {

struct CliResult {
    int code = -1;
    std::string output;
};

CliResult cli(const std::string& args, const fs::path& dir) {
    const fs::path log = dir / "cli.log";
    const std::string cmd = std::string(AUGGS_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              (std::string("auggs_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    fs::path dir;
};

} // namespace

TEST_F(Cli, FixtureTrainRenderEvaluate) {
    const std::string scene = (dir / "scene").string();
    ASSERT_EQ(cli("-q make-fixture --out " + scene + " --size 24 --gaussians 6 --train-views 3 --heldout-views 2", dir)
                  .code,
              0);
    EXPECT_TRUE(fs::exists(dir / "scene" / "scene.json"));
    EXPECT_TRUE(fs::exists(dir / "scene" / "gt.ply"));

    std::ofstream(dir / "cfg.json") << R"({"coarse_iters": 20, "fine_iters": 10, "coarse_sh_degree": 0,
        "fine_sh_degree": 0, "init": {"point_count": 200}, "mask": {"min_points": 20}})";
    const std::string out = (dir / "out").string();
    const CliResult train = cli("-q train --scene " + scene + " --config " + (dir / "cfg.json").string() + " --out " + out, dir);
    ASSERT_EQ(train.code, 0) << train.output;
    EXPECT_NE(train.output.find("heldout  mean"), std::string::npos);
    for (const char* f : {"coarse.ply", "fine.ply", "best_heldout.ply", "report.json", "pseudo/pseudo_0.png"}) {
        EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
    }

    std::ofstream(dir / "cam.json") << nlohmann::json::parse(read_file(dir / "scene" / "scene.json"))["views"][0]["camera"];
    const CliResult render =
        cli("render --ply " + out + "/fine.ply --camera " + (dir / "cam.json").string() + " --out " +
                (dir / "r.png").string(),
            dir);
    ASSERT_EQ(render.code, 0) << render.output;
    EXPECT_EQ(load_image(dir / "r.png").width, 24);

    const CliResult eval = cli("evaluate --ply " + scene + "/gt.ply --scene " + scene + " --split heldout", dir);
    ASSERT_EQ(eval.code, 0) << eval.output;
    EXPECT_NE(eval.output.find("heldout_1"), std::string::npos);
    EXPECT_EQ(eval.output.find("train_0"), std::string::npos);
}

TEST_F(Cli, UserErrorsExitWithOne) {
    EXPECT_EQ(cli("", dir).code, 1);
    EXPECT_EQ(cli("train --scene x", dir).code, 1);
    EXPECT_EQ(cli("frobnicate", dir).code, 1);
    EXPECT_EQ(cli("-q train --scene " + (dir / "missing").string() + " --out " + (dir / "o").string(), dir).code, 1);
    std::ofstream(dir / "bad.json") << R"({"coarse_iters": "lots"})";
    EXPECT_EQ(cli("-q make-fixture --out " + (dir / "s").string() + " --size 12 --gaussians 2 --train-views 2", dir).code,
              0);
    EXPECT_EQ(cli("-q train --scene " + (dir / "s").string() + " --config " + (dir / "bad.json").string() + " --out " +
                      (dir / "o").string(),
                  dir)
                  .code,
              1);
    EXPECT_EQ(cli("evaluate --ply " + (dir / "none.ply").string() + " --scene " + (dir / "s").string(), dir).code, 1);
    EXPECT_EQ(cli("evaluate --ply a --scene b --split sideways", dir).code, 1);
}

TEST_F(Cli, HelpExitsWithZero) {
    const CliResult r = cli("--help", dir);
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.output.find("make-fixture"), std::string::npos);
}
