#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "edgeps/edgeps.hpp"

using namespace edgeps;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out;
};

CliRun run(const std::string& args) {
    const std::string cmd = std::string(EDGEPS_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed");
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int status = ::pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("edgeps_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

double value_of(const std::string& out, const std::string& key) {
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(key + ",", 0) == 0) return std::stod(line.substr(key.size() + 1));
    }
    throw std::runtime_error("missing " + key);
}

}  // namespace

TEST_F(Cli, KernelRows) {
    const CliRun r = run("kernel --de 1");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "0 -1 0\n-1 4 -1\n0 -1 0\n");
    const CliRun k3 = run("kernel --de 3");
    std::istringstream in(k3.out);
    std::string line;
    int rows = 0, total = 0;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        int v, cols = 0;
        while (row >> v) {
            total += v;
            ++cols;
        }
        EXPECT_EQ(cols, 7);
        ++rows;
    }
    EXPECT_EQ(rows, 7);
    EXPECT_EQ(total, 0);
    EXPECT_EQ(run("kernel --de 0").code, 2);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("nosuch").code, 2);
    EXPECT_EQ(run("kernel").code, 2);
    EXPECT_EQ(run("loss --kind xx --pred a --gt b").code, 2);
}

TEST_F(Cli, ExtractEdges) {
    save_pgm(LabelMap(Raster<int>(8, 8, 0), 2), path("uniform.pgm"));
    CliRun r = run("extract-edges --in " + path("uniform.pgm") + " --de 1 --out " + path("e.pgm"));
    EXPECT_EQ(r.code, 0);
    const LabelMap e = load_label_map(path("e.pgm"), 2);
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_TRUE(e.ignored(i));

    Raster<int> ids(12, 6, 0);
    for (int y = 0; y < 6; ++y)
        for (int x = 6; x < 12; ++x) ids(x, y) = 1;
    save_pgm(LabelMap(ids, 2), path("split.pgm"));
    r = run("extract-edges --in " + path("split.pgm") + " --de 2 --out " + path("s.pgm"));
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "class,edge_pixels\n0,12\n1,12\n");

    {
        std::ofstream bad(path("bad.pgm"));
        bad << "P9 nonsense";
    }
    EXPECT_EQ(run("extract-edges --in " + path("bad.pgm") + " --de 1 --out " + path("x.pgm")).code, 3);
    save_pgm(LabelMap(4, 4, 2), path("ignored.pgm"));
    EXPECT_EQ(run("extract-edges --in " + path("ignored.pgm") + " --de 1 --out " + path("x.pgm")).code, 4);
}

TEST_F(Cli, PhdOnAnnulus) {
    save_pgm(to_soft(gen_band(BandSpec::annulus(10, 15, 64))), path("band.pgm"));
    const CliRun r100 = run("phd --in " + path("band.pgm") + " --n 100 --sigma 0.1 --delta 2");
    EXPECT_EQ(r100.code, 0);
    EXPECT_NEAR(value_of(r100.out, "phd"), 5.0, 1.0);
    EXPECT_NE(r100.out.find("ray,theta,members,used,inner_max,outer_min,gap\n"), std::string::npos);

    const CliRun r8 = run("phd --in " + path("band.pgm") + " --n 8 --loss --de 5");
    EXPECT_LE(std::fabs(value_of(r8.out, "phd") - value_of(r100.out, "phd")), 2.0);
    EXPECT_LE(value_of(r8.out, "ph_loss"), 1.0);

    const CliRun smooth = run("phd --in " + path("band.pgm") + " --smooth --tau 0.05 --beta 20");
    EXPECT_EQ(smooth.code, 0);
    EXPECT_NEAR(value_of(smooth.out, "phd"), value_of(r8.out, "phd"), 1.0);

    save_pgm(SoftMask(16, 16, 0.0), path("empty.pgm"));
    EXPECT_EQ(run("phd --in " + path("empty.pgm")).code, 4);
}

TEST_F(Cli, Losses) {
    BinaryMask g(3, 1, 0);
    g(1, 0) = 1;
    save_pgm(LabelMap(Raster<int>(3, 1, std::vector<int>{0, 1, 0}), 2), path("g.pgm"));
    save_pgm(SoftMask(3, 1, 1.0), path("ones.pgm"));
    CliRun r = run("loss --kind bd --pred " + path("ones.pgm") + " --gt " + path("g.pgm"));
    EXPECT_EQ(r.code, 0);
    EXPECT_NEAR(value_of(r.out, "loss"), 2.0 / 3.0, 1e-6);

    Raster<int> ids(16, 16, 0);
    SoftMask same(16, 16, 0.0);
    for (int y = 4; y < 10; ++y)
        for (int x = 3; x < 12; ++x) {
            ids(x, y) = 1;
            same(x, y) = 1.0;
        }
    save_pgm(LabelMap(ids, 2), path("rect.pgm"));
    save_pgm(same, path("rect_pred.pgm"));
    r = run("loss --kind hd --pred " + path("rect_pred.pgm") + " --gt " + path("rect.pgm"));
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(value_of(r.out, "loss"), 0.0);

    r = run("loss --kind ce --pred " + path("rect_pred.pgm") + " --gt " + path("rect.pgm"));
    EXPECT_EQ(r.code, 0);
    EXPECT_LE(value_of(r.out, "loss"), 1e-6);
    save_pgm(SoftMask(16, 16, 0.5), path("half.pgm"));
    r = run("loss --kind ce --pred " + path("half.pgm") + " --gt " + path("rect.pgm"));
    EXPECT_NEAR(value_of(r.out, "loss"), std::log(2.0), 1e-4);

    save_pgm(SoftMask(4, 4, 0.0), path("small.pgm"));
    EXPECT_EQ(run("loss --kind bd --pred " + path("small.pgm") + " --gt " + path("rect.pgm")).code, 3);
}

TEST_F(Cli, SweepThickness) {
    const CliRun r = run("sweep-thickness --de 3 --tmin 1 --tmax 6 --out " + path("sweep.csv"));
    EXPECT_EQ(r.code, 0);
    const std::string csv = slurp(path("sweep.csv"));
    EXPECT_EQ(csv.rfind("t,ph_loss,argmin\n", 0), 0u);
    int flagged = 0;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) flagged += line.back() == '1';
    EXPECT_EQ(flagged, 1);
    EXPECT_EQ(run("sweep-thickness --de 5 --tmin 6 --tmax 2 --out " + path("x.csv")).code, 2);
}

TEST_F(Cli, GenTrainEvalAreDeterministic) {
    ASSERT_EQ(run("gen-data --out " + path("ds") + " --count 6 --size 32 --min-scale 4 --max-scale 7").code, 0);
    EXPECT_EQ(load_dataset(path("ds")).size(), 6u);
    const std::string train = " --data " + path("ds") + " --steps 10 --batch 2 --width1 4 --width2 4 --min-edge-pixels 8";
    const CliRun a = run("train --out " + path("a") + train);
    const CliRun b = run("train --out " + path("b") + train);
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    for (const char* f : {"summary.csv", "baseline_steps.csv", "eps_steps.csv", "eps_ph_steps.csv", "eps_metrics.csv"}) {
        EXPECT_EQ(slurp(path("a") + "/" + f), slurp(path("b") + "/" + f)) << f;
    }
    EXPECT_TRUE(fs::exists(path("a") + "/eps_ph_pred/0001_pred.pgm"));

    const CliRun pred = run("eval --pred " + path("a") + "/eps_pred --gt " + path("ds") + " --out " + path("m.csv"));
    EXPECT_EQ(pred.code, 0);
    EXPECT_EQ(slurp(path("m.csv")), pred.out);

    fs::create_directories(path("gt_only"));
    fs::copy_file(path("ds") + "/0000_gt.pgm", path("gt_only") + "/0000_gt.pgm");
    const CliRun same = run("eval --pred " + path("gt_only") + " --gt " + path("gt_only") + " --out " + path("p.csv"));
    EXPECT_EQ(same.code, 0);
    EXPECT_EQ(value_of(same.out, "mIoU"), 1.0);
}

TEST_F(Cli, GradcheckPasses) {
    const CliRun r = run("gradcheck --seeds 2");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out.rfind("suite,seed,checked,max_rel_error,passed\n", 0), 0u);
}
