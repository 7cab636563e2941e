#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result cli(const std::string& args) {
    std::string cmd = std::string(WFLOW_CLI) + " " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("wflow_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) {
        fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    fs::path dir_;
    const std::string wf_ = std::string(WFLOW_WORKFLOWS) + "/scenario_p.wdsl";
    const std::string cluster_ = std::string(WFLOW_WORKFLOWS) + "/two_nodes.json";
};

}  // namespace

TEST_F(Cli, CompileDiamondEmitsDot) {
    Result r = cli(std::string("compile ") + WFLOW_WORKFLOWS + "/diamond.wdsl --emit-dot --out " + dir_.string());
    EXPECT_EQ(r.code, 0) << r.out;
    std::string dot = slurp(dir_ / "dag.dot");
    EXPECT_EQ(dot.rfind("digraph wdsl {", 0), 0u);
    EXPECT_TRUE(fs::exists(dir_ / "dag.json"));
}

TEST_F(Cli, CompileCycleExitsOne) {
    fs::path wf = write("cycle.wdsl", "b = p(c) @compute_complex(const, 1);\nc = q(b) @compute_complex(const, 1);\n");
    Result r = cli("compile " + wf.string() + " --out " + dir_.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("cycl"), std::string::npos) << r.out;
}

TEST_F(Cli, CompileHopRanks) {
    Result r = cli(std::string("compile ") + WFLOW_WORKFLOWS + "/diamond.wdsl --rank-mode hops --out " + dir_.string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("rank(hops)"), std::string::npos);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    std::getline(lines, line);
    std::istringstream fields(line);
    std::string task, app, procs, est, rank;
    fields >> task >> app >> procs >> est >> rank;
    EXPECT_EQ(task, "f1");
    EXPECT_EQ(rank, "3");
}

TEST_F(Cli, SimulateScenarioP) {
    Result pro = cli("simulate --workflow " + wf_ + " --cluster " + cluster_ + " --scheduler proactive --out " + dir_.string());
    EXPECT_EQ(pro.code, 0) << pro.out;
    EXPECT_NE(pro.out.find("makespan=24.000000s"), std::string::npos) << pro.out;
    EXPECT_TRUE(fs::exists(dir_ / "report.json"));
    EXPECT_TRUE(fs::exists(dir_ / "timeline.csv"));

    Result fcfs = cli("simulate --workflow " + wf_ + " --cluster " + cluster_ + " --scheduler fcfs --out " + dir_.string());
    EXPECT_EQ(fcfs.code, 0);
    EXPECT_NE(fcfs.out.find("makespan=32.000000s"), std::string::npos) << fcfs.out;
}

TEST_F(Cli, SimulateIsDeterministic) {
    fs::path a = dir_ / "a";
    fs::path b = dir_ / "b";
    for (const fs::path& out : {a, b}) {
        ASSERT_EQ(cli("simulate --workflow " + wf_ + " --cluster " + cluster_ + " --scheduler proactive --trace --out " +
                      out.string())
                      .code,
                  0);
    }
    for (const char* f : {"report.json", "timeline.csv", "trace.jsonl"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST_F(Cli, UnknownSchedulerIsUsageError) {
    Result r = cli("simulate --workflow " + wf_ + " --cluster " + cluster_ + " --scheduler magic");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("scheduler"), std::string::npos) << r.out;
}

TEST_F(Cli, CompareAllThree) {
    Result r = cli("compare --workflow " + wf_ + " --cluster " + cluster_ + " --out " + dir_.string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("32.000000"), std::string::npos);
    EXPECT_NE(r.out.find("30.000000"), std::string::npos);
    EXPECT_NE(r.out.find("24.000000"), std::string::npos);
    EXPECT_LT(r.out.find("fcfs"), r.out.find("locality"));
    EXPECT_LT(r.out.find("locality"), r.out.find("proactive"));
}

TEST_F(Cli, CompareSingleScheduler) {
    Result r = cli("compare --workflow " + wf_ + " --cluster " + cluster_ + " --scheduler locality --out " + dir_.string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2);
}

TEST_F(Cli, CompareParseErrorExitsBeforeRunning) {
    fs::path wf = write("bad.wdsl", "file a @size(1 ZB);\n");
    Result r = cli("compare --workflow " + wf.string() + " --cluster " + cluster_ + " --out " + dir_.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.out.find("makespan"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir_ / "compare.json"));
}

TEST_F(Cli, MissingClusterFileIsInputError) {
    Result r = cli("simulate --workflow " + wf_ + " --cluster " + (dir_ / "nope.json").string());
    EXPECT_EQ(r.code, 1);
}
