// End-to-end checks of the installed command surface. Each test drives the
// real binary through a shell, in its own temp directory.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <unistd.h>

#ifndef CONCEPTGUARD_CLI_PATH
#error "CONCEPTGUARD_CLI_PATH must be defined by the build"
#endif

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cg_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int value = 0;
        return value;
    }
    std::string file(const char* name) const { return (path / name).string(); }
};

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

RunResult run_cli(const TempDir& dir, const std::string& args) {
    const std::string out_path = dir.file("cmd_output.txt");
    const std::string command =
        std::string(CONCEPTGUARD_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
    const int raw = std::system(command.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(out_path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    result.output = buffer.str();
    return result;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

TEST_CASE("cli: synth -> calibrate -> detect pipeline") {
    TempDir dir;
    auto result = run_cli(dir, "synth --out " + dir.file("a.ced") + " --seed 5");
    CHECK(result.exit_code == 0);

    result = run_cli(dir, "calibrate --dump " + dir.file("a.ced") + " --n-calib 30 --seed 2 --out " +
                              dir.file("a.cgp"));
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("l_t=5") != std::string::npos);
    CHECK(result.output.find("l_j=6") != std::string::npos);

    result = run_cli(dir, "detect --dump " + dir.file("a.ced") + " --profile " + dir.file("a.cgp") +
                              " --out " + dir.file("report.txt") + " --json " +
                              dir.file("report.jsonl"));
    CHECK(result.exit_code == 0);
    const std::string report = slurp(dir.file("report.txt"));
    CHECK(report.find("[metrics balanced]") != std::string::npos);
    CHECK(report.find("[metrics full]") != std::string::npos);
    const std::string json = slurp(dir.file("report.jsonl"));
    CHECK(json.find("\"is_jailbreak\":true") != std::string::npos);
    CHECK(json.find("\"metrics\":\"balanced\"") != std::string::npos);
}

TEST_CASE("cli: missing records produce a category-coded error line") {
    TempDir dir;
    auto result = run_cli(dir, "synth --out " + dir.file("small.ced") + " --harmful 3 --seed 1");
    CHECK(result.exit_code == 0);
    result = run_cli(dir, "calibrate --dump " + dir.file("small.ced") + " --n-calib 10 --out " +
                              dir.file("x.cgp"));
    CHECK(result.exit_code != 0);
    CHECK(result.output.find("error: InsufficientRecords:") != std::string::npos);
    CHECK(result.output.find("harmful") != std::string::npos);
}

TEST_CASE("cli: prompts parse errors carry line numbers") {
    TempDir dir;
    {
        std::ofstream prompts(dir.file("p.txt"));
        prompts << "benign 1 2 3\n";
        prompts << "spooky 4 5\n";
    }
    const auto result = run_cli(dir, "embed --prompts " + dir.file("p.txt") + " --out " +
                                         dir.file("x.ced"));
    CHECK(result.exit_code != 0);
    CHECK(result.output.find("error: ParseError:") != std::string::npos);
    CHECK(result.output.find(":2") != std::string::npos);
}

TEST_CASE("cli: toy-model embed, steer gating and tokens") {
    TempDir dir;
    {
        std::ofstream prompts(dir.file("p.txt"));
        for (int i = 0; i < 4; ++i) prompts << "benign " << (i + 1) << " " << (i + 2) << " 7\n";
        for (int i = 0; i < 4; ++i) prompts << "harmful " << (i + 10) << " " << (i + 3) << "\n";
        for (int i = 0; i < 4; ++i)
            prompts << "jailbreak:demo " << (i + 20) << " " << (i + 5) << " 9 11\n";
    }
    auto result = run_cli(dir, "embed --prompts " + dir.file("p.txt") + " --out " +
                                   dir.file("toy.ced") + " --model-seed 42");
    CHECK(result.exit_code == 0);

    result = run_cli(dir, "calibrate --dump " + dir.file("toy.ced") +
                              " --n-calib 4 --seed 3 --out " + dir.file("toy.cgp"));
    CHECK(result.exit_code == 0);

    // gated mode with verdict=0 prompts: unedited output only
    result = run_cli(dir, "steer --prompts " + dir.file("p.txt") + " --profile " +
                              dir.file("toy.cgp") + " --mode gated --max-new 4 --model-seed 42" +
                              " --out " + dir.file("steer_gated.txt"));
    CHECK(result.exit_code == 0);
    const std::string gated = slurp(dir.file("steer_gated.txt"));
    CHECK(gated.find("verdict=") != std::string::npos);
    if (gated.find("verdict=0") != std::string::npos) {
        CHECK(gated.find("steering=skipped") != std::string::npos);
    }

    result = run_cli(dir, "steer --prompts " + dir.file("p.txt") + " --profile " +
                              dir.file("toy.cgp") + " --mode always --max-new 4 --model-seed 42" +
                              " --out " + dir.file("steer_always.txt"));
    CHECK(result.exit_code == 0);
    const std::string always = slurp(dir.file("steer_always.txt"));
    CHECK(always.find("post_proj_j=") != std::string::npos);
    CHECK(always.find("steered:") != std::string::npos);
    CHECK(always.find("[mitigation proxy] steered=12") != std::string::npos);

    // zero-magnitude deltas: steered generations must equal unedited ones
    {
        std::string profile_text = slurp(dir.file("toy.cgp"));
        profile_text = std::regex_replace(profile_text,
                                          std::regex("\"delta_t\":[-0-9.eE+]+"), "\"delta_t\":0");
        profile_text = std::regex_replace(profile_text,
                                          std::regex("\"delta_j\":[-0-9.eE+]+"), "\"delta_j\":0");
        std::ofstream out(dir.file("zero.cgp"));
        out << profile_text;
    }
    result = run_cli(dir, "steer --prompts " + dir.file("p.txt") + " --profile " +
                              dir.file("zero.cgp") + " --mode always --max-new 4 --model-seed 42" +
                              " --out " + dir.file("steer_zero.txt"));
    CHECK(result.exit_code == 0);
    std::istringstream zero_report(slurp(dir.file("steer_zero.txt")));
    std::string line, unedited_line;
    while (std::getline(zero_report, line)) {
        if (line.find("unedited: ") != std::string::npos) {
            unedited_line = line.substr(line.find("unedited: ") + 10);
        } else if (line.find("steered:  ") != std::string::npos) {
            CHECK(line.substr(line.find("steered:  ") + 10) == unedited_line);
        }
    }

    result = run_cli(dir, "tokens --profile " + dir.file("toy.cgp") + " --model-seed 42 --k 4");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("toxic:") != std::string::npos);
    CHECK(result.output.find("jailbreak:") != std::string::npos);
    CHECK(result.output.find("tok") != std::string::npos);

    // no vocabulary source at all
    result = run_cli(dir, "tokens --profile " + dir.file("toy.cgp"));
    CHECK(result.exit_code != 0);
    CHECK(result.output.find("error: MissingVocab:") != std::string::npos);
}

TEST_CASE("cli: eval renders a 1x1 grid that matches detect") {
    TempDir dir;
    CHECK(run_cli(dir, "synth --out " + dir.file("a.ced") + " --seed 9").exit_code == 0);
    CHECK(run_cli(dir, "calibrate --dump " + dir.file("a.ced") + " --seed 4 --out " +
                           dir.file("a.cgp"))
              .exit_code == 0);
    CHECK(run_cli(dir, "detect --dump " + dir.file("a.ced") + " --profile " + dir.file("a.cgp") +
                           " --out " + dir.file("d.txt"))
              .exit_code == 0);
    CHECK(run_cli(dir, "eval --dumps " + dir.file("a.ced") + " --profiles " + dir.file("a.cgp") +
                           " --out " + dir.file("e.txt") + " --json " + dir.file("e.jsonl"))
              .exit_code == 0);

    // the single eval cell equals the detect balanced metrics
    const std::string detect_report = slurp(dir.file("d.txt"));
    const std::string eval_report = slurp(dir.file("e.txt"));
    const auto line_start = detect_report.find("[metrics balanced]");
    REQUIRE(line_start != std::string::npos);
    std::istringstream metrics_line(detect_report.substr(line_start));
    std::string token, accuracy_field;
    metrics_line >> token >> token >> token >> accuracy_field; // accuracy=0.xxxx
    const std::string accuracy = accuracy_field.substr(accuracy_field.find('=') + 1);
    CHECK(eval_report.find(accuracy + "/") != std::string::npos);

    // a broken cell is reported per-cell, not fatally
    CHECK(run_cli(dir, "synth --out " + dir.file("tiny.ced") + " --dim 8 --layers 2 "
                       "--toxic-layer 0 --jailbreak-layer 1 --seed 9")
              .exit_code == 0);
    const auto mixed = run_cli(dir, "eval --dumps " + dir.file("a.ced") + " " + dir.file("tiny.ced") +
                                        " --profiles " + dir.file("a.cgp") + " --out " +
                                        dir.file("e2.txt"));
    CHECK(mixed.exit_code == 0);
    const std::string mixed_report = slurp(dir.file("e2.txt"));
    CHECK(mixed_report.find("error") != std::string::npos);
    CHECK(mixed_report.find("failed") != std::string::npos);
}

TEST_CASE("cli: eval diagonal dominates off-diagonal for distinct jailbreak directions") {
    TempDir dir;
    const std::string shared = " --direction-seed 555 --benign 130 --harmful 130 --jailbreak 130";
    CHECK(run_cli(dir, "synth --out " + dir.file("a.ced") + " --seed 71 --attack tag-a" + shared)
              .exit_code == 0);
    CHECK(run_cli(dir, "synth --out " + dir.file("b.ced") + " --seed 72 --attack tag-b" + shared +
                           " --jailbreak-variant 1")
              .exit_code == 0);
    CHECK(run_cli(dir, "calibrate --dump " + dir.file("a.ced") + " --seed 1 --out " +
                           dir.file("a.cgp"))
              .exit_code == 0);
    CHECK(run_cli(dir, "calibrate --dump " + dir.file("b.ced") + " --seed 1 --out " +
                           dir.file("b.cgp"))
              .exit_code == 0);
    CHECK(run_cli(dir, "eval --dumps " + dir.file("a.ced") + " " + dir.file("b.ced") +
                           " --profiles " + dir.file("a.cgp") + " " + dir.file("b.cgp") +
                           " --out " + dir.file("grid.txt") + " --json " + dir.file("grid.jsonl"))
              .exit_code == 0);

    // pull per-cell F1 from the machine-readable report
    std::ifstream json(dir.file("grid.jsonl"));
    std::string line;
    double f1[2][2] = {{-1, -1}, {-1, -1}};
    while (std::getline(json, line)) {
        const int row = line.find("a.cgp") != std::string::npos ? 0 : 1;
        const int col = line.find("a.ced") != std::string::npos ? 0 : 1;
        const auto pos = line.find("\"f1\":");
        REQUIRE(pos != std::string::npos);
        f1[row][col] = std::stod(line.substr(pos + 5));
    }
    for (int row = 0; row < 2; ++row) {
        for (int col = 0; col < 2; ++col) {
            REQUIRE(f1[row][col] >= 0.0);
            if (row != col) {
                CHECK(f1[row][row] >= f1[row][col] - 0.05);
            }
        }
    }
    // orthogonal jailbreak directions do not transfer
    CHECK(f1[0][0] >= 0.95);
    CHECK(f1[1][1] >= 0.95);
    CHECK(f1[0][1] <= 0.5);
    CHECK(f1[1][0] <= 0.5);
}

TEST_CASE("cli: repeated runs with the same seeds are byte-identical") {
    TempDir first, second;
    for (const TempDir* dir : {&first, &second}) {
        CHECK(run_cli(*dir, "synth --out " + dir->file("a.ced") + " --seed 31").exit_code == 0);
        CHECK(run_cli(*dir, "calibrate --dump " + dir->file("a.ced") + " --seed 8 --out " +
                                dir->file("a.cgp"))
                  .exit_code == 0);
        CHECK(run_cli(*dir, "detect --dump " + dir->file("a.ced") + " --profile " +
                                dir->file("a.cgp") + " --out " + dir->file("r.txt") + " --json " +
                                dir->file("r.jsonl"))
                  .exit_code == 0);
    }
    CHECK(slurp(first.file("a.ced")) == slurp(second.file("a.ced")));
    CHECK(slurp(first.file("a.cgp")) == slurp(second.file("a.cgp")));
    CHECK(slurp(first.file("r.txt")) == slurp(second.file("r.txt")));
    CHECK(slurp(first.file("r.jsonl")) == slurp(second.file("r.jsonl")));
}
