#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "shubin/cache.hpp"
#include "shubin/runner.hpp"

using namespace shubin;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("shubin_runner_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    fs::path p = dir / "run.ini";
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_quiet(const std::string& cmd, const fs::path& cfg, const fs::path& out, std::string* log_text = nullptr) {
    std::ostringstream log;
    int rc = run({cmd, cfg, out, 1, std::nullopt}, log);
    if (log_text) *log_text = log.str();
    return rc;
}

const char* harmonic_ini = "[operator]\nk = 1\nm = 1\n[grid]\nN = 128\nL = 10\n[spectrum]\ncount = 20\n";

}  // namespace

TEST_CASE("config parsing") {
    auto c = parse_config_text("[operator]\nk = 2\n[control]\nT_values = 0.1, 0.2 ,0.3\n");
    CHECK(c.integer("operator.k", 1) == 2);
    CHECK(c.integer("operator.m", 1) == 1);
    CHECK(c.list("control.T_values", {}) == std::vector<double>{0.1, 0.2, 0.3});
    CHECK_THROWS_AS(parse_config_text(""), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[a]\nx = 1.5\n").integer("a.x", 0), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[a]\nx = abc\n").number("a.x", 0), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[a]\nx = 1\n").text("a.y"), ConfigError);
    CHECK(subcommands().size() == 15);
}

TEST_CASE("config errors exit with 2") {
    auto dir = scratch("cfg");
    CHECK(run_quiet("spectrum", write_config(dir, ""), dir / "out") == exit_config);
    CHECK(run_quiet("spectrum", dir / "missing.ini", dir / "out") == exit_config);
    CHECK(run_quiet("nonsense", write_config(dir, harmonic_ini), dir / "out") == exit_config);
    CHECK(run_quiet("spectrum", write_config(dir, "[operator]\nk = 0\n"), dir / "out") == exit_config);
    CHECK(run_quiet("control", write_config(dir, "[grid]\nN = 128\nL = 10\n[thickset]\nkind = star\n"), dir / "out") ==
          exit_config);
    fs::remove_all(dir);
}

TEST_CASE("spectrum run writes csv, summary and manifest") {
    auto dir = scratch("spec");
    auto cfg = write_config(dir, harmonic_ini);
    REQUIRE(run_quiet("spectrum", cfg, dir / "a") == exit_ok);
    for (const char* f : {"spectrum.csv", "spectrum.summary.json", "manifest.json"}) CHECK(fs::exists(dir / "a" / f));
    auto csv = slurp(dir / "a" / "spectrum.csv");
    CHECK(csv.rfind("# ", 0) == 0);
    auto m = json::parse(slurp(dir / "a" / "manifest.json"));
    CHECK(m["status"] == "ok");
    CHECK(m["command"] == "spectrum");
    CHECK(m["version"] == "0.1.0");
    CHECK(m["eigensystem"]["cached"] == false);
    for (const auto& f : m["files"]) CHECK(f["sha256"] == sha256_file(dir / "a" / f["name"].get<std::string>()));

    // second run in the same output tree hits the cache
    REQUIRE(run_quiet("spectrum", cfg, dir / "a") == exit_ok);
    auto m2 = json::parse(slurp(dir / "a" / "manifest.json"));
    CHECK(m2["eigensystem"]["cached"] == true);
    CHECK(m2["eigensystem"]["key"] == m["eigensystem"]["key"]);

    // fresh output directory: byte-identical artifacts
    REQUIRE(run_quiet("spectrum", cfg, dir / "b") == exit_ok);
    CHECK(slurp(dir / "a" / "spectrum.csv") == slurp(dir / "b" / "spectrum.csv"));
    CHECK(slurp(dir / "a" / "spectrum.summary.json") == slurp(dir / "b" / "spectrum.summary.json"));
    fs::remove_all(dir);
}

TEST_CASE("corrupted cache entries are detected and recomputed") {
    auto dir = scratch("corrupt");
    auto cfg = write_config(dir, harmonic_ini);
    REQUIRE(run_quiet("spectrum", cfg, dir / "o") == exit_ok);
    auto key = json::parse(slurp(dir / "o" / "manifest.json"))["eigensystem"]["key"].get<std::string>();
    fs::path entry = dir / "o" / "cache" / (key + ".eig");
    REQUIRE(fs::exists(entry));
    {
        std::fstream f(entry, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(100);
        char c = 0;
        f.read(&c, 1);
        f.seekp(100);
        c = char(c ^ 0x5a);
        f.write(&c, 1);
    }
    std::string log;
    REQUIRE(run_quiet("spectrum", cfg, dir / "o", &log) == exit_ok);
    auto m = json::parse(slurp(dir / "o" / "manifest.json"));
    CHECK(m["eigensystem"]["cached"] == false);
    CHECK_FALSE(m["eigensystem"]["warning"].get<std::string>().empty());
    CHECK(log.find("warning") != std::string::npos);
    // the entry was rewritten and is valid again
    REQUIRE(run_quiet("spectrum", cfg, dir / "o") == exit_ok);
    CHECK(json::parse(slurp(dir / "o" / "manifest.json"))["eigensystem"]["cached"] == true);
    fs::remove_all(dir);
}

TEST_CASE("changing the box misses the cache") {
    auto dir = scratch("miss");
    REQUIRE(run_quiet("spectrum", write_config(dir, harmonic_ini), dir / "o") == exit_ok);
    auto k1 = json::parse(slurp(dir / "o" / "manifest.json"))["eigensystem"]["key"];
    REQUIRE(run_quiet("spectrum", write_config(dir, "[operator]\nk = 1\n[grid]\nN = 128\nL = 11\n[spectrum]\ncount = 20\n"),
                      dir / "o") == exit_ok);
    auto m = json::parse(slurp(dir / "o" / "manifest.json"));
    CHECK(m["eigensystem"]["cached"] == false);
    CHECK(m["eigensystem"]["key"] != k1);
    fs::remove_all(dir);
}

TEST_CASE("compute failures exit with 3 and keep a manifest") {
    auto dir = scratch("fail");
    // mode 90 is never retained on this box
    auto cfg = write_config(dir, "[grid]\nN = 128\nL = 10\n[control]\nf0_modes = 0, 90\n");
    REQUIRE(run_quiet("control", cfg, dir / "o") == exit_compute);
    auto m = json::parse(slurp(dir / "o" / "manifest.json"));
    CHECK(m["status"] == "compute_error");
    CHECK(m["error"]["message"].get<std::string>().find("not retained") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("command-line front end") {
    auto dir = scratch("cli");
    auto cfg = write_config(dir, harmonic_ini);
    std::string exe = SHUBIN_LAB_EXE;
    auto code = [](int raw) { return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1; };
    CHECK(code(std::system((exe + " spectrum --config " + cfg.string() + " --out " + (dir / "o").string() + " 2>/dev/null").c_str())) == 0);
    CHECK(fs::exists(dir / "o" / "manifest.json"));
    CHECK(code(std::system((exe + " spectrum --out " + (dir / "o").string() + " 2>/dev/null >/dev/null").c_str())) == 2);
    CHECK(code(std::system((exe + " bogus --config " + cfg.string() + " 2>/dev/null >/dev/null").c_str())) == 2);
    fs::remove_all(dir);
}
