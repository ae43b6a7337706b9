#include "catch_amalgamated.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

struct Run {
    int code = -1;
    std::string out;
};

// Runs the CLI with stderr discarded and returns its exit code and stdout.
Run cli(const std::string& args) {
    const std::string cmd = std::string("\"") + DAEPENCIL_CLI + "\" " + args + " 2>/dev/null";
    Run r;
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p);
    std::array<char, 4096> buf{};
    std::size_t got;
    while ((got = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), got);
    const int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string problem(const char* name) { return std::string("\"") + DAEPENCIL_PROBLEM_DIR + "/" + name + "\""; }

std::filesystem::path temp_file(const char* name, const std::string& content) {
    const auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p) << content;
    return p;
}

using Catch::Matchers::ContainsSubstring;

} // namespace

TEST_CASE("analyze", "[cli]") {
    const Run r4 = cli("analyze " + problem("example4.json"));
    CHECK(r4.code == 0);
    CHECK_THAT(r4.out, ContainsSubstring("\"kind\": \"singular\""));
    CHECK_THAT(r4.out, ContainsSubstring("\"rank\": 2"));
    CHECK_THAT(r4.out, ContainsSubstring("\"version\""));

    const Run r1 = cli("analyze " + problem("example1_global.json"));
    CHECK(r1.code == 0);
    CHECK_THAT(r1.out, ContainsSubstring("\"kind\": \"regular\""));
}

TEST_CASE("input errors exit with 2 and print nothing on stdout", "[cli]") {
    const auto bad = temp_file("daepencil_cli_bad.json", "{\"A\": [[1, 0], [0, 0]],");
    const Run r = cli("analyze \"" + bad.string() + "\"");
    CHECK(r.code == 2);
    CHECK(r.out.empty());
    std::filesystem::remove(bad);

    CHECK(cli("analyze /nonexistent.json").code == 2);
    CHECK(cli("frobnicate").code == 2);
    CHECK(cli("").code == 2);

    const auto no_certs = temp_file("daepencil_cli_nocert.json",
                                    R"({"A": [[1, 0], [0, 0]], "B": [[0, 0], [0, 1]], "f": ["2*x2", "x1*x2 - 1"]})");
    CHECK(cli("certify \"" + no_certs.string() + "\"").code == 2);
    std::filesystem::remove(no_certs);
}

TEST_CASE("solve exit codes follow the verdict", "[cli]") {
    const Run blow = cli("solve " + problem("example1_blowup.json"));
    CHECK(blow.code == 4);
    CHECK_THAT(blow.out, ContainsSubstring("\"BlowUp\""));

    const auto csv = std::filesystem::temp_directory_path() / "daepencil_cli_ex3.csv";
    const Run ok = cli("solve " + problem("example3.json") + " --out \"" + csv.string() + "\"");
    CHECK(ok.code == 0);
    CHECK_THAT(ok.out, ContainsSubstring("\"lagrange\": \"Stable\""));
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,x1,x2,res_ae1,res_ae2");
    std::filesystem::remove(csv);

    CHECK(cli("solve " + problem("example4_no_phi.json")).code == 6);
    CHECK(cli("solve " + problem("example1_global.json") + " --horizon 1").code == 0);
}

TEST_CASE("solve can project an inconsistent start", "[cli]") {
    const auto off = temp_file("daepencil_cli_off.json",
                               R"({"A": [[1, 0], [0, 0]], "B": [[0, 0], [0, 1]], "f": ["2*x2", "x1*x2 - 1"],
                                   "initial": {"x0": [3, 0.7]}, "horizon": 1})");
    CHECK(cli("solve \"" + off.string() + "\"").code == 6);
    const Run r = cli("solve \"" + off.string() + "\" --project");
    CHECK(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("\"projected_start\": true"));
    std::filesystem::remove(off);
}

TEST_CASE("certify", "[cli]") {
    const Run r = cli("certify " + problem("example1_global.json") + " --count 512");
    CHECK(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("\"verdict\": \"Mixed\""));

    const Run a = cli("certify " + problem("example2.json") + " --count 256 --seed 9 --jobs 1");
    const Run b = cli("certify " + problem("example2.json") + " --count 256 --seed 9 --jobs 3");
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("selftest", "[cli]") {
    const Run loose = cli("selftest --rtol 1e-2");
    CHECK(loose.code == 1);
    // Example 2 is smooth enough that DP5 stays within 1e-6 even here; Examples 1 and 3 do not.
    CHECK_THAT(loose.out, ContainsSubstring("FAIL  4."));
    CHECK_THAT(loose.out, ContainsSubstring("FAIL  7."));

    const Run missing = cli("selftest --problem-dir /nonexistent");
    CHECK(missing.code == 2);
}
