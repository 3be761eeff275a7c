#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vide/cli.hpp"

namespace fs = std::filesystem;
using vide::cli::RunRecord;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = vide::cli::run(args, out, err);
    return CliRun{code, out.str(), err.str()};
}

fs::path temp_file(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("vide_test_" + name);
    std::error_code ec;
    fs::remove(p, ec);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

long parse_field(const std::string& out, const std::string& key) {
    const std::size_t at = out.find(key);
    REQUIRE(at != std::string::npos);
    return std::stol(out.substr(at + key.size()));
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find(sep, pos);
        cells.push_back(line.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return cells;
}

}  // namespace

TEST_CASE("solve a catalog example") {
    CliRun r = run_cli({"solve", "--example", "7", "--tol", "1e-6"});
    CHECK(r.code == 0);
    const long n = parse_field(r.out, "N-selected:");
    CHECK(n >= 13);
    CHECK(n <= 52);
    CHECK(r.out.find("error-vs-exact:") != std::string::npos);
}

TEST_CASE("unknown example exits with code 1") {
    CliRun r = run_cli({"solve", "--example", "99"});
    CHECK(r.code == 1);
    CHECK(r.err.find("unknown example") != std::string::npos);
}

TEST_CASE("approximate references suppress the error-vs-exact field") {
    fs::path csv = temp_file("one.csv");
    CliRun r = run_cli({"solve", "--example", "1", "--tol", "1e-6", "--csv", csv.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("error-vs-exact:") == std::string::npos);
    const std::string content = slurp(csv);
    const std::vector<std::string> lines = split(content, '\n');
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0] == RunRecord::csv_header);
    const RunRecord rec = RunRecord::from_csv_row(lines[1]);
    CHECK(rec.problem == "#1");
    CHECK_FALSE(rec.error_vs_exact.has_value());
    CHECK(rec.estimate <= 1e-6);
    fs::remove(csv);
}

TEST_CASE("run records round-trip through CSV") {
    fs::path csv = temp_file("record.csv");
    CliRun r = run_cli({"solve", "--example", "9", "--tol", "1e-8", "--csv", csv.string()});
    REQUIRE(r.code == 0);
    const std::vector<std::string> lines = split(slurp(csv), '\n');
    REQUIRE(lines.size() >= 2);
    const RunRecord rec = RunRecord::from_csv_row(lines[1]);
    CHECK(rec.csv_row() == lines[1]);  // lossless
    CHECK(rec.epsilon == 1e-8);
    CHECK(rec.mode == "abs");
    fs::remove(csv);
}

TEST_CASE("tolerance failures exit with code 2") {
    CliRun r = run_cli({"solve", "--example", "2", "--tol", "1e-12", "--max-steps", "1000"});
    CHECK(r.code == 2);
    CHECK(r.err.find("not attained") != std::string::npos);
}

TEST_CASE("evaluator domain errors exit with code 3") {
    fs::path prob = temp_file("pole.prob");
    {
        std::ofstream out(prob);
        out << "initial = 0\nf = 1/(0.5 - x)\nkernel.form = yt\nkernel.K = y\n";
    }
    CliRun r = run_cli({"solve", "--file", prob.string(), "--tol", "1e-4"});
    CHECK(r.code == 3);
    CHECK(r.err.find("division by zero") != std::string::npos);
    fs::remove(prob);
}

TEST_CASE("invalid problem files exit with code 1") {
    fs::path prob = temp_file("empty_interval.prob");
    {
        std::ofstream out(prob);
        out << "interval = 1 1\ninitial = 0\nf = x\nkernel.form = yt\nkernel.K = y\n";
    }
    CliRun r = run_cli({"solve", "--file", prob.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("empty interval") != std::string::npos);
    fs::remove(prob);

    CliRun none = run_cli({"solve"});
    CHECK(none.code == 1);

    CliRun badflag = run_cli({"solve", "--example", "7", "--sigma", "1.5"});
    CHECK(badflag.code == 1);
}

TEST_CASE("higher-order problems solve on their native interval") {
    fs::path prob = temp_file("order2.prob");
    {
        std::ofstream out(prob);
        // y'' = cos(x) with y(0) = 1, y'(0) = 0 on [0, 2]: y = 2 - cos(x)
        out << "order = 2\ninterval = 0 2\ninitial = 1 0\nf = cos(x)\n"
               "kernel.form = yt\nkernel.K = 0\nexact = 2 - cos(x)\n";
    }
    CliRun r = run_cli({"solve", "--file", prob.string(), "--tol", "1e-8"});
    CHECK(r.code == 0);
    CHECK(r.out.find("error-vs-exact:") != std::string::npos);
    fs::remove(prob);
}

TEST_CASE("problem files load from text and JSON") {
    const std::string dir = VIDE_PROBLEM_DIR;
    CliRun text = run_cli({"solve", "--file", dir + "/quadratic_on_2_5.prob", "--tol", "1e-8"});
    CHECK(text.code == 0);
    CHECK(text.out.find("error-vs-exact:") != std::string::npos);
    CliRun json = run_cli({"solve", "--file", dir + "/quadratic_on_2_5.json", "--tol", "1e-8"});
    CHECK(json.code == 0);
    CHECK(parse_field(text.out, "N-selected:") == parse_field(json.out, "N-selected:"));
}

TEST_CASE("node dumps carry physical coordinates") {
    fs::path dump = temp_file("nodes.txt");
    CliRun r = run_cli({"solve", "--example", "14", "--tol", "1e-6",
                        "--dump-nodes", dump.string()});
    REQUIRE(r.code == 0);
    const long n = parse_field(r.out, "N-selected:");
    std::vector<std::string> lines = split(slurp(dump), '\n');
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    CHECK(long(lines.size()) == n + 1);
    const std::vector<std::string> first = split(lines.front(), ' ');
    REQUIRE(first.size() == 3);  // x, y1, y2
    CHECK(std::stod(first[0]) == 0.0);
    CHECK(std::stod(first[1]) == 1.0);
    CHECK(std::stod(first[2]) == -1.0);
    fs::remove(dump);
}

TEST_CASE("interval flag re-poses the problem") {
    fs::path dump = temp_file("shifted.txt");
    CliRun r = run_cli({"solve", "--example", "7", "--interval", "1", "3",
                        "--tol", "1e-8", "--dump-nodes", dump.string()});
    REQUIRE(r.code == 0);
    // the catalog reference no longer applies on the new interval
    CHECK(r.out.find("error-vs-exact:") == std::string::npos);
    std::vector<std::string> lines = split(slurp(dump), '\n');
    CHECK(std::stod(split(lines.front(), ' ').front()) == 1.0);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    CHECK(std::stod(split(lines.back(), ' ').front()) == doctest::Approx(3.0).epsilon(1e-12));
    fs::remove(dump);
}

TEST_CASE("tables subset with CSV output") {
    fs::path csv = temp_file("tables.csv");
    CliRun r = run_cli({"tables", "--subset", "7,9", "--csv", csv.string()});
    REQUIRE(r.code == 0);
    const std::vector<std::string> lines = split(slurp(csv), '\n');
    REQUIRE(lines.size() >= 3);
    CHECK(lines[0] == "example,N1,N2,err1,err2,ms1,ms2");
    const std::vector<std::string> row7 = split(lines[1], ',');
    REQUIRE(row7.size() == 7);
    CHECK(row7[0] == "7");
    const double n1 = std::stod(row7[1]);
    const double n2 = std::stod(row7[2]);
    CHECK(n2 / n1 >= 90.0);
    CHECK(n2 / n1 <= 110.0);
    CHECK(std::stod(row7[3]) <= 1e-6);
    CHECK(std::stod(row7[4]) <= 1e-12);
    fs::remove(csv);
}

TEST_CASE("identical invocations differ only in the timing columns") {
    fs::path a = temp_file("det_a.csv");
    fs::path b = temp_file("det_b.csv");
    REQUIRE(run_cli({"tables", "--subset", "7,10", "--csv", a.string()}).code == 0);
    REQUIRE(run_cli({"tables", "--subset", "7,10", "--csv", b.string()}).code == 0);
    const std::vector<std::string> la = split(slurp(a), '\n');
    const std::vector<std::string> lb = split(slurp(b), '\n');
    REQUIRE(la.size() == lb.size());
    for (std::size_t i = 0; i < la.size(); ++i) {
        std::vector<std::string> ca = split(la[i], ',');
        std::vector<std::string> cb = split(lb[i], ',');
        REQUIRE(ca.size() == cb.size());
        for (std::size_t c = 0; c + 2 < ca.size() || (ca.size() < 3 && c < ca.size()); ++c)
            CHECK(ca[c] == cb[c]);  // everything except ms1, ms2
    }
    fs::remove(a);
    fs::remove(b);
}

TEST_CASE("convergence study") {
    CliRun r = run_cli({"convergence", "--example", "8", "--orders", "1,3", "--levels", "4"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("err(p=1)") != std::string::npos);
    CHECK(r.out.find("err(p=3)") != std::string::npos);
    // four data rows after the two header lines
    const std::vector<std::string> lines = split(r.out, '\n');
    long rows = 0;
    for (const std::string& l : lines)
        if (!l.empty() && l[0] != '#' && l.find("err(") == std::string::npos) ++rows;
    CHECK(rows == 4);

    CHECK(run_cli({"convergence", "--example", "1"}).code == 1);    // approximate reference
    CHECK(run_cli({"convergence", "--example", "8", "--orders", "6"}).code == 1);
    CHECK(run_cli({"convergence", "--example", "99"}).code == 1);
}

TEST_CASE("help and missing subcommands") {
    CHECK(run_cli({"--help"}).code == 0);
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"frobnicate"}).code == 1);
}
