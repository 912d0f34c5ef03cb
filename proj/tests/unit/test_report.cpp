#include "nsc/benchmarks.hpp"
#include "nsc/config.hpp"
#include "nsc/report.hpp"
#include "nsc/svg.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

using namespace nsc;

namespace {

std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "nsc_unit";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

RunLog scalar_log() {
    const Experiment ex = resolve_experiment(builtin_benchmark("scalar"));
    return run(ex.sys, ex.dist, ex.cost, ex.controller);
}

}  // namespace

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("run CSV header, row count and cumulative cost round-trip") {
    const RunLog log = scalar_log();
    const CsvTable t = parse_csv(run_csv(log));
    CHECK(t.header == std::vector<std::string>{"t", "x0", "u0", "w_hat0", "cost_inst", "cost_cum", "slow_k", "param_hash"});
    REQUIRE(t.rows.size() == log.samples.size());
    const auto inst = t.numeric("cost_inst");
    const auto cum = t.numeric("cost_cum");
    double acc = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        acc += inst[i];
        CHECK(std::abs(acc - cum[i]) <= 1e-10 * std::max(1.0, std::abs(cum[i])));
    }
    CHECK(cum.back() == doctest::Approx(log.J).epsilon(1e-12));
    CHECK(t.numeric("x0")[5] == log.samples[5].x(0));
    CHECK(t.rows[3][t.column("param_hash")] == hex64(log.samples[3].param_hash));
    CHECK_THROWS(t.column("missing"));
}

TEST_CASE("csv parser rejects ragged rows") {
    CHECK_THROWS(parse_csv("a,b\n1\n"));
    CHECK_THROWS(parse_csv(""));
    const CsvTable t = parse_csv("a,b\r\n1,2\r\n");
    CHECK(t.numeric("b")[0] == 2.0);
}

TEST_CASE("checkpoint round-trip and corruption") {
    const RunLog log = scalar_log();
    const std::string path = temp_path("scalar.ckpt");
    write_checkpoint(path, log.final_params());
    const std::string bytes = read_file(path);
    CHECK(bytes.substr(0, 8) == "NSCDAC01");
    const DacParams back = read_checkpoint(path, log.final_params().cls());
    CHECK(back.hash() == log.final_params().hash());
    write_file_atomic(path, "NSCDAC02" + bytes.substr(8));
    CHECK_THROWS(read_checkpoint(path, log.final_params().cls()));
    write_file_atomic(path, bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS(read_checkpoint(path, log.final_params().cls()));
}

TEST_CASE("atomic writes create directories and leave no temporary") {
    const std::string path = temp_path("sub/dir/out.txt");
    write_file_atomic(path, "hello");
    CHECK(read_file(path) == "hello");
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
}

TEST_CASE("log-log slope") {
    std::vector<double> x{64, 256, 1024}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, 0.5));
    CHECK(log_log_slope(x, y) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::isnan(log_log_slope({1.0}, {2.0})));
    CHECK(std::isnan(log_log_slope({1.0, 2.0}, {-1.0, -2.0})));
}

TEST_CASE("svg output is well formed") {
    PlotPanel p{"A & B", "t", "y", false, true, {{"s<1>", {1, 2, 3}, {1, 10, 100}, true}}, {"note"}};
    const std::string svg = render_svg({p, p});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("A &amp; B") != std::string::npos);
    CHECK(svg.find("s&lt;1&gt;") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("nan") == std::string::npos);
}
