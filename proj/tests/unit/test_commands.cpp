#include "nsc/benchmarks.hpp"
#include "nsc/commands.hpp"
#include "nsc/report.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace nsc;
using nlohmann::json;

namespace {

std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "nsc_cmd" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string write_config(const std::string& dir, const json& doc) {
    const std::string path = dir + "/config.json";
    write_file_atomic(path, doc.dump(2));
    return path;
}

}  // namespace

TEST_CASE("zero disturbance run writes zero states and zero regret") {
    const std::string dir = temp_dir("zero");
    json doc = builtin_benchmark("scalar");
    doc["disturbance"] = {{"kind", "zero"}};
    doc["controller"]["T"] = 5;
    doc["output"] = {{"csv", dir + "/run.csv"}, {"summary", dir + "/summary.json"}};
    std::ostringstream out, err;
    REQUIRE(cmd_run({write_config(dir, doc)}, out, err) == kExitOk);
    const CsvTable t = parse_csv(read_file(dir + "/run.csv"));
    for (double x : t.numeric("x0")) CHECK(x == 0.0);
    const json s = json::parse(read_file(dir + "/summary.json"));
    CHECK(s["regret"]["regret"] == 0.0);
    CHECK(json::parse(out.str()) == s);
}

TEST_CASE("summary regret matches a recomputation from the CSV") {
    const std::string dir = temp_dir("regret");
    RunArgs args{"builtin:scalar", dir + "/r.csv", dir + "/r.svg", dir + "/r.ckpt", dir + "/r.json", false};
    std::ostringstream out, err;
    REQUIRE(cmd_run(args, out, err) == kExitOk);
    const json s = json::parse(read_file(dir + "/r.json"));
    const double J = parse_csv(read_file(dir + "/r.csv")).numeric("cost_cum").back();
    const double J_star = s["baseline"]["J_star"];
    CHECK(static_cast<double>(s["regret"]["regret"]) == doctest::Approx(J - J_star).epsilon(1e-12));
    CHECK(std::filesystem::exists(dir + "/r.svg"));
    CHECK(std::filesystem::exists(dir + "/r.ckpt"));
}

TEST_CASE("exit codes by failure class") {
    const std::string dir = temp_dir("codes");
    std::ostringstream out, err;
    json doc = builtin_benchmark("scalar");
    doc["controller"]["substep"] = 8;
    CHECK(cmd_run({write_config(dir, doc)}, out, err) == kExitConfig);
    CHECK(err.str().find("controller.substep") != std::string::npos);
    write_file_atomic(dir + "/broken.json", "{\"system\": ");
    CHECK(cmd_run({dir + "/broken.json"}, out, err) == kExitConfig);
    CHECK(cmd_run({dir + "/missing.json"}, out, err) == kExitConfig);

    doc = builtin_benchmark("scalar");
    doc["controller"]["K"] = json::array({json::array({0.5})});
    CHECK(cmd_run({write_config(dir, doc)}, out, err) == kExitInfeasible);
    doc = builtin_benchmark("scalar");
    doc["controller"]["H"] = 100;
    doc["controller"]["m"] = 100;
    CHECK(cmd_run({write_config(dir, doc)}, out, err) == kExitInfeasible);

    // A forcing near the top of the double range overflows the cost.
    doc = builtin_benchmark("scalar");
    doc["system"]["A"] = json::array({json::array({0.0})});
    doc["controller"]["K"] = json::array({json::array({1.0})});
    doc["controller"]["T"] = 5;
    doc["controller"]["h"] = 0.1;
    doc["controller"]["m"] = 1;
    doc["controller"]["H"] = 1;
    doc["disturbance"] = {{"kind", "constant"}, {"params", {{"value", json::array({1e200})}}}, {"W", 1e200}};
    doc["baseline"]["enabled"] = false;
    doc["output"] = json::object();
    const int code = cmd_run({write_config(dir, doc)}, out, err);
    CHECK(code == kExitDivergence);
}

TEST_CASE("sweep rows keep order and record per-row failures") {
    json doc = builtin_benchmark("scalar");
    doc["controller"]["T"] = 10;
    doc["controller"]["H"] = 2;
    const auto rows = run_sweep(doc, "m", {2, 1000, 3}, 2, std::nullopt);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].status == "ok");
    CHECK(rows[1].status.rfind("exit4:", 0) == 0);
    CHECK(rows[2].status == "ok");
    CHECK(rows[0].m == 2);
    CHECK(rows[2].m == 3);
    const auto serial = run_sweep(doc, "m", {2, 1000, 3}, 1, std::nullopt);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].regret == serial[i].regret);
        CHECK(rows[i].R2 == serial[i].R2);
    }
    const CsvTable t = parse_csv(sweep_csv("m", rows));
    CHECK(t.rows.size() == 3);
    CHECK(t.rows[1][t.column("param")] == "m");
}

TEST_CASE("sweep with every run failing exits nonzero") {
    const std::string dir = temp_dir("sweepfail");
    json doc = builtin_benchmark("scalar");
    doc["controller"]["H"] = 100;
    SweepArgs args{write_config(dir, doc), "m", {100, 200}, 1, dir + "/s.csv", dir + "/s.svg"};
    std::ostringstream out, err;
    CHECK(cmd_sweep(args, out, err) == kExitFailure);
    args.param = "zeta";
    CHECK(cmd_sweep(args, out, err) == kExitConfig);
}

TEST_CASE("plot renders run and sweep tables") {
    const std::string dir = temp_dir("plot");
    std::ostringstream out, err;
    RunArgs args{"builtin:scalar", dir + "/r.csv", "", "", dir + "/r.json", true};
    REQUIRE(cmd_run(args, out, err) == kExitOk);
    CHECK(cmd_plot(dir + "/r.csv", dir + "/r.svg", out, err) == kExitOk);
    CHECK(read_file(dir + "/r.svg").find("Cumulative cost") != std::string::npos);
    json doc = builtin_benchmark("scalar");
    doc["controller"]["T"] = 10;
    write_file_atomic(dir + "/s.csv", sweep_csv("T", run_sweep(doc, "T", {10, 20}, 1, std::nullopt)));
    CHECK(cmd_plot(dir + "/s.csv", dir + "/s.svg", out, err) == kExitOk);
    CHECK(read_file(dir + "/s.svg").find("slope") != std::string::npos);
    CHECK(cmd_plot(dir + "/absent.csv", dir + "/x.svg", out, err) == kExitFailure);
}
