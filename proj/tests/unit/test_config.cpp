#include "nsc/benchmarks.hpp"
#include "nsc/config.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <functional>

using namespace nsc;
using nlohmann::json;

namespace {

struct KeyPath {
    json::json_pointer pointer;
    std::string dotted;
};

void collect(const json& j, const json::json_pointer& ptr, const std::string& dotted, std::vector<KeyPath>& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string d = dotted.empty() ? it.key() : dotted + "." + it.key();
            out.push_back({ptr / it.key(), d});
            collect(it.value(), ptr / it.key(), d, out);
        }
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            collect(j[i], ptr / i, dotted + "[" + std::to_string(i) + "]", out);
    }
}

std::string config_error(const json& doc) {
    try {
        resolve_experiment(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("built-in benchmarks resolve") {
    for (const auto& name : builtin_benchmark_names()) {
        CAPTURE(name);
        const Experiment ex = resolve_experiment(builtin_benchmark(name));
        CHECK(ex.controller.l() <= ex.controller.samples());
        CHECK(ex.controller.cert.K == ex.controller.K);
    }
    CHECK_THROWS(builtin_benchmark("nope"));
}

TEST_CASE("shipped benchmark files equal the built-in definitions") {
    for (const auto& name : builtin_benchmark_names()) {
        CAPTURE(name);
        CHECK(load_config(std::string(NSC_SOURCE_DIR) + "/benchmarks/" + name + ".json") == builtin_benchmark(name));
    }
}

TEST_CASE("auto schedule resolution") {
    const Experiment ex = resolve_experiment(builtin_benchmark("planar"));
    const ControllerConfig& c = ex.controller;
    CHECK(c.h == doctest::Approx(1.0 / 16.0));
    CHECK(c.m == 16);
    CHECK(c.H == static_cast<int>(std::ceil(std::log(256.0) / c.cert.gamma - 1e-9)));
    CHECK_FALSE(c.eta.has_value());
    CHECK(ex.baseline.kappa == 8.0);
    CHECK(ex.baseline.gamma == 0.1);
}

TEST_CASE("any single misspelled key is reported with its path (property)") {
    for (const auto& name : builtin_benchmark_names()) {
        const json doc = builtin_benchmark(name);
        std::vector<KeyPath> keys;
        collect(doc, json::json_pointer(), "", keys);
        REQUIRE(keys.size() > 10);
        for (const auto& k : keys) {
            json bad = doc;
            const std::string key = k.pointer.back();
            json& parent = bad[k.pointer.parent_pointer()];
            parent[key + "_typo"] = parent[key];
            parent.erase(key);
            const std::string msg = config_error(bad);
            CAPTURE(k.dotted);
            CAPTURE(msg);
            const bool names_path = msg.find(k.dotted + "_typo") != std::string::npos ||
                                    msg.find(k.dotted) != std::string::npos;
            CHECK(names_path);
        }
    }
}

TEST_CASE("field errors carry paths") {
    json doc = builtin_benchmark("scalar");
    doc["controller"]["substeps"] = 1;
    CHECK(config_error(doc).rfind("controller.substeps:", 0) == 0);
    doc = builtin_benchmark("planar");
    doc["system"]["A"][1] = json::array({1.0});
    CHECK(config_error(doc).rfind("system.A[1]", 0) == 0);
    doc = builtin_benchmark("scalar");
    doc["disturbance"]["kind"] = "square_wave";
    CHECK(config_error(doc).find("disturbance.kind") != std::string::npos);
    doc = builtin_benchmark("scalar");
    doc["controller"]["h"] = "fast";
    CHECK(config_error(doc).rfind("controller.h:", 0) == 0);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("uncertifiable gains and infeasible schedules surface as typed errors") {
    json doc = builtin_benchmark("scalar");
    doc["controller"]["K"] = json::array({json::array({0.5})});
    CHECK_THROWS_AS(resolve_experiment(doc), NotStronglyStable);
    doc = builtin_benchmark("scalar");
    doc["controller"]["H"] = 100;
    doc["controller"]["m"] = 100;
    CHECK_THROWS_AS(resolve_experiment(doc), InfeasibleSchedule);
}

TEST_CASE("sweep parameters and seed overrides") {
    json doc = builtin_benchmark("planar");
    apply_parameter(doc, "T", 64);
    CHECK(resolve_experiment(doc).controller.h == doctest::Approx(0.125));
    apply_parameter(doc, "H", 3);
    CHECK(resolve_experiment(doc).controller.H == 3);
    apply_parameter(doc, "seed", 11);
    CHECK(doc["disturbance"]["seed"] == 11);
    CHECK(doc["baseline"]["seed"] == 11);
    CHECK_THROWS_AS(apply_parameter(doc, "H", 2.5), ConfigError);
    CHECK_THROWS_AS(apply_parameter(doc, "gamma", 1.0), ConfigError);

    const Experiment a = resolve_experiment(builtin_benchmark("planar"), 99);
    const Experiment b = resolve_experiment(builtin_benchmark("planar"));
    CHECK(a.dist.seed() == 99);
    CHECK(a.baseline.seed == 99);
    CHECK(a.dist.fingerprint() != b.dist.fingerprint());

    ::setenv("NSC_SEED_OVERRIDE", "42", 1);
    CHECK(seed_override_from_env() == std::optional<std::uint64_t>(42));
    ::setenv("NSC_SEED_OVERRIDE", "x1", 1);
    CHECK_THROWS_AS(seed_override_from_env(), ConfigError);
    ::unsetenv("NSC_SEED_OVERRIDE");
    CHECK_FALSE(seed_override_from_env().has_value());
}

TEST_CASE("explicit controller fields") {
    json doc = builtin_benchmark("scalar");
    doc["controller"]["h"] = 0.1;
    doc["controller"]["m"] = 10;
    doc["controller"]["H"] = 2;
    doc["controller"]["eta"] = 0.2;
    doc["controller"]["K"] = "lqr";
    doc["controller"]["decay_base"] = "1-gamma";
    doc["controller"]["kappa"] = 3.0;
    doc["controller"]["gamma"] = 0.5;
    const Experiment ex = resolve_experiment(doc);
    CHECK(ex.controller.K(0, 0) == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-10));
    CHECK(ex.controller.eta == std::optional<double>(0.2));
    CHECK(ex.controller.decay_base == DecayBase::OneMinusGamma);
    CHECK(ex.controller.l() == 20);
    CHECK(ex.controller.dac_class().decay == doctest::Approx(0.5));
    CHECK(ex.controller.cert.kappa == 3.0);
}
