#include "nsc/commands.hpp"

#include "nsc/benchmarks.hpp"
#include "nsc/config.hpp"
#include "nsc/experiment.hpp"
#include "nsc/report.hpp"
#include "nsc/svg.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <sstream>
#include <thread>

namespace nsc {

using nlohmann::json;

namespace {

int classify(std::ostream& err) {
    try {
        throw;
    } catch (const ConfigError& e) {
        err << "error: config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const json::exception& e) {
        err << "error: config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IntegrationDivergence& e) {
        err << "error: divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const NonFiniteValue& e) {
        err << "error: divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const InfeasibleSchedule& e) {
        err << "error: infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const CertificationInfeasible& e) {
        err << "error: infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const NotStronglyStable& e) {
        err << "error: infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const CertificationMismatch& e) {
        err << "error: infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

bool finite_outcome(const ExperimentOutcome& o) {
    if (!std::isfinite(o.log.J)) return false;
    if (o.regret && !std::isfinite(o.regret->regret)) return false;
    return true;
}

std::string pick(const std::string& flag, const std::string& configured) { return flag.empty() ? configured : flag; }

}  // namespace

int exit_code_for_current_exception(std::ostream& err) { return classify(err); }

json load_config_or_builtin(const std::string& spec) {
    const std::string prefix = "builtin:";
    if (spec.rfind(prefix, 0) == 0) return builtin_benchmark(spec.substr(prefix.size()));
    return load_config(spec);
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
    try {
        const Experiment ex = resolve_experiment(load_config_or_builtin(args.config), seed_override_from_env());
        const ExperimentOutcome res = run_experiment(ex, !args.no_baseline);
        if (!finite_outcome(res)) {
            err << "error: divergence: non-finite cost\n";
            return kExitDivergence;
        }
        const std::string csv = pick(args.csv, ex.output.csv);
        const std::string svg = pick(args.svg, ex.output.svg);
        const std::string ckpt = pick(args.checkpoint, ex.output.checkpoint);
        const std::string summary_path = pick(args.summary, ex.output.summary);
        if (!csv.empty()) write_file_atomic(csv, run_csv(res.log));
        if (!svg.empty()) write_file_atomic(svg, run_svg(ex, res));
        if (!ckpt.empty()) write_checkpoint(ckpt, res.log.final_params());
        const std::string summary = summary_json(ex, res).dump(2) + "\n";
        if (!summary_path.empty()) write_file_atomic(summary_path, summary);
        out << summary;
        return kExitOk;
    } catch (...) {
        return classify(err);
    }
}

std::vector<SweepRow> run_sweep(const json& doc, const std::string& param, const std::vector<double>& values, int jobs,
                                std::optional<std::uint64_t> seed_override) {
    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < values.size(); i = next++) {
            SweepRow& row = rows[i];
            row.value = values[i];
            const auto start = std::chrono::steady_clock::now();
            try {
                json d = doc;
                apply_parameter(d, param, values[i]);
                const Experiment ex = resolve_experiment(d, seed_override);
                row.T = ex.controller.T;
                row.h = ex.controller.h;
                row.H = ex.controller.H;
                row.m = ex.controller.m;
                const ExperimentOutcome o = run_experiment(ex, true);
                row.J_alg = o.log.J;
                if (o.regret) {
                    row.J_star = o.regret->J_baseline;
                    row.regret = o.regret->regret;
                    row.R0 = o.regret->R0;
                    row.R1 = o.regret->R1;
                    row.R2 = o.regret->R2;
                    row.R3 = o.regret->R3;
                    row.identity_residual = o.regret->identity_residual(ex.controller.h);
                }
                if (!finite_outcome(o)) row.status = "exit3:non-finite cost";
            } catch (...) {
                std::ostringstream msg;
                const int code = classify(msg);
                std::string text = msg.str();
                while (!text.empty() && text.back() == '\n') text.pop_back();
                for (char& c : text)
                    if (c == ',' || c == '\n') c = ';';
                row.status = "exit" + std::to_string(code) + ":" + text;
            }
            row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    };
    const int n = std::max(1, std::min<int>(jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency()),
                                            static_cast<int>(values.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < n; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

std::string sweep_csv(const std::string& param, const std::vector<SweepRow>& rows) {
    std::string out = "param,value,T,h,H,m,J_alg,J_star,regret,R0,R1,R2,R3,identity_residual,wall_time,status\n";
    for (const auto& r : rows) {
        out += param + "," + format_double(r.value) + "," + format_double(r.T) + "," + format_double(r.h) + "," +
               std::to_string(r.H) + "," + std::to_string(r.m) + "," + format_double(r.J_alg) + "," + format_double(r.J_star) + "," +
               format_double(r.regret) + "," + format_double(r.R0) + "," + format_double(r.R1) + "," +
               format_double(r.R2) + "," + format_double(r.R3) + "," + format_double(r.identity_residual) + "," +
               format_double(r.wall_time) + "," + r.status + "\n";
    }
    return out;
}

namespace {

std::string sweep_svg(const std::string& param, const std::vector<SweepRow>& rows) {
    std::vector<double> x, y, r0x, r0y;
    for (const auto& r : rows) {
        if (r.status != "ok") continue;
        x.push_back(r.value);
        y.push_back(r.regret);
        r0x.push_back(r.value);
        r0y.push_back(std::abs(r.R0));
    }
    const double slope = log_log_slope(x, y);
    char buf[96];
    std::snprintf(buf, sizeof buf, "least-squares slope of log(regret) vs log(%s): %.4f", param.c_str(), slope);
    PlotPanel p{"Regret vs " + param, param, "regret", true, true,
                {{"regret", x, y, true}, {"|R0|", r0x, r0y, true}}, {buf}};
    return render_svg({p});
}

}  // namespace

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
    try {
        if (args.values.empty()) throw ConfigError("--values: empty list");
        const json doc = load_config_or_builtin(args.config);
        // Validate the parameter name once before spawning runs.
        json probe = doc;
        apply_parameter(probe, args.param, args.values.front());
        const auto rows = run_sweep(doc, args.param, args.values, args.jobs, seed_override_from_env());
        const std::string csv = args.csv.empty() ? "sweep_" + args.param + ".csv" : args.csv;
        const std::string svg = args.svg.empty() ? "sweep_" + args.param + ".svg" : args.svg;
        const std::string table = sweep_csv(args.param, rows);
        write_file_atomic(csv, table);
        write_file_atomic(svg, sweep_svg(args.param, rows));
        out << table;
        std::size_t failed = 0;
        for (const auto& r : rows)
            if (r.status != "ok") ++failed;
        std::vector<double> x, y;
        for (const auto& r : rows)
            if (r.status == "ok") {
                x.push_back(r.value);
                y.push_back(r.regret);
            }
        out << "slope " << format_double(log_log_slope(x, y)) << "\n";
        if (failed == rows.size()) {
            err << "error: every run failed\n";
            return kExitFailure;
        }
        return kExitOk;
    } catch (...) {
        return classify(err);
    }
}

int cmd_baseline(const std::string& config, std::ostream& out, std::ostream& err) {
    try {
        const Experiment ex = resolve_experiment(load_config_or_builtin(config), seed_override_from_env());
        const BaselineResult b = compute_baseline(ex);
        json j;
        json K = json::array();
        for (Eigen::Index r = 0; r < b.K_star.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < b.K_star.cols(); ++c) row.push_back(b.K_star(r, c));
            K.push_back(row);
        }
        j["K_star"] = K;
        j["J_star"] = b.J_star;
        j["S_star"] = b.S_star;
        j["kappa"] = b.kappa;
        j["gamma"] = b.gamma;
        j["evaluations"] = b.trace.size();
        j["replay_hash"] = hex64(b.replay_hash);
        out << j.dump(2) << "\n";
        return kExitOk;
    } catch (...) {
        return classify(err);
    }
}

int cmd_verify(const std::string& suite, const VerifyOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        bool ok = true;
        for (const auto& r : run_verify(suite, opts)) {
            out << format_check(r) << "\n" << std::flush;
            ok = ok && r.pass;
        }
        return ok ? kExitOk : kExitFailure;
    } catch (...) {
        return classify(err);
    }
}

int cmd_plot(const std::string& csv, const std::string& svg, std::ostream& out, std::ostream& err) {
    try {
        const CsvTable t = parse_csv(read_file(csv));
        std::vector<PlotPanel> panels;
        if (!t.header.empty() && t.header.front() == "t") {
            const auto time = t.numeric("t");
            panels.push_back({"Cumulative cost", "t", "J(t)", false, false, {{"cost_cum", time, t.numeric("cost_cum")}}, {}});
            PlotPanel states{"State", "t", "x", false, false, {}, {}};
            PlotPanel actions{"Action", "t", "u", false, false, {}, {}};
            for (const auto& name : t.header) {
                if (name.size() > 1 && name[0] == 'x') states.series.push_back({name, time, t.numeric(name)});
                if (name.size() > 1 && name[0] == 'u') actions.series.push_back({name, time, t.numeric(name)});
            }
            panels.push_back(states);
            panels.push_back(actions);
        } else {
            const std::string param = t.rows.empty() ? "value" : t.rows.front()[t.column("param")];
            std::vector<SweepRow> rows;
            const auto status = t.column("status");
            const auto v = t.numeric("value"), regret = t.numeric("regret"), r0 = t.numeric("R0");
            for (std::size_t i = 0; i < t.rows.size(); ++i) {
                SweepRow r;
                r.value = v[i];
                r.regret = regret[i];
                r.R0 = r0[i];
                r.status = t.rows[i][status];
                rows.push_back(r);
            }
            write_file_atomic(svg, sweep_svg(param, rows));
            out << "wrote " << svg << "\n";
            return kExitOk;
        }
        write_file_atomic(svg, render_svg(panels));
        out << "wrote " << svg << "\n";
        return kExitOk;
    } catch (...) {
        return classify(err);
    }
}

}  // namespace nsc
