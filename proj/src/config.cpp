#include "nsc/config.hpp"

#include "nsc/stability.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace nsc {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError((path.empty() ? std::string("<root>") : path) + ": " + what);
}

/// Object reader that remembers which keys were consumed so leftovers can be rejected.
class Node {
public:
    Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    const json& raw() const { return *j_; }

    Node object(const std::string& key) {
        Node n(get(key), join(key));
        if (!n.raw().is_object()) fail(n.path(), "expected an object");
        return n;
    }
    std::optional<Node> optional_object(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return object(key);
    }
    Node value(const std::string& key) { return Node(get(key), join(key)); }
    std::optional<Node> optional_value(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return value(key);
    }

    bool has(const std::string& key) const { return j_->contains(key); }

    double number() const {
        if (!j_->is_number()) fail(path_, "expected a number");
        const double v = j_->get<double>();
        if (!std::isfinite(v)) fail(path_, "expected a finite number");
        return v;
    }
    long integer() const {
        if (!j_->is_number_integer()) fail(path_, "expected an integer");
        return j_->get<long>();
    }
    std::uint64_t unsigned_integer() const {
        if (!j_->is_number_integer() || (j_->is_number_integer() && !j_->is_number_unsigned() && j_->get<long>() < 0))
            fail(path_, "expected a nonnegative integer");
        return j_->get<std::uint64_t>();
    }
    bool boolean() const {
        if (!j_->is_boolean()) fail(path_, "expected true or false");
        return j_->get<bool>();
    }
    std::string string() const {
        if (!j_->is_string()) fail(path_, "expected a string");
        return j_->get<std::string>();
    }
    bool is_auto() const { return j_->is_string() && j_->get<std::string>() == "auto"; }

    Matrix matrix() const {
        if (!j_->is_array() || j_->empty()) fail(path_, "expected a nonempty array of rows");
        std::vector<std::vector<double>> rows;
        for (std::size_t r = 0; r < j_->size(); ++r) {
            const json& row = (*j_)[r];
            const std::string rp = path_ + "[" + std::to_string(r) + "]";
            if (!row.is_array() || row.empty()) fail(rp, "expected a nonempty array of numbers");
            std::vector<double> vals;
            for (std::size_t c = 0; c < row.size(); ++c) vals.push_back(Node(row[c], rp + "[" + std::to_string(c) + "]").number());
            if (!rows.empty() && vals.size() != rows.front().size()) fail(rp, "ragged matrix row");
            rows.push_back(std::move(vals));
        }
        return matrix_from_rows(rows);
    }
    Vector vector() const {
        if (!j_->is_array() || j_->empty()) fail(path_, "expected a nonempty array of numbers");
        Vector v(static_cast<Eigen::Index>(j_->size()));
        for (std::size_t i = 0; i < j_->size(); ++i)
            v(static_cast<Eigen::Index>(i)) = Node((*j_)[i], path_ + "[" + std::to_string(i) + "]").number();
        return v;
    }

    /// Rejects keys that were never read.
    void finish() const {
        for (auto it = j_->begin(); it != j_->end(); ++it)
            if (!used_.count(it.key())) fail(join(it.key()), "unknown key");
    }

private:
    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    const json& get(const std::string& key) {
        if (!j_->is_object()) fail(path_, "expected an object");
        if (!j_->contains(key)) fail(join(key), "missing required key");
        used_.insert(key);
        return (*j_)[key];
    }

    const json* j_;
    std::string path_;
    std::set<std::string> used_;
};

double positive(const Node& n) {
    const double v = n.number();
    if (!(v > 0.0)) fail(n.path(), "must be positive");
    return v;
}

DisturbanceSignal::Tone parse_tone(Node& n, int dim) {
    DisturbanceSignal::Tone t;
    t.amplitude = n.value("amplitude").number();
    t.omega = n.value("omega").number();
    if (auto p = n.optional_value("phase")) t.phase = p->number();
    if (auto d = n.optional_value("direction")) {
        t.direction = d->vector();
        if (t.direction->size() != dim) fail(d->path(), "direction must have the state dimension");
    }
    n.finish();
    return t;
}

DisturbanceSignal parse_disturbance(Node n, int dim, std::optional<std::uint64_t> seed_override) {
    const std::string kind = n.value("kind").string();
    std::uint64_t seed = 0;
    if (auto s = n.optional_value("seed")) seed = s->unsigned_integer();
    if (seed_override) seed = *seed_override;
    auto params = n.optional_object("params");
    const json empty = json::object();
    Node p = params ? *params : Node(empty, n.path() + ".params");
    auto W = [&]() { return positive(n.value("W")); };

    auto build = [&]() -> DisturbanceSignal {
        if (kind == "zero") {
            if (n.has("W")) W();
            return DisturbanceSignal::zero(dim);
        }
        if (kind == "constant") {
            Node v = p.value("value");
            Vector c = v.vector();
            if (c.size() != dim) fail(v.path(), "must have the state dimension");
            return DisturbanceSignal::constant(c, W());
        }
        if (kind == "sinusoid") return DisturbanceSignal::sinusoid(dim, parse_tone(p, dim), W(), seed);
        if (kind == "sum_of_sinusoids") {
            Node tones = p.value("tones");
            if (!tones.raw().is_array() || tones.raw().empty()) fail(tones.path(), "expected a nonempty array of tones");
            std::vector<DisturbanceSignal::Tone> list;
            for (std::size_t i = 0; i < tones.raw().size(); ++i) {
                Node t(tones.raw()[i], tones.path() + "[" + std::to_string(i) + "]");
                if (!t.raw().is_object()) fail(t.path(), "expected an object");
                list.push_back(parse_tone(t, dim));
            }
            return DisturbanceSignal::sum_of_sinusoids(dim, list, W(), seed);
        }
        if (kind == "smooth_ramp") {
            Node lv = p.value("level");
            Vector level = lv.vector();
            if (level.size() != dim) fail(lv.path(), "must have the state dimension");
            return DisturbanceSignal::smooth_ramp(level, positive(p.value("tau")), W());
        }
        fail(n.path() + ".kind", "unknown disturbance kind '" + kind + "'");
    };
    try {
        DisturbanceSignal d = build();
        p.finish();
        n.finish();
        return d;
    } catch (const ConfigError&) {
        throw;
    } catch (const ContractViolation& e) {
        fail(n.path(), e.what());
    }
}

ReferenceSignal parse_reference(Node n, int dim) {
    ReferenceSignal ref;
    ref.offset = Vector::Zero(dim);
    if (auto o = n.optional_value("offset")) {
        ref.offset = o->vector();
        if (ref.offset.size() != dim) fail(o->path(), "must have the state dimension");
    }
    if (auto comps = n.optional_value("components")) {
        if (!comps->raw().is_array()) fail(comps->path(), "expected an array");
        for (std::size_t i = 0; i < comps->raw().size(); ++i) {
            Node c(comps->raw()[i], comps->path() + "[" + std::to_string(i) + "]");
            if (!c.raw().is_object()) fail(c.path(), "expected an object");
            ReferenceSignal::Component comp;
            comp.amplitude = c.value("amplitude").number();
            comp.omega = c.value("omega").number();
            if (auto ph = c.optional_value("phase")) comp.phase = ph->number();
            Node d = c.value("direction");
            comp.direction = d.vector();
            if (comp.direction.size() != dim) fail(d.path(), "must have the state dimension");
            c.finish();
            ref.components.push_back(std::move(comp));
        }
    }
    n.finish();
    return ref;
}

CostFn parse_cost(Node n, int dx, int du) {
    const std::string kind = n.value("kind").string();
    Node qn = n.value("Q");
    Node rn = n.value("R");
    const Matrix Q = qn.matrix();
    const Matrix R = rn.matrix();
    if (Q.rows() != dx || Q.cols() != dx) fail(qn.path(), "must be d_x x d_x");
    if (R.rows() != du || R.cols() != du) fail(rn.path(), "must be d_u x d_u");
    std::optional<CostConstants> declared;
    if (auto c = n.optional_object("constants")) {
        CostConstants cc;
        cc.beta = c->value("beta").number();
        cc.G = c->value("G").number();
        cc.L = c->value("L").number();
        c->finish();
        declared = cc;
    }
    try {
        if (kind == "quadratic") {
            n.finish();
            return declared ? CostFn::quadratic(Q, R, *declared) : CostFn::quadratic(Q, R);
        }
        if (kind == "tracking") {
            ReferenceSignal ref = parse_reference(n.object("reference"), dx);
            n.finish();
            return declared ? CostFn::tracking(Q, R, ref, *declared) : CostFn::tracking(Q, R, ref);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const ContractViolation& e) {
        fail(n.path(), e.what());
    }
    fail(n.path() + ".kind", "unknown cost kind '" + kind + "'");
}

}  // namespace

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    try {
        return json::parse(in, nullptr, true, false);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

Experiment resolve_experiment(const json& doc, std::optional<std::uint64_t> seed_override) {
    if (!doc.is_object()) fail("", "expected an object");
    Node root(doc, "");

    Node sn = root.object("system");
    Node an = sn.value("A");
    Node bn = sn.value("B");
    const Matrix A = an.matrix();
    const Matrix B = bn.matrix();
    if (A.rows() != A.cols()) fail(an.path(), "must be square");
    if (B.rows() != A.rows()) fail(bn.path(), "must have as many rows as A");
    std::optional<double> kA, kB;
    if (auto v = sn.optional_value("kappa_A")) kA = v->number();
    if (auto v = sn.optional_value("kappa_B")) kB = v->number();
    sn.finish();
    std::optional<SystemDynamics> sys;
    try {
        sys.emplace(A, B, kA.value_or(spectral_norm(A)), kB.value_or(spectral_norm(B)));
    } catch (const ContractViolation& e) {
        fail(sn.path(), e.what());
    }
    const int dx = sys->state_dim();
    const int du = sys->action_dim();

    DisturbanceSignal dist = parse_disturbance(root.object("disturbance"), dx, seed_override);
    CostFn cost = parse_cost(root.object("cost"), dx, du);

    // Controller.
    Node cn = root.object("controller");
    ControllerConfig cfg;
    cfg.T = positive(cn.value("T"));
    ScheduleConstants sc;
    if (auto s = cn.optional_object("schedule")) {
        if (auto v = s->optional_value("c_h")) sc.c_h = positive(*v);
        if (auto v = s->optional_value("c_m")) sc.c_m = positive(*v);
        if (auto v = s->optional_value("c_H")) sc.c_H = positive(*v);
        s->finish();
    }
    auto number_or_auto = [&](const std::string& key) -> std::optional<Node> {
        auto v = cn.optional_value(key);
        if (!v || v->is_auto()) return std::nullopt;
        return v;
    };
    std::optional<double> h_fixed, eta_fixed, kappa_fixed, gamma_fixed;
    std::optional<long> H_fixed, m_fixed;
    if (auto v = number_or_auto("h")) h_fixed = positive(*v);
    if (auto v = number_or_auto("eta")) {
        eta_fixed = v->number();
        if (*eta_fixed < 0.0) fail(v->path(), "must be nonnegative");
    }
    if (auto v = number_or_auto("H")) {
        H_fixed = v->integer();
        if (*H_fixed < 1) fail(v->path(), "must be >= 1");
    }
    if (auto v = number_or_auto("m")) {
        m_fixed = v->integer();
        if (*m_fixed < 1) fail(v->path(), "must be >= 1");
    }
    if (auto v = number_or_auto("kappa")) kappa_fixed = v->number();
    if (auto v = number_or_auto("gamma")) gamma_fixed = positive(*v);
    if (auto v = cn.optional_value("eta0")) cfg.eta0 = positive(*v);
    if (auto v = cn.optional_value("a")) cfg.a = positive(*v);
    if (auto v = cn.optional_value("substeps")) {
        const long s = v->integer();
        if (s < 2) fail(v->path(), "must be >= 2");
        cfg.substeps = static_cast<int>(s);
    }
    if (auto v = cn.optional_value("decay_base")) {
        const std::string b = v->string();
        if (b == "1-h*gamma")
            cfg.decay_base = DecayBase::OneMinusHGamma;
        else if (b == "1-gamma")
            cfg.decay_base = DecayBase::OneMinusGamma;
        else
            fail(v->path(), "expected \"1-h*gamma\" or \"1-gamma\"");
    }
    auto kn = cn.optional_value("K");
    if (!kn || (kn->raw().is_string() && kn->string() == "lqr")) {
        cfg.K = lqr_gain(*sys, cost.Q(), cost.R());
    } else {
        cfg.K = kn->matrix();
        if (cfg.K.rows() != du || cfg.K.cols() != dx) fail(kn->path(), "must be d_u x d_x");
    }
    cn.finish();

    cfg.h = h_fixed.value_or(sc.c_h / std::sqrt(cfg.T));
    double kappa = 0.0, gamma = 0.0;
    if (kappa_fixed && gamma_fixed) {
        kappa = *kappa_fixed;
        gamma = *gamma_fixed;
    } else {
        const auto [k, g] = best_certificate(*sys, cfg.K, cfg.h);
        kappa = kappa_fixed.value_or(k);
        gamma = gamma_fixed.value_or(g);
    }
    cfg.m = static_cast<int>(m_fixed.value_or(std::max<long>(1, static_cast<long>(std::ceil(sc.c_m / cfg.h - 1e-9)))));
    cfg.H = static_cast<int>(H_fixed.value_or(std::max<long>(
        1, static_cast<long>(std::ceil(sc.c_H.value_or(1.0 / gamma) * std::log(std::max(cfg.T, std::numbers::e)) - 1e-9)))));
    cfg.eta = eta_fixed;
    const CertifyResult cr = certify(*sys, cfg.K, cfg.h, kappa, gamma);
    if (!cr.accepted())
        throw NotStronglyStable("controller gain is not (" + std::to_string(kappa) + ", " + std::to_string(gamma) +
                                ")-strongly stable at h = " + std::to_string(cfg.h) + ": " + cr.refusal->condition);
    cfg.cert = *cr.cert;

    // Baseline.
    BaselineSettings bs;
    if (auto bn2 = root.optional_object("baseline")) {
        Node b = *bn2;
        if (auto v = b.optional_value("enabled")) bs.enabled = v->boolean();
        if (auto v = b.optional_value("method")) {
            const std::string m = v->string();
            if (m == "nelder-mead")
                bs.method = BaselineSettings::Method::NelderMead;
            else if (m == "grid")
                bs.method = BaselineSettings::Method::Grid;
            else
                fail(v->path(), "expected \"nelder-mead\" or \"grid\"");
        }
        if (auto v = b.optional_value("multistarts")) {
            const long ms = v->integer();
            if (ms < 1) fail(v->path(), "must be >= 1");
            bs.multistarts = static_cast<int>(ms);
        }
        if (auto v = b.optional_value("seed")) bs.seed = v->unsigned_integer();
        if (auto v = b.optional_value("kappa"); v && !v->is_auto()) bs.kappa = v->number();
        if (auto v = b.optional_value("gamma"); v && !v->is_auto()) bs.gamma = positive(*v);
        if (auto g = b.optional_object("grid")) {
            bs.grid_min = g->value("min").number();
            bs.grid_max = g->value("max").number();
            bs.grid_step = positive(g->value("step"));
            if (!(bs.grid_max > bs.grid_min)) fail(g->path(), "max must exceed min");
            g->finish();
        } else if (bs.method == BaselineSettings::Method::Grid) {
            fail(b.path() + ".grid", "missing required key");
        }
        if (bs.method == BaselineSettings::Method::Grid && (dx != 1 || du != 1))
            fail(b.path() + ".method", "grid search needs a scalar system");
        if (auto v = b.optional_value("feedback")) {
            const std::string f = v->string();
            if (f == "continuous")
                bs.continuous_feedback = true;
            else if (f != "sampled")
                fail(v->path(), "expected \"sampled\" or \"continuous\"");
        }
        if (auto d = b.optional_object("diagnostics")) {
            if (auto v = d->optional_value("tol")) bs.regret_tol = positive(*v);
            if (auto v = d->optional_value("max_iter")) {
                const long it = v->integer();
                if (it < 1) fail(v->path(), "must be >= 1");
                bs.regret_max_iter = static_cast<int>(it);
            }
            d->finish();
        }
        b.finish();
    }
    if (seed_override) bs.seed = *seed_override;

    OutputSettings os;
    if (auto on = root.optional_object("output")) {
        if (auto v = on->optional_value("csv")) os.csv = v->string();
        if (auto v = on->optional_value("svg")) os.svg = v->string();
        if (auto v = on->optional_value("checkpoint")) os.checkpoint = v->string();
        if (auto v = on->optional_value("summary")) os.summary = v->string();
        on->finish();
    }
    root.finish();

    Experiment ex{std::move(*sys), std::move(dist), std::move(cost), std::move(cfg), bs, os};
    validate(ex.controller, ex.sys);
    return ex;
}

void apply_parameter(json& doc, const std::string& name, double value) {
    if (!doc.is_object()) fail("", "expected an object");
    auto& ctl = doc["controller"];
    if (name == "T" || name == "h" || name == "eta") {
        ctl[name] = value;
    } else if (name == "H" || name == "m") {
        if (value < 1.0 || value != std::floor(value)) fail("controller." + name, "sweep value must be a positive integer");
        ctl[name] = static_cast<long>(value);
    } else if (name == "seed") {
        if (value < 0.0 || value != std::floor(value)) fail("seed", "sweep value must be a nonnegative integer");
        const auto s = static_cast<std::uint64_t>(value);
        doc["disturbance"]["seed"] = s;
        if (doc.contains("baseline")) doc["baseline"]["seed"] = s;
    } else {
        throw ConfigError("sweep: parameter must be one of T, h, H, m, eta, seed (got '" + name + "')");
    }
}

std::optional<std::uint64_t> seed_override_from_env() {
    const char* v = std::getenv("NSC_SEED_OVERRIDE");
    if (!v || !*v) return std::nullopt;
    std::istringstream in(v);
    std::uint64_t s = 0;
    if (!(in >> s) || !in.eof()) throw ConfigError("NSC_SEED_OVERRIDE: expected a nonnegative integer");
    return s;
}

}  // namespace nsc
