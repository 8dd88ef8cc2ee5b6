#include "curvecmp/io.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <tuple>

#include "curvecmp/error.hpp"

namespace curvecmp::io {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw InvalidInput(where + ": " + what);
}

// Object view that rejects keys nobody asked about.
class Fields {
public:
    Fields(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) fail(where_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const Json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) fail(where_, "missing field '" + key + "'");
        return j_.at(key);
    }

    const Json* get(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string path(const std::string& key) const { return where_ + "." + key; }

    void done() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) fail(where_, "unknown field '" + k + "'");
    }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

double number(const Json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

std::uint64_t unsigned_int(const Json& j, const std::string& where) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0))
        fail(where, "expected a nonnegative integer");
    return j.get<std::uint64_t>();
}

std::string text(const Json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
}

std::vector<double> numbers(const Json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

std::pair<double, double> number_pair(const Json& j, const std::string& where) {
    const std::vector<double> v = numbers(j, where);
    if (v.size() != 2) fail(where, "expected two numbers");
    return {v[0], v[1]};
}

Interval interval(const Json& j, const std::string& where) {
    const auto [lo, hi] = number_pair(j, where);
    try {
        return Interval::make(lo, hi);
    } catch (const InvalidInput& e) {
        fail(where, e.what());
    }
}

WeightFunction weight_function(const Json& j, const std::string& where) {
    Fields f(j, where);
    const std::string form = text(f.at("form"), f.path("form"));
    double a = 0.0;
    if (const Json* v = f.get("a")) a = number(*v, f.path("a"));
    f.done();
    if (form == "constant") return WeightFunction::constant();
    if (form == "exponential") return WeightFunction::exponential(a);
    if (form == "power") return WeightFunction::power(a);
    fail(f.path("form"), "unknown weight form '" + form + "' (constant, exponential, power)");
}

ModelSpec model(const Json& j, const std::string& where) {
    Fields f(j, where);
    const std::string name = text(f.at("name"), f.path("name"));
    std::vector<double> theta;
    if (const Json* v = f.get("theta")) theta = numbers(*v, f.path("theta"));
    std::string variant;
    if (const Json* v = f.get("variant")) variant = text(*v, f.path("variant"));
    int degree = -1;
    if (const Json* v = f.get("degree")) degree = static_cast<int>(unsigned_int(*v, f.path("degree")));
    WeightFunction w;
    if (const Json* v = f.get("weight")) w = weight_function(*v, f.path("weight"));
    f.done();
    try {
        return make_model(name, theta, variant, degree, w);
    } catch (const InvalidInput& e) {
        fail(where, e.what());
    }
}

Quadrature lambda_measure(const Json& j, const std::string& where, const Interval& region) {
    Fields f(j, where);
    const std::string type = text(f.at("type"), f.path("type"));
    Quadrature q;
    if (type == "trapezoid") {
        std::size_t n = CriterionSpec::kDefaultNodes;
        if (const Json* v = f.get("nodes")) n = unsigned_int(*v, f.path("nodes"));
        q = Quadrature::trapezoid(region, n);
    } else if (type == "point") {
        q = Quadrature::point_mass(number(f.at("at"), f.path("at")));
    } else if (type == "discrete") {
        q.nodes = numbers(f.at("nodes"), f.path("nodes"));
        q.weights = numbers(f.at("weights"), f.path("weights"));
    } else {
        fail(f.path("type"), "unknown lambda type '" + type + "' (trapezoid, point, discrete)");
    }
    f.done();
    return q;
}

void pso_overrides(const Json& j, const std::string& where, OptimizeOptions& o) {
    Fields f(j, where);
    if (const Json* v = f.get("swarm_size")) o.pso.swarm_size = unsigned_int(*v, f.path("swarm_size"));
    if (const Json* v = f.get("inertia")) o.pso.inertia = number(*v, f.path("inertia"));
    if (const Json* v = f.get("cognitive")) o.pso.cognitive = number(*v, f.path("cognitive"));
    if (const Json* v = f.get("social")) o.pso.social = number(*v, f.path("social"));
    if (const Json* v = f.get("max_iters")) o.pso.max_iters = unsigned_int(*v, f.path("max_iters"));
    if (const Json* v = f.get("stagnation_window"))
        o.pso.stagnation_window = unsigned_int(*v, f.path("stagnation_window"));
    if (const Json* v = f.get("restarts")) o.restarts = unsigned_int(*v, f.path("restarts"));
    if (const Json* v = f.get("polish_rounds")) o.polish_rounds = unsigned_int(*v, f.path("polish_rounds"));
    f.done();
    try {
        o.pso.validate();
    } catch (const InvalidInput& e) {
        fail(where, e.what());
    }
}

void check_overrides(const Json& j, const std::string& where, OptimizeOptions& o) {
    Fields f(j, where);
    if (const Json* v = f.get("threshold")) o.threshold = number(*v, f.path("threshold"));
    if (const Json* v = f.get("cert_tol")) o.check.cert_tol = number(*v, f.path("cert_tol"));
    if (const Json* v = f.get("grid")) o.check.grid = unsigned_int(*v, f.path("grid"));
    f.done();
    try {
        o.check.validate();
    } catch (const InvalidInput& e) {
        fail(where, e.what());
    }
    if (!(o.threshold > 0.0 && o.threshold <= 1.0)) fail(f.path("threshold"), "must lie in (0, 1]");
}

Json numbers_json(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(x);
    return a;
}

std::string order_string(const NormOrder& o) { return o.is_infinite() ? "inf" : o.to_string(); }

}  // namespace

Scenario parse_scenario(const Json& j) {
    Fields f(j, "scenario");
    const std::string schema = text(f.at("schema"), "scenario.schema");
    if (schema != kScenarioSchema) fail("scenario.schema", "expected '" + std::string(kScenarioSchema) + "'");

    Scenario s;
    Problem& p = s.problem;
    const Json& models = f.at("models");
    if (!models.is_array() || models.size() != 2) fail("scenario.models", "expected an array of two models");
    p.g1.model = model(models[0], "scenario.models[0]");
    p.g2.model = model(models[1], "scenario.models[1]");

    const Json& sig = f.at("sigma2");
    if (sig.is_number()) {
        p.g1.sigma2 = p.g2.sigma2 = number(sig, "scenario.sigma2");
    } else {
        std::tie(p.g1.sigma2, p.g2.sigma2) = number_pair(sig, "scenario.sigma2");
    }
    if (!(p.g1.sigma2 > 0.0 && p.g2.sigma2 > 0.0)) fail("scenario.sigma2", "variances must be positive");

    bool flexible = false;
    if (const Json* g = f.get("gamma")) {
        if (g->is_string()) {
            if (g->get<std::string>() != "optimize") fail("scenario.gamma", "expected [g1, g2] or \"optimize\"");
            flexible = true;
        } else {
            std::tie(p.g1.gamma, p.g2.gamma) = number_pair(*g, "scenario.gamma");
            const bool open = p.g1.gamma > 0.0 && p.g1.gamma < 1.0 && p.g2.gamma > 0.0 && p.g2.gamma < 1.0;
            if (!open || std::abs(p.g1.gamma + p.g2.gamma - 1.0) > DesignPair::kGammaSumTol)
                fail("scenario.gamma", "fractions must lie in (0, 1) and sum to 1");
        }
    }

    const Interval x = interval(f.at("design_space"), "scenario.design_space");
    Interval z = x;
    if (const Json* v = f.get("region")) z = interval(*v, "scenario.region");

    NormOrder order = NormOrder::infinity();
    const Json& crit = f.at("criterion");
    if (crit.is_string()) {
        if (crit.get<std::string>() != "inf") fail("scenario.criterion", "expected \"inf\" or a number p >= 1");
    } else {
        try {
            order = NormOrder::finite(number(crit, "scenario.criterion"));
        } catch (const InvalidInput& e) {
            fail("scenario.criterion", e.what());
        }
    }
    p.spec = CriterionSpec::make(order, x, z);
    if (const Json* v = f.get("lambda")) p.spec.lambda = lambda_measure(*v, "scenario.lambda", z);

    if (const Json* v = f.get("k")) {
        if (!v->is_array() || v->size() != 2) fail("scenario.k", "expected [k1, k2]");
        p.k1 = unsigned_int((*v)[0], "scenario.k[0]");
        p.k2 = unsigned_int((*v)[1], "scenario.k[1]");
    }
    if (const Json* v = f.get("eta")) p.eta = design_from_json(*v, "scenario.eta", x);

    if (flexible) {
        if (p.eta) fail("scenario.gamma", "\"optimize\" cannot be combined with a fixed design eta");
        if (!order.is_infinite()) fail("scenario.gamma", "\"optimize\" needs criterion \"inf\"");
        p.criterion = Criterion::MuInfGamma;
    } else if (p.eta) {
        p.criterion = order.is_infinite() ? Criterion::NuInf : Criterion::NuP;
    } else {
        p.criterion = order.is_infinite() ? Criterion::MuInf : Criterion::MuP;
    }

    if (const Json* v = f.get("pso")) pso_overrides(*v, "scenario.pso", s.options);
    if (const Json* v = f.get("check")) check_overrides(*v, "scenario.check", s.options);
    s.options.pso.seed = unsigned_int(f.at("seed"), "scenario.seed");
    if (const Json* v = f.get("output")) s.output = text(*v, "scenario.output");
    f.done();

    try {
        p.validate();
    } catch (const InvalidInput& e) {
        fail("scenario", e.what());
    }
    return s;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string body = buf.str();
    try {
        return Json::parse(body);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < e.byte && i < body.size(); ++i) {
            if (body[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw InvalidInput(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON syntax error");
    }
}

Scenario load_scenario(const std::string& path) {
    try {
        return parse_scenario(read_json_file(path));
    } catch (const InvalidInput& e) {
        const std::string msg = e.what();
        if (msg.rfind(path, 0) == 0) throw;
        throw InvalidInput(path + ": " + msg);
    }
}

Json to_json(const Design& d) {
    Json j;
    j["points"] = numbers_json(d.points());
    j["weights"] = numbers_json(d.weights());
    return j;
}

Design design_from_json(const Json& j, const std::string& where, std::optional<Interval> space) {
    Fields f(j, where);
    const std::vector<double> pts = numbers(f.at("points"), f.path("points"));
    const std::vector<double> w = numbers(f.at("weights"), f.path("weights"));
    f.done();
    try {
        return Design(pts, w, space);
    } catch (const InvalidInput& e) {
        fail(where, e.what());
    }
}

Json to_json(const EquivalenceReport& r) {
    Json j;
    j["schema"] = kReportSchema;
    j["criterion"] = to_string(r.kind);
    j["order"] = order_string(r.order);
    j["value"] = r.value;
    j["max_violation"] = r.max_violation;
    j["relative_violation"] = r.relative_violation;
    j["argmax"] = Json::array({r.argmax_t1, r.argmax_t2});
    Json res = Json::array();
    for (const auto& s : r.residuals) {
        Json e;
        e["t1"] = s.t1;
        if (r.kind == CheckKind::MuP || r.kind == CheckKind::MuInf) e["t2"] = s.t2;
        if (s.omega >= 0) e["omega"] = s.omega;
        e["residual"] = s.residual;
        res.push_back(e);
    }
    j["support_residuals"] = res;
    j["max_residual"] = r.max_residual;
    if (r.extremal) {
        Json e;
        e["points"] = numbers_json(r.extremal->points);
        e["values"] = numbers_json(r.extremal->values);
        e["level"] = r.extremal->level;
        e["tol"] = r.extremal->tol;
        j["extremal"] = e;
    }
    if (r.rho) {
        Json e;
        e["atoms"] = numbers_json(r.rho->atoms);
        e["weights"] = numbers_json(r.rho->weights);
        j["rho"] = e;
    }
    j["eff_lower_bound"] = r.eff_lower_bound;
    if (r.eff_bound_pointwise) j["eff_bound_pointwise"] = *r.eff_bound_pointwise;
    j["cert_tol"] = r.cert_tol;
    j["certified"] = r.certified;
    return j;
}

Json to_json(const OptimizeResult& r, const Problem& p) {
    Json j;
    j["schema"] = kResultSchema;
    j["criterion"] = to_string(p.criterion);
    j["models"] = Json::array({p.g1.model.describe(), p.g2.model.describe()});
    j["xi1"] = to_json(r.xi1);
    if (p.fixed_second())
        j["eta"] = to_json(*p.eta);
    else
        j["xi2"] = to_json(r.xi2);
    j["gamma"] = Json::array({r.gamma.first, r.gamma.second});
    j["value"] = r.value;
    j["iterations"] = r.iterations;
    j["restarts_used"] = r.restarts_used;
    j["seed"] = r.seed;
    j["certified"] = r.certified;
    j["report"] = to_json(r.report);
    return j;
}

Candidate candidate_from_json(const Json& j, const Interval& space) {
    if (!j.is_object()) fail("designs", "expected an object");
    const std::string schema = j.contains("schema") && j["schema"].is_string() ? j["schema"].get<std::string>() : "";
    Candidate c{Design({space.lo}, {1.0}), std::nullopt, std::nullopt};
    auto read = [&](Fields& f) {
        c.xi1 = design_from_json(f.at("xi1"), "designs.xi1", space);
        if (const Json* v = f.get("xi2")) c.xi2 = design_from_json(*v, "designs.xi2", space);
        if (const Json* v = f.get("gamma")) c.gamma = number_pair(*v, "designs.gamma");
    };
    if (schema == kResultSchema) {
        // results carry the report and run metadata; only the designs are read
        Fields f(j, "result");
        read(f);
    } else if (schema == kDesignsSchema) {
        Fields f(j, "designs");
        f.at("schema");
        read(f);
        f.done();
    } else {
        fail("designs.schema", "expected '" + std::string(kDesignsSchema) + "' or '" + kResultSchema + "'");
    }
    return c;
}

void write_json(const Json& j, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

}  // namespace curvecmp::io
