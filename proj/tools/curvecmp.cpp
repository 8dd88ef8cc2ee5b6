#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "curvecmp/closed_form.hpp"
#include "curvecmp/criteria.hpp"
#include "curvecmp/error.hpp"
#include "curvecmp/io.hpp"
#include "curvecmp/table_report.hpp"

using namespace curvecmp;

namespace {

constexpr int kCertified = 0;
constexpr int kNotCertified = 1;
constexpr int kInputError = 2;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold;
    std::optional<double> tol;
    std::optional<std::size_t> grid;
    std::string out;
};

void add_overrides(CLI::App* cmd, Overrides& o, bool with_seed) {
    if (with_seed) {
        cmd->add_option("--seed", o.seed, "Override the scenario seed");
        cmd->add_option("--threshold", o.threshold, "Efficiency bound required for certification");
    }
    cmd->add_option("--tol", o.tol, "Relative certification tolerance");
    cmd->add_option("--grid", o.grid, "Check grid nodes on the design space");
    cmd->add_option("--out", o.out, "Output file (stdout when omitted)");
}

io::Scenario scenario_with(const std::string& path, const Overrides& o) {
    io::Scenario s = io::load_scenario(path);
    if (o.seed) s.options.pso.seed = *o.seed;
    if (o.threshold) s.options.threshold = *o.threshold;
    if (o.tol) s.options.check.cert_tol = *o.tol;
    if (o.grid) s.options.check.grid = *o.grid;
    s.options.check.validate();
    if (!(s.options.threshold > 0.0 && s.options.threshold <= 1.0))
        throw InvalidInput("--threshold must lie in (0, 1]");
    return s;
}

std::string output_path(const Overrides& o, const io::Scenario& s) {
    if (!o.out.empty()) return o.out;
    return s.output.value_or("");
}

// Second design of the candidate, or the scenario's fixed design.
Design second_design(const io::Candidate& c, const Problem& p) {
    if (p.fixed_second()) {
        if (c.xi2) throw InvalidInput("designs: xi2 is not used with a fixed design eta in the scenario");
        return *p.eta;
    }
    if (!c.xi2) throw InvalidInput("designs: missing field 'xi2'");
    return *c.xi2;
}

std::pair<double, double> allocation(const io::Candidate& c, const Problem& p) {
    if (p.optimizes_gamma()) {
        if (!c.gamma) throw InvalidInput("designs: missing field 'gamma' for a flexible allocation");
        require_allocation(*c.gamma);
        return *c.gamma;
    }
    return {p.g1.gamma, p.g2.gamma};
}

DesignPair candidate_pair(const io::Candidate& c, const Problem& p) {
    const auto g = allocation(c, p);
    GroupSpec a = p.g1, b = p.g2;
    a.gamma = g.first;
    b.gamma = g.second;
    return DesignPair(c.xi1, second_design(c, p), a, b);
}

int cmd_optimize(const std::string& scenario, const Overrides& o) {
    const io::Scenario s = scenario_with(scenario, o);
    const OptimizeResult r = optimize(s.problem, s.options);
    io::write_json(io::to_json(r, s.problem), output_path(o, s));
    if (!r.certified)
        std::cerr << "not certified: relative violation " << r.report.relative_violation << ", max residual "
                  << r.report.max_residual << ", efficiency bound " << r.report.eff_lower_bound << '\n';
    return r.certified ? kCertified : kNotCertified;
}

int cmd_check(const std::string& scenario, const std::string& designs, const Overrides& o) {
    const io::Scenario s = scenario_with(scenario, o);
    const Problem& p = s.problem;
    const io::Candidate c = io::candidate_from_json(io::read_json_file(designs), p.spec.design_space);
    const EquivalenceReport r = certify(p, c.xi1, second_design(c, p), allocation(c, p), s.options.check);
    io::write_json(io::to_json(r), output_path(o, s));
    return r.certified ? kCertified : kNotCertified;
}

int cmd_efficiency(const std::string& scenario, const std::string& designs, const std::string& optimal,
                   const Overrides& o) {
    const io::Scenario s = scenario_with(scenario, o);
    const Problem& p = s.problem;
    const io::Candidate c = io::candidate_from_json(io::read_json_file(designs), p.spec.design_space);
    const io::Candidate best = io::candidate_from_json(io::read_json_file(optimal), p.spec.design_space);
    const double v = evaluate(p, c.xi1, second_design(c, p), allocation(c, p));
    const double v_opt = evaluate(p, best.xi1, second_design(best, p), allocation(best, p));
    const EquivalenceReport r = certify(p, c.xi1, second_design(c, p), allocation(c, p), s.options.check);
    io::Json j;
    j["criterion"] = to_string(p.criterion);
    j["value"] = v;
    j["optimal_value"] = v_opt;
    j["efficiency"] = v_opt / v;
    j["eff_lower_bound"] = r.eff_lower_bound;
    io::write_json(j, output_path(o, s));
    return kCertified;
}

struct ClosedFormArgs {
    std::string model;
    std::vector<double> theta;
    std::string variant;
    int degree = -1;
    std::string weight_form = "constant";
    double weight_a = 0.0;
    std::vector<double> x{0.0, 1.0};
    std::vector<double> z{1.5, 2.0};
    std::string out;
};

int cmd_closed_form(const ClosedFormArgs& a) {
    if (a.x.size() != 2 || a.z.size() != 2) throw InvalidInput("--x and --z take two numbers");
    const Interval x = Interval::make(a.x[0], a.x[1]);
    const Interval z = Interval::make(a.z[0], a.z[1]);
    WeightFunction w;
    if (a.weight_form == "exponential")
        w = WeightFunction::exponential(a.weight_a);
    else if (a.weight_form == "power")
        w = WeightFunction::power(a.weight_a);
    else if (a.weight_form != "constant")
        throw InvalidInput("unknown weight form '" + a.weight_form + "'");
    Design d = Design::uniform({0.0});
    if (a.model == "polynomial" || a.model == "linear") {
        const int p = a.model == "linear" ? 1 : a.degree;
        if (p < 1) throw InvalidInput("polynomial closed form needs --degree >= 1");
        d = extrapolation_design_poly(p, x, z, w);
    } else {
        const std::string variant = a.model == "loglinear" && a.variant.empty() ? "offset_fixed" : a.variant;
        d = corollary_design(make_model(a.model, a.theta, variant), x, z);
    }
    io::write_json(io::to_json(d), a.out);
    return kCertified;
}

struct BandArgs {
    std::string scenario, a, b;
    std::size_t n = 200;
    double quantile = 1.96;
    std::size_t grid = 201;
    std::string out;
};

int cmd_band_profile(const BandArgs& args) {
    const io::Scenario s = io::load_scenario(args.scenario);
    const Problem& p = s.problem;
    if (args.n == 0) throw InvalidInput("--n must be positive");
    if (args.grid < 2) throw InvalidInput("--grid needs at least 2 nodes");
    const DesignPair pa =
        candidate_pair(io::candidate_from_json(io::read_json_file(args.a), p.spec.design_space), p);
    const DesignPair pb =
        candidate_pair(io::candidate_from_json(io::read_json_file(args.b), p.spec.design_space), p);
    const std::vector<double> grid = linspace(p.spec.region, args.grid);
    const BandProfile fa = band_profile(pa, args.n, grid, args.quantile);
    const BandProfile fb = band_profile(pb, args.n, grid, args.quantile);

    std::ofstream file;
    if (!args.out.empty() && args.out != "-") {
        file.open(args.out);
        if (!file) throw InvalidInput("cannot write '" + args.out + "'");
    }
    std::ostream& out = file.is_open() ? file : std::cout;
    out << std::setprecision(12) << "t,halfwidth_a,halfwidth_b\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        out << fa.rows[i].t << ',' << fa.rows[i].halfwidth << ',' << fb.rows[i].halfwidth << '\n';
    std::cerr << std::setprecision(12) << "max halfwidth a " << fa.max_halfwidth << ", b " << fb.max_halfwidth
              << ", ratio a/b " << fa.max_halfwidth / fb.max_halfwidth << '\n';
    return kCertified;
}

int cmd_tables(int which, const Overrides& o) {
    OptimizeOptions opt;
    if (o.seed) opt.pso.seed = *o.seed;
    if (o.threshold) opt.threshold = *o.threshold;
    if (o.tol) opt.check.cert_tol = *o.tol;
    if (o.grid) opt.check.grid = *o.grid;
    TableRunner runner(opt);
    const TableResult t = compute_table(which, runner);
    if (o.out.empty() || o.out == "-") {
        write_csv(t, std::cout);
    } else {
        std::ofstream f(o.out);
        if (!f) throw InvalidInput("cannot write '" + o.out + "'");
        write_csv(t, f);
    }
    std::size_t uncertified = 0;
    for (const auto& [label, r] : t.reports)
        if (!r.certified || r.eff_lower_bound < opt.threshold) {
            ++uncertified;
            std::cerr << "not certified: " << label << '\n';
        }
    std::cerr << "table " << which << ": " << t.cells.size() - t.failures() << "/" << t.cells.size()
              << " entries within tolerance, " << t.reports.size() - uncertified << "/" << t.reports.size()
              << " designs certified\n";
    return t.failures() == 0 && uncertified == 0 ? kCertified : kNotCertified;
}

int cmd_models() {
    for (const RegisteredModel& m : model_registry()) {
        std::cout << m.name << ": " << m.formula;
        if (!m.default_theta.empty()) {
            std::cout << "  default theta (";
            for (std::size_t i = 0; i < m.default_theta.size(); ++i)
                std::cout << (i ? ", " : "") << m.default_theta[i];
            std::cout << ')';
        }
        std::cout << '\n';
    }
    return kCertified;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal designs for comparing two regression curves"};
    app.require_subcommand(1);

    std::string scenario, designs, optimal;
    Overrides ov;

    auto* opt = app.add_subcommand("optimize", "Optimize and certify the designs of a scenario");
    opt->add_option("scenario", scenario, "Scenario JSON")->required();
    add_overrides(opt, ov, true);

    auto* chk = app.add_subcommand("check", "Certify candidate designs");
    chk->add_option("scenario", scenario, "Scenario JSON")->required();
    chk->add_option("designs", designs, "Design or result JSON")->required();
    add_overrides(chk, ov, false);

    auto* eff = app.add_subcommand("efficiency", "Efficiency of candidate designs against an optimum");
    eff->add_option("scenario", scenario, "Scenario JSON")->required();
    eff->add_option("designs", designs, "Candidate design or result JSON")->required();
    eff->add_option("optimal", optimal, "Optimal design or result JSON")->required();
    add_overrides(eff, ov, false);

    ClosedFormArgs cf;
    auto* cfc = app.add_subcommand("closed-form", "Closed-form extrapolation design");
    cfc->add_option("--model", cf.model, "emax, michaelis_menten, loglinear, linear or polynomial")->required();
    cfc->add_option("--theta", cf.theta, "Model parameters");
    cfc->add_option("--variant", cf.variant, "Loglinear variant (defaults to offset_fixed)");
    cfc->add_option("--degree", cf.degree, "Polynomial degree");
    cfc->add_option("--weight-form", cf.weight_form, "constant, exponential or power");
    cfc->add_option("--weight-a", cf.weight_a, "Weight rate or exponent");
    cfc->add_option("--x", cf.x, "Design space lo hi")->expected(2);
    cfc->add_option("--z", cf.z, "Extrapolation region lo hi")->expected(2);
    cfc->add_option("--out", cf.out, "Output file");

    BandArgs band;
    auto* bp = app.add_subcommand("band-profile", "Confidence band half-widths of two candidates");
    bp->add_option("scenario", band.scenario, "Scenario JSON")->required();
    bp->add_option("a", band.a, "First design or result JSON")->required();
    bp->add_option("b", band.b, "Second design or result JSON")->required();
    bp->add_option("--n", band.n, "Total sample size");
    bp->add_option("--quantile", band.quantile, "Band quantile D");
    bp->add_option("--grid", band.grid, "Nodes on the comparison region");
    bp->add_option("--out", band.out, "CSV output file");

    int which = 0;
    auto* tab = app.add_subcommand("tables", "Recompute a result table next to the published values");
    tab->add_option("which", which, "2, 3, 4 or 5")->required()->check(CLI::IsMember({2, 3, 4, 5}));
    tab->add_option("--seed", ov.seed, "Optimizer seed");
    tab->add_option("--threshold", ov.threshold, "Efficiency bound required for certification");
    tab->add_option("--tol", ov.tol, "Relative certification tolerance");
    tab->add_option("--grid", ov.grid, "Check grid nodes");
    tab->add_option("--out", ov.out, "CSV output file");

    auto* mod = app.add_subcommand("models", "List the registered models");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInputError;
    }

    try {
        if (*opt) return cmd_optimize(scenario, ov);
        if (*chk) return cmd_check(scenario, designs, ov);
        if (*eff) return cmd_efficiency(scenario, designs, optimal, ov);
        if (*cfc) return cmd_closed_form(cf);
        if (*bp) return cmd_band_profile(band);
        if (*tab) return cmd_tables(which, ov);
        if (*mod) return cmd_models();
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const SingularDesign& e) {
        std::cerr << "error: singular design (group " << e.group() << "): " << e.what() << '\n';
        return kInputError;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNotCertified;
    }
    return kInputError;
}
