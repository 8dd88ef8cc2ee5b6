#include "curvecmp/tables.hpp"

#include "curvecmp/criteria.hpp"
#include "curvecmp/error.hpp"

namespace curvecmp {

namespace {

const Interval kUnit{0.0, 1.0};

GroupSpec dose_group(DoseModel m, double sigma2 = kDoseSigma2) { return GroupSpec{dose_model(m), sigma2, 0.5}; }

}  // namespace

std::string to_string(DoseModel m) {
    switch (m) {
        case DoseModel::Emax: return "emax";
        case DoseModel::LogLinear: return "loglinear";
        case DoseModel::Exponential: return "exponential";
    }
    return "?";
}

DoseModel dose_model_from_string(const std::string& name) {
    for (DoseModel m : kDoseModels)
        if (to_string(m) == name) return m;
    throw InvalidInput("unknown dose model '" + name + "' (expected emax, loglinear or exponential)");
}

ModelSpec dose_model(DoseModel m) {
    switch (m) {
        case DoseModel::Emax: return ModelSpec::emax(nominal::kEmax);
        case DoseModel::LogLinear: return ModelSpec::loglinear(nominal::kLogLinear, true);
        case DoseModel::Exponential: return ModelSpec::exponential(nominal::kExponential);
    }
    throw InvalidInput("unknown dose model");
}

Design standard_design() { return Design::uniform({0.0, 0.05, 0.2, 0.6, 1.0}, kUnit); }

Problem dose_mu_inf_problem(DoseModel m1, DoseModel m2) {
    Problem p;
    p.criterion = Criterion::MuInf;
    p.g1 = dose_group(m1);
    p.g2 = dose_group(m2);
    p.spec = CriterionSpec::make(NormOrder::infinity(), kUnit, kUnit);
    return p;
}

Problem dose_nu_inf_problem(DoseModel free, DoseModel fixed, const Design& eta) {
    Problem p = dose_mu_inf_problem(free, fixed);
    p.criterion = Criterion::NuInf;
    p.eta = eta;
    return p;
}

Problem dose_gamma_problem(DoseModel m1, DoseModel m2, double sigma2_factor) {
    if (!(sigma2_factor > 0.0)) throw InvalidInput("variance factor must be positive");
    Problem p = dose_mu_inf_problem(m1, m2);
    p.criterion = Criterion::MuInfGamma;
    p.g2.sigma2 = sigma2_factor * kDoseSigma2;
    return p;
}

TableRunner::TableRunner(OptimizeOptions options) : options_(std::move(options)) {}

const OptimizeResult& TableRunner::mu_inf(DoseModel m1, DoseModel m2) {
    const auto key = std::make_pair(m1, m2);
    auto it = mu_.find(key);
    if (it == mu_.end()) it = mu_.emplace(key, optimize(dose_mu_inf_problem(m1, m2), options_)).first;
    return it->second;
}

const Design& TableRunner::d_optimal(DoseModel m) { return mu_inf(m, m).xi1; }

const OptimizeResult& TableRunner::nu_inf(DoseModel free, DoseModel fixed) {
    const auto key = std::make_pair(free, fixed);
    auto it = nu_.find(key);
    if (it == nu_.end()) {
        const Design eta = d_optimal(fixed);
        it = nu_.emplace(key, optimize_nu(dose_nu_inf_problem(free, fixed, eta), options_)).first;
    }
    return it->second;
}

const OptimizeResult& TableRunner::gamma(DoseModel m1, DoseModel m2, double sigma2_factor) {
    const auto key = std::make_pair(std::make_pair(m1, m2), sigma2_factor);
    auto it = gamma_.find(key);
    if (it == gamma_.end())
        it = gamma_.emplace(key, optimize_gamma(dose_gamma_problem(m1, m2, sigma2_factor), options_)).first;
    return it->second;
}

double TableRunner::efficiency(DoseModel m1, DoseModel m2, const Design& xi1, const Design& xi2) {
    const OptimizeResult& opt = mu_inf(m1, m2);
    const Problem p = dose_mu_inf_problem(m1, m2);
    return opt.value / curvecmp::mu_inf(DesignPair(xi1, xi2, p.g1, p.g2), p.spec);
}

std::vector<EfficiencyRow> efficiency_table(TableRunner& runner) {
    std::vector<EfficiencyRow> rows;
    auto row = [&](std::string label, auto&& pair_for) {
        EfficiencyRow r{std::move(label), {}};
        for (const auto& [m1, m2] : kEfficiencyColumns) {
            const auto [xi1, xi2] = pair_for(m1, m2);
            r.values.push_back(100.0 * runner.efficiency(m1, m2, xi1, xi2));
        }
        rows.push_back(std::move(r));
    };
    row("standard design", [](DoseModel, DoseModel) { return std::make_pair(standard_design(), standard_design()); });
    for (DoseModel d : kDoseModels)
        row("D-optimal " + to_string(d), [&](DoseModel, DoseModel) {
            return std::make_pair(runner.d_optimal(d), runner.d_optimal(d));
        });
    // row labels follow the published table: "model 1 fixed" optimizes the design of model 1
    row("nu_inf model 1 fixed", [&](DoseModel m1, DoseModel m2) {
        return std::make_pair(runner.nu_inf(m1, m2).xi1, runner.d_optimal(m2));
    });
    row("nu_inf model 2 fixed", [&](DoseModel m1, DoseModel m2) {
        return std::make_pair(runner.d_optimal(m1), runner.nu_inf(m2, m1).xi1);
    });
    return rows;
}

}  // namespace curvecmp
