#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "curvecmp/optimizer.hpp"

namespace curvecmp {

/// The three dose-response models compared on [0, 1].
enum class DoseModel { Emax, LogLinear, Exponential };

inline constexpr std::array<DoseModel, 3> kDoseModels{DoseModel::Emax, DoseModel::LogLinear,
                                                      DoseModel::Exponential};

/// Common error variance 1.478^2.
inline constexpr double kDoseSigma2 = 1.478 * 1.478;

/// Registry name ("emax", "loglinear", "exponential").
std::string to_string(DoseModel m);
DoseModel dose_model_from_string(const std::string& name);

/// Nominal model; the loglinear offset is estimated.
ModelSpec dose_model(DoseModel m);

/// 20% at each of 0, 0.05, 0.2, 0.6, 1.
Design standard_design();

/// mu_inf on X = Z = [0, 1], equal variances and gamma = (0.5, 0.5).
Problem dose_mu_inf_problem(DoseModel m1, DoseModel m2);

/// nu_inf with group 2 frozen at `eta`.
Problem dose_nu_inf_problem(DoseModel free, DoseModel fixed, const Design& eta);

/// Allocation-flexible mu_inf with sigma2_2 = factor * sigma2_1.
Problem dose_gamma_problem(DoseModel m1, DoseModel m2, double sigma2_factor);

/// Computes and caches the optimal designs behind the result tables.
class TableRunner {
public:
    explicit TableRunner(OptimizeOptions options = {});

    /// Optimal pair with m1 as group 1.
    const OptimizeResult& mu_inf(DoseModel m1, DoseModel m2);
    /// mu_inf optimum for identical models; both designs are the D-optimal design.
    const Design& d_optimal(DoseModel m);
    /// Design for `free` when the other group uses the D-optimal design of `fixed`.
    const OptimizeResult& nu_inf(DoseModel free, DoseModel fixed);
    const OptimizeResult& gamma(DoseModel m1, DoseModel m2, double sigma2_factor);

    /// mu_inf(optimum) / mu_inf(pair) for a candidate pair of designs.
    double efficiency(DoseModel m1, DoseModel m2, const Design& xi1, const Design& xi2);

    const OptimizeOptions& options() const noexcept { return options_; }

private:
    OptimizeOptions options_;
    std::map<std::pair<DoseModel, DoseModel>, OptimizeResult> mu_;
    std::map<std::pair<DoseModel, DoseModel>, OptimizeResult> nu_;
    std::map<std::pair<std::pair<DoseModel, DoseModel>, double>, OptimizeResult> gamma_;
};

/// Efficiency table: columns are (model 1, model 2) combinations.
struct EfficiencyRow {
    std::string label;
    std::vector<double> values;  // percent
};

inline constexpr std::array<std::pair<DoseModel, DoseModel>, 3> kEfficiencyColumns{{
    {DoseModel::LogLinear, DoseModel::Exponential},
    {DoseModel::LogLinear, DoseModel::Emax},
    {DoseModel::Exponential, DoseModel::Emax},
}};

/// Rows: standard design, D-optimal pairs per model, then the two nu_inf rows. In the
/// "model 1 fixed" row model 1 carries the nu_inf design and model 2 its D-optimal design.
std::vector<EfficiencyRow> efficiency_table(TableRunner& runner);

}  // namespace curvecmp
