#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "curvecmp/linalg.hpp"

namespace curvecmp {

/// Positive weight function multiplying a polynomial regression.
struct WeightFunction {
    enum class Form { Constant, Exponential, Power };

    Form form = Form::Constant;
    double a = 0.0;  // rate for exp(a t), exponent for t^a

    static WeightFunction constant() { return {}; }
    static WeightFunction exponential(double rate) { return {Form::Exponential, rate}; }
    static WeightFunction power(double exponent);

    double value(double t) const;
    double derivative(double t) const;
    bool is_constant() const noexcept { return form == Form::Constant; }
    /// Derivative sign on (lo, hi): +1 increasing, -1 decreasing, 0 constant.
    int monotonicity() const noexcept;
    std::string describe() const;
};

enum class ModelKind {
    Emax,             // t1 + t2 t / (t + t3)
    Exponential,      // t1 + t2 exp(t / t3)
    LogLinear,        // t1 + t2 log(t + t3), t3 estimated
    LogLinearFixed,   // t1 + t2 log(t + t3), t3 known
    MichaelisMenten,  // t1 t / (t2 + t)
    Polynomial,       // w(t) * sum_j c_j t^j
};

/// A parametric regression model m(t, theta) evaluated at nominal parameters.
///
/// `theta()` always holds the full parameter vector of the mean function. For
/// the loglinear model with known offset, theta has three entries but only the
/// first two are estimated, so `dim() == 2`.
class ModelSpec {
public:
    static ModelSpec emax(std::vector<double> theta);
    static ModelSpec exponential(std::vector<double> theta);
    static ModelSpec loglinear(std::vector<double> theta, bool offset_estimated = true);
    static ModelSpec michaelis_menten(std::vector<double> theta);
    /// Weighted polynomial of the given degree; theta holds degree+1 coefficients.
    static ModelSpec polynomial(int degree, std::vector<double> theta,
                                WeightFunction weight = WeightFunction::constant());
    static ModelSpec linear() { return polynomial(1, {0.0, 1.0}); }

    ModelKind kind() const noexcept { return kind_; }
    /// Registry name, e.g. "emax" or "loglinear".
    const std::string& name() const noexcept { return name_; }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<double>& theta() const noexcept { return theta_; }
    int degree() const noexcept { return degree_; }
    const WeightFunction& weight() const noexcept { return weight_; }
    bool offset_estimated() const noexcept { return kind_ == ModelKind::LogLinear; }

    bool in_domain(double t) const noexcept;
    /// Throws InvalidInput naming the violated constraint when t is outside the domain.
    void require_domain(double t) const;

    double predict(double t) const;
    Vec gradient(double t) const;
    /// Same as gradient() without the domain check; callers guarantee in_domain(t).
    Vec gradient_unchecked(double t) const noexcept;

    std::string describe() const;

private:
    ModelSpec() = default;

    ModelKind kind_ = ModelKind::Polynomial;
    std::string name_;
    std::vector<double> theta_;
    std::size_t dim_ = 0;
    int degree_ = 0;
    WeightFunction weight_;
};

/// Nominal parameter sets of the dose-response model zoo on [0, 1].
namespace nominal {
inline const std::vector<double> kEmax{0.2, 0.7, 0.2};
inline const std::vector<double> kExponential{0.183, 0.017, 0.28};
inline const std::vector<double> kLogLinear{0.74, 0.33, 0.2};
}  // namespace nominal

struct RegisteredModel {
    std::string name;
    std::string formula;
    std::vector<double> default_theta;
};

/// All models addressable by name.
const std::vector<RegisteredModel>& model_registry();

/// Build a model from its registry name. An empty theta selects the default
/// parameters. `variant` is "" or, for loglinear, "offset_estimated" /
/// "offset_fixed"; for polynomial models `degree` and `weight` apply.
ModelSpec make_model(std::string_view name, std::vector<double> theta = {},
                     std::string_view variant = "", int degree = -1,
                     WeightFunction weight = WeightFunction::constant());

}  // namespace curvecmp
