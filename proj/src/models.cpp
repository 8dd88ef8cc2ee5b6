#include "curvecmp/models.hpp"

#include <cmath>
#include <sstream>

#include "curvecmp/error.hpp"

namespace curvecmp {

namespace {

void require_size(const std::vector<double>& theta, std::size_t n, const char* model) {
    if (theta.size() != n) {
        std::ostringstream os;
        os << model << " model expects " << n << " parameters, got " << theta.size();
        throw InvalidInput(os.str());
    }
    for (double v : theta)
        if (!std::isfinite(v)) throw InvalidInput(std::string(model) + " parameters must be finite");
}

std::string join(const std::vector<double>& v) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ')';
    return os.str();
}

}  // namespace

WeightFunction WeightFunction::power(double exponent) {
    if (!(exponent > 0.0)) throw InvalidInput("power weight exponent must be > 0");
    return {Form::Power, exponent};
}

double WeightFunction::value(double t) const {
    switch (form) {
        case Form::Constant: return 1.0;
        case Form::Exponential: return std::exp(a * t);
        case Form::Power: return std::pow(t, a);
    }
    return 1.0;
}

double WeightFunction::derivative(double t) const {
    switch (form) {
        case Form::Constant: return 0.0;
        case Form::Exponential: return a * std::exp(a * t);
        case Form::Power: return a * std::pow(t, a - 1.0);
    }
    return 0.0;
}

int WeightFunction::monotonicity() const noexcept {
    switch (form) {
        case Form::Constant: return 0;
        case Form::Exponential: return a > 0.0 ? 1 : (a < 0.0 ? -1 : 0);
        case Form::Power: return 1;
    }
    return 0;
}

std::string WeightFunction::describe() const {
    std::ostringstream os;
    switch (form) {
        case Form::Constant: os << "1"; break;
        case Form::Exponential: os << "exp(" << a << " t)"; break;
        case Form::Power: os << "t^" << a; break;
    }
    return os.str();
}

ModelSpec ModelSpec::emax(std::vector<double> theta) {
    require_size(theta, 3, "EMAX");
    if (!(theta[2] > 0.0)) throw InvalidInput("EMAX model requires theta3 > 0");
    ModelSpec m;
    m.kind_ = ModelKind::Emax;
    m.name_ = "emax";
    m.theta_ = std::move(theta);
    m.dim_ = 3;
    return m;
}

ModelSpec ModelSpec::exponential(std::vector<double> theta) {
    require_size(theta, 3, "exponential");
    if (theta[2] == 0.0) throw InvalidInput("exponential model requires theta3 != 0");
    ModelSpec m;
    m.kind_ = ModelKind::Exponential;
    m.name_ = "exponential";
    m.theta_ = std::move(theta);
    m.dim_ = 3;
    return m;
}

ModelSpec ModelSpec::loglinear(std::vector<double> theta, bool offset_estimated) {
    require_size(theta, 3, "loglinear");
    if (!(theta[2] > 0.0)) throw InvalidInput("loglinear model requires theta3 > 0");
    ModelSpec m;
    m.kind_ = offset_estimated ? ModelKind::LogLinear : ModelKind::LogLinearFixed;
    m.name_ = "loglinear";
    m.theta_ = std::move(theta);
    m.dim_ = offset_estimated ? 3 : 2;
    return m;
}

ModelSpec ModelSpec::michaelis_menten(std::vector<double> theta) {
    require_size(theta, 2, "Michaelis-Menten");
    if (!(theta[1] > 0.0)) throw InvalidInput("Michaelis-Menten model requires theta2 > 0");
    ModelSpec m;
    m.kind_ = ModelKind::MichaelisMenten;
    m.name_ = "michaelis_menten";
    m.theta_ = std::move(theta);
    m.dim_ = 2;
    return m;
}

ModelSpec ModelSpec::polynomial(int degree, std::vector<double> theta, WeightFunction weight) {
    if (degree < 0 || static_cast<std::size_t>(degree) + 1 > kMaxDim)
        throw InvalidInput("polynomial degree must lie in [0, " + std::to_string(kMaxDim - 1) + "]");
    if (theta.empty()) theta.assign(static_cast<std::size_t>(degree) + 1, 1.0);
    require_size(theta, static_cast<std::size_t>(degree) + 1, "polynomial");
    if (weight.form == WeightFunction::Form::Power && !(weight.a > 0.0))
        throw InvalidInput("power weight exponent must be > 0");
    ModelSpec m;
    m.kind_ = ModelKind::Polynomial;
    m.name_ = "polynomial";
    m.theta_ = std::move(theta);
    m.dim_ = static_cast<std::size_t>(degree) + 1;
    m.degree_ = degree;
    m.weight_ = weight;
    return m;
}

bool ModelSpec::in_domain(double t) const noexcept {
    if (!std::isfinite(t)) return false;
    switch (kind_) {
        case ModelKind::Emax: return t + theta_[2] > 0.0;
        case ModelKind::Exponential: return true;
        case ModelKind::LogLinear:
        case ModelKind::LogLinearFixed: return t + theta_[2] > 0.0;
        case ModelKind::MichaelisMenten: return t + theta_[1] > 0.0;
        case ModelKind::Polynomial:
            return weight_.form != WeightFunction::Form::Power || t >= 0.0;
    }
    return false;
}

void ModelSpec::require_domain(double t) const {
    if (in_domain(t)) return;
    std::ostringstream os;
    os << name_ << " model undefined at t = " << t << ": ";
    switch (kind_) {
        case ModelKind::Emax: os << "requires t + theta3 > 0"; break;
        case ModelKind::LogLinear:
        case ModelKind::LogLinearFixed: os << "requires t + theta3 > 0"; break;
        case ModelKind::MichaelisMenten: os << "requires t + theta2 > 0"; break;
        case ModelKind::Polynomial: os << "power weight requires t >= 0"; break;
        case ModelKind::Exponential: os << "t must be finite"; break;
    }
    throw InvalidInput(os.str());
}

double ModelSpec::predict(double t) const {
    require_domain(t);
    const auto& th = theta_;
    switch (kind_) {
        case ModelKind::Emax: return th[0] + th[1] * t / (t + th[2]);
        case ModelKind::Exponential: return th[0] + th[1] * std::exp(t / th[2]);
        case ModelKind::LogLinear:
        case ModelKind::LogLinearFixed: return th[0] + th[1] * std::log(t + th[2]);
        case ModelKind::MichaelisMenten: return th[0] * t / (th[1] + t);
        case ModelKind::Polynomial: {
            double s = 0.0;
            for (std::size_t j = th.size(); j-- > 0;) s = s * t + th[j];
            return weight_.value(t) * s;
        }
    }
    return 0.0;
}

Vec ModelSpec::gradient(double t) const {
    require_domain(t);
    return gradient_unchecked(t);
}

Vec ModelSpec::gradient_unchecked(double t) const noexcept {
    const auto& th = theta_;
    switch (kind_) {
        case ModelKind::Emax: {
            const double den = t + th[2];
            return {1.0, t / den, -th[1] * t / (den * den)};
        }
        case ModelKind::Exponential: {
            const double e = std::exp(t / th[2]);
            return {1.0, e, -th[1] * t * e / (th[2] * th[2])};
        }
        case ModelKind::LogLinear: {
            const double u = t + th[2];
            return {1.0, std::log(u), th[1] / u};
        }
        case ModelKind::LogLinearFixed: return {1.0, std::log(t + th[2])};
        case ModelKind::MichaelisMenten: {
            const double den = th[1] + t;
            return {t / den, -th[0] * t / (den * den)};
        }
        case ModelKind::Polynomial: {
            Vec g(dim_);
            double w = weight_.value(t);
            for (std::size_t j = 0; j < dim_; ++j) {
                g[j] = w;
                w *= t;
            }
            return g;
        }
    }
    return {};
}

std::string ModelSpec::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case ModelKind::Polynomial:
            os << "polynomial(degree " << degree_ << ", weight " << weight_.describe() << ")";
            return os.str();
        case ModelKind::LogLinearFixed: os << "loglinear[offset fixed]"; break;
        case ModelKind::LogLinear: os << "loglinear"; break;
        default: os << name_; break;
    }
    os << ' ' << join(theta_);
    return os.str();
}

const std::vector<RegisteredModel>& model_registry() {
    static const std::vector<RegisteredModel> registry{
        {"emax", "t1 + t2*t/(t + t3)", nominal::kEmax},
        {"exponential", "t1 + t2*exp(t/t3)", nominal::kExponential},
        {"loglinear", "t1 + t2*log(t + t3)", nominal::kLogLinear},
        {"michaelis_menten", "t1*t/(t2 + t)", {1.0, 1.0}},
        {"polynomial", "w(t)*(c0 + c1*t + ... + cp*t^p)", {}},
        {"linear", "c0 + c1*t", {0.0, 1.0}},
    };
    return registry;
}

ModelSpec make_model(std::string_view name, std::vector<double> theta, std::string_view variant,
                     int degree, WeightFunction weight) {
    auto pick = [&](const std::vector<double>& def) { return theta.empty() ? def : theta; };
    if (name != "loglinear" && !variant.empty())
        throw InvalidInput("model variant only applies to loglinear, got '" + std::string(variant) + "'");
    if (name == "emax") return ModelSpec::emax(pick(nominal::kEmax));
    if (name == "exponential") return ModelSpec::exponential(pick(nominal::kExponential));
    if (name == "loglinear") {
        bool estimated = true;
        if (variant == "offset_fixed")
            estimated = false;
        else if (!variant.empty() && variant != "offset_estimated")
            throw InvalidInput("unknown loglinear variant '" + std::string(variant) + "'");
        return ModelSpec::loglinear(pick(nominal::kLogLinear), estimated);
    }
    if (name == "michaelis_menten") return ModelSpec::michaelis_menten(pick({1.0, 1.0}));
    if (name == "linear") return ModelSpec::polynomial(1, pick({0.0, 1.0}), weight);
    if (name == "polynomial") {
        if (degree < 0) {
            if (theta.empty()) throw InvalidInput("polynomial model needs a degree or coefficients");
            degree = static_cast<int>(theta.size()) - 1;
        }
        return ModelSpec::polynomial(degree, std::move(theta), weight);
    }
    throw InvalidInput("unknown model '" + std::string(name) + "'");
}

}  // namespace curvecmp
