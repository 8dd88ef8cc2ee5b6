#pragma once

// Fixed-capacity dense vectors and symmetric matrices for the small
// parameter dimensions that occur in regression models (d <= kMaxDim).
// Factorizations are delegated to Eigen.

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>

#include <Eigen/Cholesky>

namespace curvecmp {

inline constexpr std::size_t kMaxDim = 8;

class Vec {
public:
    Vec() = default;
    explicit Vec(std::size_t n) : size_(n) { assert(n <= kMaxDim); }
    Vec(std::initializer_list<double> values) : size_(values.size()) {
        assert(values.size() <= kMaxDim);
        std::size_t i = 0;
        for (double v : values) data_[i++] = v;
    }

    std::size_t size() const noexcept { return size_; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<const double> view() const noexcept { return {data_.data(), size_}; }
    const double* begin() const noexcept { return data_.data(); }
    const double* end() const noexcept { return data_.data() + size_; }

    double dot(const Vec& other) const noexcept {
        double s = 0.0;
        for (std::size_t i = 0; i < size_; ++i) s += data_[i] * other.data_[i];
        return s;
    }

private:
    std::array<double, kMaxDim> data_{};
    std::size_t size_ = 0;
};

/// Square matrix stored densely; used for symmetric information matrices.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t n) : n_(n) { assert(n <= kMaxDim); }

    std::size_t dim() const noexcept { return n_; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * kMaxDim + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * kMaxDim + j]; }

    /// this += w * v v^T (lower triangle only; call symmetrize() afterwards)
    void add_outer_lower(double w, const Vec& v) noexcept {
        for (std::size_t i = 0; i < n_; ++i) {
            const double wi = w * v[i];
            for (std::size_t j = 0; j <= i; ++j) (*this)(i, j) += wi * v[j];
        }
    }

    void add_outer(double w, const Vec& v) noexcept {
        add_outer_lower(w, v);
        symmetrize_from_lower();
    }

    void symmetrize_from_lower() noexcept {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < i; ++j) (*this)(j, i) = (*this)(i, j);
    }

    /// Replace by (A + A^T) / 2.
    void symmetrize() noexcept {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < i; ++j) {
                const double m = 0.5 * ((*this)(i, j) + (*this)(j, i));
                (*this)(i, j) = m;
                (*this)(j, i) = m;
            }
    }

    Vec multiply(const Vec& v) const noexcept {
        Vec out(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j) * v[j];
            out[i] = s;
        }
        return out;
    }

    double quad(const Vec& v) const noexcept { return v.dot(multiply(v)); }

    double norm1() const noexcept {
        double best = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n_; ++i) s += std::abs((*this)(i, j));
            best = s > best ? s : best;
        }
        return best;
    }

private:
    std::array<double, kMaxDim * kMaxDim> a_{};
    std::size_t n_ = 0;
};

/// Cholesky factor A = L L^T of a symmetric positive definite matrix.
class Cholesky {
public:
    /// Reciprocal 1-norm condition number below which a matrix counts as singular.
    static constexpr double kSingularRcond = 1e-10;

    /// Factor `a`; empty when `a` is not numerically positive definite or its
    /// reciprocal condition number falls below kSingularRcond.
    static std::optional<Cholesky> factor(const SymMatrix& a) {
        const auto n = static_cast<Eigen::Index>(a.dim());
        Mat m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) m(i, j) = a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        Cholesky c;
        c.llt_.compute(m);
        if (c.llt_.info() != Eigen::Success) return std::nullopt;
        c.rcond_ = c.llt_.rcond();
        if (!(c.rcond_ >= kSingularRcond)) return std::nullopt;
        const auto& l = c.llt_.matrixLLT();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) c.l_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = l(i, j);
            c.inv_diag_[static_cast<std::size_t>(i)] = 1.0 / l(i, i);
        }
        return c;
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(llt_.rows()); }
    double rcond() const noexcept { return rcond_; }

    /// y = L^{-1} v; plain forward substitution, cheaper than Eigen at these sizes
    Vec half_solve(const Vec& v) const noexcept {
        Vec y(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double s = v[i];
            for (std::size_t k = 0; k < i; ++k) s -= l_[i][k] * y[k];
            y[i] = s * inv_diag_[i];
        }
        return y;
    }

    /// x = A^{-1} v
    Vec solve(const Vec& v) const noexcept { return from(llt_.solve(to(v))); }

    /// v^T A^{-1} v
    double inv_quad(const Vec& v) const noexcept {
        const Vec y = half_solve(v);
        return y.dot(y);
    }

    /// u^T A^{-1} v
    double inv_bilinear(const Vec& u, const Vec& v) const noexcept {
        return half_solve(u).dot(half_solve(v));
    }

    SymMatrix inverse() const {
        const Mat inv = llt_.solve(Mat::Identity(llt_.rows(), llt_.cols()));
        SymMatrix out(dim());
        for (std::size_t i = 0; i < dim(); ++i)
            for (std::size_t j = 0; j < dim(); ++j)
                out(i, j) = inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        out.symmetrize();
        return out;
    }

    double log_det() const noexcept { return 2.0 * llt_.matrixLLT().diagonal().array().log().sum(); }

private:
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
    using Col = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

    static Col to(const Vec& v) {
        Col c(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) c(static_cast<Eigen::Index>(i)) = v[i];
        return c;
    }
    static Vec from(const Col& c) {
        Vec v(static_cast<std::size_t>(c.size()));
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = c(static_cast<Eigen::Index>(i));
        return v;
    }

    Eigen::LLT<Mat> llt_;
    std::array<std::array<double, kMaxDim>, kMaxDim> l_{};
    std::array<double, kMaxDim> inv_diag_{};
    double rcond_ = 0.0;
};

}  // namespace curvecmp
