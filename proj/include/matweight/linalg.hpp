#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace matweight {

// Numeric tolerances shared across the library.  Values are part of the
// observable contract (tests pin against them), not incidental constants.
inline constexpr double tol_sym = 1e-9;        // symmetry check, relative to inf_norm
inline constexpr double tol_def = 1e-9;        // definiteness margin for eigenvalues
inline constexpr double tol_eig = 1e-6;        // "near one" eigenvalue window
inline constexpr double tol_step = 1e-12;      // power-iteration step delta
inline constexpr double tol_zero_mat = 1e-8;   // "converged to zero" matrix norm
inline constexpr double overflow_bound = 1e12; // divergence cutoff for iterates
inline constexpr double tol_pos = 1e-12;       // strict positivity for induced graphs

/// Row-major dense real matrix.  Construction validates shape and finiteness;
/// element access is unchecked beyond debug builds.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;

    DenseMatrix(int r, int c, double fill = 0.0) : rows(r), cols(c) {
        if (r < 0 || c < 0) throw std::invalid_argument("DenseMatrix: negative shape");
        data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill);
        if (!std::isfinite(fill)) throw std::invalid_argument("DenseMatrix: non-finite fill");
    }

    DenseMatrix(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
        if (r < 0 || c < 0) throw std::invalid_argument("DenseMatrix: negative shape");
        if (data.size() != static_cast<std::size_t>(r) * static_cast<std::size_t>(c))
            throw std::invalid_argument("DenseMatrix: data size does not match shape");
        for (double v : data)
            if (!std::isfinite(v)) throw std::invalid_argument("DenseMatrix: non-finite entry");
    }

    static DenseMatrix identity(int n) {
        DenseMatrix m(n, n, 0.0);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rws) {
        int r = static_cast<int>(rws.size());
        int c = r == 0 ? 0 : static_cast<int>(rws.begin()->size());
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(r) * c);
        for (const auto& row : rws) {
            if (static_cast<int>(row.size()) != c)
                throw std::invalid_argument("DenseMatrix: ragged rows");
            values.insert(values.end(), row.begin(), row.end());
        }
        return DenseMatrix(r, c, std::move(values));
    }

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    bool is_square() const { return rows == cols; }

    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("multiply: inner dimensions differ");
    DenseMatrix out(a.rows, b.cols, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = &b.data[static_cast<std::size_t>(k) * b.cols];
            double* orow = &out.data[static_cast<std::size_t>(i) * out.cols];
            for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

inline std::vector<double> multiply(const DenseMatrix& a, const std::vector<double>& x) {
    if (a.cols != static_cast<int>(x.size())) throw std::invalid_argument("multiply: vector length mismatch");
    std::vector<double> y(static_cast<std::size_t>(a.rows), 0.0);
    for (int i = 0; i < a.rows; ++i) {
        double acc = 0.0;
        const double* arow = &a.data[static_cast<std::size_t>(i) * a.cols];
        for (int j = 0; j < a.cols; ++j) acc += arow[j] * x[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

inline DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("subtract: shape mismatch");
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

inline DenseMatrix scale(const DenseMatrix& a, double s) {
    DenseMatrix out = a;
    for (double& v : out.data) v *= s;
    return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols, a.rows, 0.0);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

/// Maximum absolute row sum.  Returns 0 for an empty matrix.
inline double inf_norm(const DenseMatrix& m) {
    double best = 0.0;
    for (int i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < m.cols; ++j) acc += std::abs(m(i, j));
        best = std::max(best, acc);
    }
    return best;
}

inline double max_abs(const DenseMatrix& m) {
    double best = 0.0;
    for (double v : m.data) best = std::max(best, std::abs(v));
    return best;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double best = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        best = std::max(best, std::abs(a.data[i] - b.data[i]));
    return best;
}

inline bool all_finite(const DenseMatrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

inline bool is_symmetric(const DenseMatrix& m, double tol = tol_sym) {
    if (!m.is_square()) return false;
    double asym = 0.0;
    for (int i = 0; i < m.rows; ++i)
        for (int j = i + 1; j < m.cols; ++j)
            asym = std::max(asym, std::abs(m(i, j) - m(j, i)));
    return asym <= tol * inf_norm(m);
}

inline Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
eigen_view(const DenseMatrix& m) {
    return {m.data.data(), m.rows, m.cols};
}

enum class MatrixSign { positive, negative, zero, indefinite };

inline int sign_value(MatrixSign s) {
    switch (s) {
        case MatrixSign::positive: return 1;
        case MatrixSign::negative: return -1;
        default: return 0;
    }
}

/// Eigenvalues of the symmetric part, ascending.  Precondition: square and
/// symmetric within tol_sym (relative to inf_norm).
inline std::vector<double> symmetric_eigenvalues(const DenseMatrix& m) {
    if (!m.is_square()) throw std::invalid_argument("symmetric_eigenvalues: not square");
    if (!is_symmetric(m)) throw std::invalid_argument("symmetric_eigenvalues: not symmetric within tolerance");
    Eigen::MatrixXd sym = eigen_view(m);
    sym = 0.5 * (sym + sym.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    std::vector<double> out(solver.eigenvalues().data(), solver.eigenvalues().data() + m.rows);
    return out;
}

/// Definiteness class of a symmetric matrix:
///   positive  if the smallest eigenvalue exceeds +tol
///   negative  if the largest eigenvalue is below  -tol
///   zero      if every entry has magnitude at most tol
///   indefinite otherwise
inline MatrixSign matrix_sign(const DenseMatrix& m, double tol = tol_def) {
    auto eig = symmetric_eigenvalues(m);
    if (eig.empty()) return MatrixSign::zero;
    if (eig.front() > tol) return MatrixSign::positive;
    if (eig.back() < -tol) return MatrixSign::negative;
    if (max_abs(m) <= tol) return MatrixSign::zero;
    return MatrixSign::indefinite;
}

inline bool is_positive_definite(const DenseMatrix& m, double tol = tol_def) {
    return matrix_sign(m, tol) == MatrixSign::positive;
}

inline bool is_negative_definite(const DenseMatrix& m, double tol = tol_def) {
    return matrix_sign(m, tol) == MatrixSign::negative;
}

struct SpectrumReport {
    std::vector<std::complex<double>> eigenvalues;  // sorted by modulus, descending
    int count_near_one = 0;                         // |lambda - 1| <= tol
    double max_modulus = 0.0;
    double max_modulus_excluding_near_one = 0.0;
};

/// Full complex spectrum of a general real square matrix.
inline SpectrumReport spectrum(const DenseMatrix& m, double near_one_tol = tol_eig) {
    if (!m.is_square()) throw std::invalid_argument("spectrum: not square");
    SpectrumReport report;
    if (m.rows == 0) return report;
    Eigen::MatrixXd work = eigen_view(m);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(work, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("spectrum: eigenvalue iteration failed");
    report.eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + m.rows);
    std::sort(report.eigenvalues.begin(), report.eigenvalues.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  double ma = std::abs(a), mb = std::abs(b);
                  if (ma != mb) return ma > mb;
                  if (a.real() != b.real()) return a.real() > b.real();
                  return a.imag() > b.imag();
              });
    for (const auto& ev : report.eigenvalues) {
        double mod = std::abs(ev);
        report.max_modulus = std::max(report.max_modulus, mod);
        if (std::abs(ev - std::complex<double>(1.0, 0.0)) <= near_one_tol)
            ++report.count_near_one;
        else
            report.max_modulus_excluding_near_one = std::max(report.max_modulus_excluding_near_one, mod);
    }
    return report;
}

struct GershgorinDisc {
    double center = 0.0;
    double radius = 0.0;
};

inline std::vector<GershgorinDisc> gershgorin_discs(const DenseMatrix& m) {
    if (!m.is_square()) throw std::invalid_argument("gershgorin_discs: not square");
    std::vector<GershgorinDisc> discs(static_cast<std::size_t>(m.rows));
    for (int i = 0; i < m.rows; ++i) {
        double radius = 0.0;
        for (int j = 0; j < m.cols; ++j)
            if (j != i) radius += std::abs(m(i, j));
        discs[static_cast<std::size_t>(i)] = {m(i, i), radius};
    }
    return discs;
}

enum class LimitStatus { converged_to_matrix, converged_to_zero, diverged, undecided };

struct ProductLimitResult {
    LimitStatus status = LimitStatus::undecided;
    std::optional<DenseMatrix> limit;  // present iff converged
    long iterations_used = 0;          // exponent of the last power formed
    double final_step_delta = 0.0;
};

/// Limit of m^t by literal repeated multiplication: the running product is
/// multiplied by the base each step so intermediates are exactly the
/// time-indexed powers.  Stops when successive powers differ by less than
/// step_tol in inf-norm, diverges when any entry leaves [-overflow, overflow].
inline ProductLimitResult power_limit(const DenseMatrix& m, long max_iter = 100000,
                                      double step_tol = tol_step) {
    if (!m.is_square()) throw std::invalid_argument("power_limit: not square");
    if (max_iter < 1) throw std::invalid_argument("power_limit: max_iter must be positive");
    ProductLimitResult result;
    DenseMatrix current = m;  // m^1
    result.iterations_used = 1;
    if (max_abs(current) > overflow_bound || !all_finite(current)) {
        result.status = LimitStatus::diverged;
        return result;
    }
    for (long t = 1; t <= max_iter; ++t) {
        DenseMatrix next = multiply(current, m);
        result.iterations_used = t + 1;
        if (!all_finite(next) || max_abs(next) > overflow_bound) {
            result.status = LimitStatus::diverged;
            result.final_step_delta = std::numeric_limits<double>::infinity();
            return result;
        }
        double delta = max_abs_diff(next, current);
        result.final_step_delta = delta;
        current = std::move(next);
        if (delta < step_tol) {
            result.status = inf_norm(current) <= tol_zero_mat ? LimitStatus::converged_to_zero
                                                             : LimitStatus::converged_to_matrix;
            result.limit = std::move(current);
            return result;
        }
    }
    result.status = LimitStatus::undecided;
    return result;
}

struct SumProductReport {
    bool norm_bound_ok = false;     // inf_norm(a) <= 1 + tol_eig
    bool a_power_converges = false; // lim a^t exists numerically
    bool b_power_vanishes = false;  // lim b^t = 0 numerically
    bool hypotheses_hold = false;
    ProductLimitResult a_power;
    ProductLimitResult b_power;
    ProductLimitResult product;     // power limit of a + b
};

/// Checks the three convergence hypotheses for a sum a + b, then reports the
/// observed limit behaviour of (a + b)^t alongside the hypothesis verdicts.
/// The hypotheses alone do not force convergence; callers get the honest
/// outcome either way.
inline SumProductReport sum_product_limit(const DenseMatrix& a, const DenseMatrix& b,
                                          long max_iter = 100000, double step_tol = tol_step) {
    if (!a.is_square() || !b.is_square() || !a.same_shape(b))
        throw std::invalid_argument("sum_product_limit: shapes must match and be square");
    SumProductReport report;
    report.norm_bound_ok = inf_norm(a) <= 1.0 + tol_eig;
    report.a_power = power_limit(a, max_iter, step_tol);
    report.a_power_converges = report.a_power.status == LimitStatus::converged_to_matrix ||
                               report.a_power.status == LimitStatus::converged_to_zero;
    report.b_power = power_limit(b, max_iter, step_tol);
    report.b_power_vanishes = report.b_power.status == LimitStatus::converged_to_zero;
    report.hypotheses_hold = report.norm_bound_ok && report.a_power_converges && report.b_power_vanishes;
    report.product = power_limit(add(a, b), max_iter, step_tol);
    return report;
}

}  // namespace matweight
