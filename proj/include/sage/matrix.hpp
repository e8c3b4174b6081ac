// Dense row-major double matrices and the handful of factorizations the rest
// of the library needs: Householder QR (for random orthogonal matrices),
// cyclic Jacobi symmetric eigendecomposition, Cholesky SPD solves, matrix
// powers, and stable row-softmax / sigmoid maps.
//
// Sized for desk-scale work (up to ~2048 square); no sparsity, no views.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "sage/error.hpp"
#include "sage/rng.hpp"

namespace sage {

class Mat {
public:
    Mat() = default;

    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    Mat& operator+=(const Mat& o) {
        require_same_shape(o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    Mat& operator-=(const Mat& o) {
        require_same_shape(o, "-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }

    Mat& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Mat operator+(Mat a, const Mat& b) { return a += b; }
    friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
    friend Mat operator*(Mat a, double s) { return a *= s; }
    friend Mat operator*(double s, Mat a) { return a *= s; }

    Mat transposed() const {
        Mat t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

private:
    void require_same_shape(const Mat& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw std::invalid_argument(std::string("Mat shape mismatch in ") + op);
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A * B, ikj loop order over row-major storage.
inline Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("Mat multiply: inner dimensions differ");
    Mat c(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row_ptr(i);
        const double* ai = a.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.row_ptr(k);
            for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

// A * B^T. Row-dot-row, the cheap orientation for row-major data.
inline Mat mul_abt(const Mat& a, const Mat& b) {
    if (a.cols() != b.cols())
        throw std::invalid_argument("mul_abt: column counts differ");
    Mat c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row_ptr(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* bj = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += ai[k] * bj[k];
            c(i, j) = acc;
        }
    }
    return c;
}

// A^T * B, accumulated row by row so the inner loop stays contiguous.
inline Mat mul_atb(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows())
        throw std::invalid_argument("mul_atb: row counts differ");
    Mat c(a.cols(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* ar = a.row_ptr(r);
        const double* br = b.row_ptr(r);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double ari = ar[i];
            if (ari == 0.0) continue;
            double* ci = c.row_ptr(i);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += ari * br[j];
        }
    }
    return c;
}

inline double max_abs(const Mat& m) {
    double v = 0.0;
    for (double x : m.data()) v = std::max(v, std::fabs(x));
    return v;
}

inline double frobenius_norm(const Mat& m) {
    double acc = 0.0;
    for (double x : m.data()) acc += x * x;
    return std::sqrt(acc);
}

struct SymEig {
    std::vector<double> values; // ascending
    Mat vectors;                // orthonormal eigenvectors as columns
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Rejects
// non-square or visibly asymmetric input.
inline SymEig sym_eig(const Mat& m) {
    const std::size_t n = m.rows();
    if (n == 0 || n != m.cols())
        throw std::invalid_argument("sym_eig: matrix must be square and non-empty");
    const double scale = std::max(1.0, max_abs(m));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(m(i, j) - m(j, i)) > 1e-12 * scale)
                throw std::invalid_argument("sym_eig: matrix is not symmetric");

    Mat a = m;
    Mat v = Mat::identity(n);
    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (std::sqrt(2.0 * off) <= 1e-14 * std::max(1.0, frobenius_norm(a))) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                // Smaller-magnitude root of t^2 + 2*tau*t - 1 = 0.
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    SymEig out;
    out.values.resize(n);
    out.vectors = Mat(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

// Solve m * x = rhs for SPD m via Cholesky. Throws numeric_error when the
// factorization hits a non-positive pivot.
inline Mat solve_spd(const Mat& m, const Mat& rhs) {
    const std::size_t n = m.rows();
    if (n == 0 || n != m.cols())
        throw std::invalid_argument("solve_spd: matrix must be square and non-empty");
    if (rhs.rows() != n)
        throw std::invalid_argument("solve_spd: rhs row count differs from matrix order");

    Mat l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = m(i, j);
            for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            if (i == j) {
                if (!(acc > 0.0) || !std::isfinite(acc))
                    throw numeric_error("solve_spd: matrix is not positive definite");
                l(i, i) = std::sqrt(acc);
            } else {
                l(i, j) = acc / l(j, j);
            }
        }
    }

    const std::size_t k = rhs.cols();
    Mat x = rhs;
    // forward: L y = rhs
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            double acc = x(i, c);
            for (std::size_t j = 0; j < i; ++j) acc -= l(i, j) * x(j, c);
            x(i, c) = acc / l(i, i);
        }
    }
    // backward: L^T x = y
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t c = 0; c < k; ++c) {
            double acc = x(ii, c);
            for (std::size_t j = ii + 1; j < n; ++j) acc -= l(j, ii) * x(j, c);
            x(ii, c) = acc / l(ii, ii);
        }
    }
    return x;
}

// Random n-by-n orthogonal matrix: Householder QR of a seeded Gaussian
// matrix, with column signs fixed so R has a positive diagonal.
inline Mat qr_orthonormal(std::uint64_t seed, std::size_t n) {
    if (n == 0) throw std::invalid_argument("qr_orthonormal: n must be at least 1");

    Rng rng(seed);
    Mat r(n, n);
    for (double& v : r.data()) v = rng.next_gaussian();

    Mat q = Mat::identity(n);
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < n; ++i) norm += r(i, k) * r(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;

        const double alpha = (r(k, k) >= 0.0) ? -norm : norm;
        double vnorm2 = 0.0;
        for (std::size_t i = k; i < n; ++i) {
            v[i] = r(i, k);
            if (i == k) v[i] -= alpha;
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;

        // R <- (I - 2 v v^T / |v|^2) R on the trailing block
        for (std::size_t j = k; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < n; ++i) dot += v[i] * r(i, j);
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < n; ++i) r(i, j) -= f * v[i];
        }
        // Q <- Q (I - 2 v v^T / |v|^2)
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = k; j < n; ++j) dot += q(i, j) * v[j];
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t j = k; j < n; ++j) q(i, j) -= f * v[j];
        }
    }

    for (std::size_t j = 0; j < n; ++j) {
        if (r(j, j) < 0.0)
            for (std::size_t i = 0; i < n; ++i) q(i, j) = -q(i, j);
    }
    return q;
}

// m^beta by repeated left-to-right multiplication; beta = 0 is rejected
// because no caller ever wants the identity here.
inline Mat mat_power(const Mat& m, std::size_t beta) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("mat_power: matrix must be square");
    if (beta == 0) throw std::invalid_argument("mat_power: beta must be at least 1");
    Mat result = m;
    for (std::size_t i = 1; i < beta; ++i) result = result * m;
    return result;
}

// Rowwise softmax with max subtraction.
inline Mat softmax_rows(const Mat& m) {
    Mat out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* src = m.row_ptr(i);
        double* dst = out.row_ptr(i);
        double mx = src[0];
        for (std::size_t j = 1; j < m.cols(); ++j) mx = std::max(mx, src[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            dst[j] = std::exp(src[j] - mx);
            sum += dst[j];
        }
        for (std::size_t j = 0; j < m.cols(); ++j) dst[j] /= sum;
    }
    return out;
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Mat sigmoid(const Mat& m) {
    Mat out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = sigmoid(m.data()[i]);
    return out;
}

} // namespace sage
