// Simplex equiangular tight frame anchors: K unit vectors in R^d (K <= d+1)
// with identical pairwise inner products -1/(K-1), zero-centered, generated
// once from a seed and never updated. They act as the rigid coordinate frame
// the relational inference module regresses onto.
//
// Construction: take the K-1 eigenvectors of the centering matrix
// O = I_K - (1/K) 1 1^T with nonzero eigenvalue, zero-pad them to d columns,
// rotate by a random orthogonal Q, and scale by sqrt(K/(K-1)). The Gram
// matrix is then (K/(K-1)) (I - (1/K) 1 1^T) regardless of seed.

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "sage/error.hpp"
#include "sage/matrix.hpp"

namespace sage {

struct AnchorFrame {
    std::size_t k = 0;   // number of anchors
    std::size_t d = 0;   // ambient dimension
    std::uint64_t seed = 0;
    Mat p;               // k x d, one unit-norm anchor per row
};

inline AnchorFrame generate_etf(std::size_t k, std::size_t d, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("generate_etf: need at least 2 anchors");
    if (k > d + 1)
        throw infeasible_error(
            "generate_etf: an equiangular frame with pairwise dot -1/(K-1) "
            "requires K <= d+1 (got K=" + std::to_string(k) +
            ", d=" + std::to_string(d) + ")");

    // Centering matrix and its non-null eigenbasis.
    Mat centering(k, k, -1.0 / static_cast<double>(k));
    for (std::size_t i = 0; i < k; ++i) centering(i, i) += 1.0;
    const SymEig eig = sym_eig(centering);

    // Eigenvalues are {0, 1 x (k-1)} in ascending order; drop the null vector.
    Mat basis(k, d);
    for (std::size_t j = 1; j < k; ++j)
        for (std::size_t i = 0; i < k; ++i) basis(i, j - 1) = eig.vectors(i, j);

    const Mat q = qr_orthonormal(seed, d);
    const double scale = std::sqrt(static_cast<double>(k) / static_cast<double>(k - 1));

    AnchorFrame frame;
    frame.k = k;
    frame.d = d;
    frame.seed = seed;
    frame.p = mul_abt(basis, q); // basis * Q^T
    frame.p *= scale;
    return frame;
}

struct FrameReport {
    double max_norm_dev = 0.0;   // max | |p_i| - 1 |
    double max_angle_dev = 0.0;  // max | p_i . p_j + 1/(K-1) |, i != j
    double max_center_dev = 0.0; // max | column sum |
};

inline FrameReport verify_frame(const AnchorFrame& frame) {
    FrameReport report;
    const Mat gram = mul_abt(frame.p, frame.p);
    const double target = -1.0 / static_cast<double>(frame.k - 1);
    for (std::size_t i = 0; i < frame.k; ++i) {
        report.max_norm_dev =
            std::max(report.max_norm_dev, std::fabs(std::sqrt(gram(i, i)) - 1.0));
        for (std::size_t j = 0; j < frame.k; ++j) {
            if (i == j) continue;
            report.max_angle_dev =
                std::max(report.max_angle_dev, std::fabs(gram(i, j) - target));
        }
    }
    for (std::size_t j = 0; j < frame.d; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < frame.k; ++i) col += frame.p(i, j);
        report.max_center_dev = std::max(report.max_center_dev, std::fabs(col));
    }
    return report;
}

// Plain-text serialization: header "K d seed", then K rows of d values with
// 17 significant digits (lossless for doubles).
inline void save_anchors(const AnchorFrame& frame, std::ostream& os) {
    os << frame.k << " " << frame.d << " " << frame.seed << "\n";
    char buf[40];
    for (std::size_t i = 0; i < frame.k; ++i) {
        for (std::size_t j = 0; j < frame.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", frame.p(i, j));
            os << buf << (j + 1 == frame.d ? "" : " ");
        }
        os << "\n";
    }
}

inline void save_anchors(const AnchorFrame& frame, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_anchors: cannot open " + path);
    save_anchors(frame, os);
}

inline AnchorFrame load_anchors(std::istream& is) {
    AnchorFrame frame;
    if (!(is >> frame.k >> frame.d >> frame.seed))
        throw std::runtime_error("load_anchors: malformed header");
    frame.p = Mat(frame.k, frame.d);
    for (std::size_t i = 0; i < frame.k; ++i)
        for (std::size_t j = 0; j < frame.d; ++j)
            if (!(is >> frame.p(i, j)))
                throw std::runtime_error("load_anchors: truncated matrix body");
    return frame;
}

inline AnchorFrame load_anchors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_anchors: cannot open " + path);
    return load_anchors(is);
}

} // namespace sage
