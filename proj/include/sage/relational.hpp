// Graph-state relational inference over a batch of projections.
//
// Each projection z_i is re-expressed as ridge-regression coordinates a_i in
// the anchor frame (one shared SPD solve per batch), the batch affinity
// A_ij = <a_i, a_j> is row-softmaxed into a transition matrix, and the
// beta-step power of that matrix is the structural consensus G used as a
// frozen target for the pairwise contrastive loss. A cosine consistency loss
// ties each view's projection to the other view's (frozen) backbone feature.

#pragma once

#include <cstddef>
#include <vector>

#include "sage/anchors.hpp"
#include "sage/matrix.hpp"

namespace sage {

// a = z P^T (P P^T + lambda I)^{-1}, rows of z handled by one factorization.
inline Mat relational_embed(const Mat& z, const AnchorFrame& frame, double lambda) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("relational_embed: lambda must be positive");
    if (z.cols() != frame.d)
        throw std::invalid_argument("relational_embed: z columns differ from frame dimension");

    Mat gram = mul_abt(frame.p, frame.p);
    for (std::size_t i = 0; i < frame.k; ++i) gram(i, i) += lambda;
    const Mat rhs = mul_abt(frame.p, z);          // K x B
    return solve_spd(gram, rhs).transposed();     // B x K
}

struct Consensus {
    Mat affinity;   // A, symmetric
    Mat transition; // rowwise softmax of A
    Mat consensus;  // transition^beta
};

inline Consensus build_consensus(const Mat& embeddings, std::size_t beta) {
    if (beta == 0)
        throw std::invalid_argument("build_consensus: beta must be at least 1");
    Consensus c;
    c.affinity = mul_abt(embeddings, embeddings);
    c.transition = softmax_rows(c.affinity);
    c.consensus = mat_power(c.transition, beta);
    return c;
}

// Everything the relational module derives from one batch, kept together for
// diagnostics dumps.
struct RelationalState {
    Mat embeddings; // B x K
    Mat affinity;
    Mat transition;
    Mat consensus;
    Mat similarity; // S_ij = sigmoid(<z_i, z_j>)
    double lambda = 0.0;
    std::size_t beta = 0;
};

inline RelationalState relational_state(const Mat& z, const AnchorFrame& frame,
                                        double lambda, std::size_t beta) {
    RelationalState state;
    state.embeddings = relational_embed(z, frame, lambda);
    Consensus c = build_consensus(state.embeddings, beta);
    state.affinity = std::move(c.affinity);
    state.transition = std::move(c.transition);
    state.consensus = std::move(c.consensus);
    state.similarity = sigmoid(mul_abt(z, z));
    state.lambda = lambda;
    state.beta = beta;
    return state;
}

struct LossGrad {
    double loss = 0.0;
    Mat d_z;
};

namespace detail {
constexpr double kProbClamp = 1e-7; // probability floor before logs
}

// Soft-target BCE between the instance similarity S = sigmoid(z z^T) and the
// frozen consensus, averaged over all ordered pairs (diagonal included).
// Gradients flow only through S; entries pinned by the probability clamp get
// a zero gradient, matching the computed function exactly.
inline LossGrad structural_contrastive_loss(const Mat& z, const Mat& consensus) {
    const std::size_t b = z.rows();
    if (consensus.rows() != b || consensus.cols() != b)
        throw std::invalid_argument("structural_contrastive_loss: consensus shape mismatch");

    const Mat logits = mul_abt(z, z);
    const double inv_pairs = 1.0 / static_cast<double>(b * b);
    const double lo = detail::kProbClamp;
    const double hi = 1.0 - detail::kProbClamp;

    Mat d_logits(b, b);
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            const double g = consensus(i, j);
            const double s_raw = sigmoid(logits(i, j));
            const double s = std::min(std::max(s_raw, lo), hi);
            loss -= g * std::log(s) + (1.0 - g) * std::log(1.0 - s);
            if (s_raw > lo && s_raw < hi)
                d_logits(i, j) = (s_raw - g) * inv_pairs;
        }
    }

    LossGrad out;
    out.loss = loss * inv_pairs;
    // d logits / d z: logits = z z^T, so dL/dz = (D + D^T) z.
    Mat sym = d_logits;
    sym += d_logits.transposed();
    out.d_z = sym * z;
    return out;
}

namespace detail {

constexpr double kNormFloor = 1e-12;

// Cosine similarity with gradient w.r.t. the first argument only. Rows whose
// norm falls under the floor contribute value 0 with zero gradient.
inline double cosine_with_grad(const double* a, const double* c, std::size_t n,
                               double* grad_a) {
    double dot = 0.0, na2 = 0.0, nc2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        dot += a[k] * c[k];
        na2 += a[k] * a[k];
        nc2 += c[k] * c[k];
    }
    const double na = std::sqrt(na2);
    const double nc = std::sqrt(nc2);
    if (na < kNormFloor || nc < kNormFloor) return 0.0;
    const double value = dot / (na * nc);
    if (grad_a) {
        const double inv = 1.0 / (na * nc);
        for (std::size_t k = 0; k < n; ++k)
            grad_a[k] = c[k] * inv - value * a[k] / na2;
    }
    return value;
}

} // namespace detail

struct PairLossGrad {
    double loss = 0.0;
    Mat d_z_weak;
    Mat d_z_strong;
};

// L = -mean_i [ cos(z_w_i, f_s_i) + cos(z_s_i, f_w_i) ]; the f views are
// constants, so only the two z matrices receive gradient.
inline PairLossGrad representation_consistency_loss(const Mat& z_weak, const Mat& z_strong,
                                                    const Mat& f_weak, const Mat& f_strong) {
    const std::size_t b = z_weak.rows();
    const std::size_t n = z_weak.cols();
    if (z_strong.rows() != b || f_weak.rows() != b || f_strong.rows() != b ||
        z_strong.cols() != n || f_weak.cols() != n || f_strong.cols() != n)
        throw std::invalid_argument("representation_consistency_loss: shape mismatch");

    PairLossGrad out;
    out.d_z_weak = Mat(b, n);
    out.d_z_strong = Mat(b, n);
    std::vector<double> grad(n);
    double acc = 0.0;
    const double scale = -1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        std::fill(grad.begin(), grad.end(), 0.0);
        acc += detail::cosine_with_grad(z_weak.row_ptr(i), f_strong.row_ptr(i), n, grad.data());
        for (std::size_t k = 0; k < n; ++k) out.d_z_weak(i, k) = scale * grad[k];

        std::fill(grad.begin(), grad.end(), 0.0);
        acc += detail::cosine_with_grad(z_strong.row_ptr(i), f_weak.row_ptr(i), n, grad.data());
        for (std::size_t k = 0; k < n; ++k) out.d_z_strong(i, k) = scale * grad[k];
    }
    out.loss = scale * acc;
    return out;
}

// Cross-view variant of the contrastive loss: S_ij = sigmoid(<z_w_i, z_s_j>).
// Off by default; kept behind a config flag for sensitivity studies.
struct CrossLossGrad {
    double loss = 0.0;
    Mat d_z_weak;
    Mat d_z_strong;
};

inline CrossLossGrad structural_contrastive_loss_cross(const Mat& z_weak, const Mat& z_strong,
                                                       const Mat& consensus) {
    const std::size_t b = z_weak.rows();
    if (z_strong.rows() != b || consensus.rows() != b || consensus.cols() != b)
        throw std::invalid_argument("structural_contrastive_loss_cross: shape mismatch");

    const Mat logits = mul_abt(z_weak, z_strong);
    const double inv_pairs = 1.0 / static_cast<double>(b * b);
    const double lo = detail::kProbClamp;
    const double hi = 1.0 - detail::kProbClamp;

    Mat d_logits(b, b);
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            const double g = consensus(i, j);
            const double s_raw = sigmoid(logits(i, j));
            const double s = std::min(std::max(s_raw, lo), hi);
            loss -= g * std::log(s) + (1.0 - g) * std::log(1.0 - s);
            if (s_raw > lo && s_raw < hi)
                d_logits(i, j) = (s_raw - g) * inv_pairs;
        }
    }

    CrossLossGrad out;
    out.loss = loss * inv_pairs;
    out.d_z_weak = d_logits * z_strong;
    out.d_z_strong = mul_atb(d_logits, z_weak);
    return out;
}

} // namespace sage
