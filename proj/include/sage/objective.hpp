// Loss terms and prediction. The primary head sees only labeled
// cross-entropy; pseudo-labels come from the primary head on the weak view
// but are frozen before they reach the auxiliary head, whose weighted
// consistency loss (plus its own supervised term) absorbs all pseudo-label
// gradient. Prediction uses the primary head alone.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sage/matrix.hpp"
#include "sage/model.hpp"

namespace sage {

struct CeGrad {
    double loss = 0.0;
    Mat d_logits;
};

namespace detail {

// Per-row log-sum-exp with max subtraction.
inline double log_sum_exp(const double* row, std::size_t n) {
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(row[j] - mx);
    return mx + std::log(sum);
}

} // namespace detail

// Mean cross-entropy with per-sample weights folded in before the batch
// mean. d_logits = w_i / B * (softmax - onehot).
inline CeGrad weighted_cross_entropy(const Mat& logits, const std::vector<int>& labels,
                                     const std::vector<double>& weights) {
    const std::size_t b = logits.rows();
    const std::size_t c = logits.cols();
    if (labels.size() != b || weights.size() != b)
        throw std::invalid_argument("weighted_cross_entropy: batch size mismatch");
    CeGrad out;
    out.d_logits = Mat(b, c);
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
            throw std::invalid_argument("weighted_cross_entropy: label out of range");
        const double* row = logits.row_ptr(i);
        const double lse = detail::log_sum_exp(row, c);
        out.loss += weights[i] * (lse - row[labels[i]]) * inv_b;
        const double wb = weights[i] * inv_b;
        double* d = out.d_logits.row_ptr(i);
        for (std::size_t j = 0; j < c; ++j) d[j] = wb * std::exp(row[j] - lse);
        d[labels[i]] -= wb;
    }
    return out;
}

// Supervised loss of the primary head: plain mean cross-entropy.
inline CeGrad primary_loss(const Mat& logits, const std::vector<int>& labels) {
    return weighted_cross_entropy(logits, labels, std::vector<double>(logits.rows(), 1.0));
}

struct PseudoLabels {
    std::vector<int> labels; // argmax per row, lowest index on ties
    Mat probs;               // softmax of the logits
};

inline PseudoLabels pseudo_label(const Mat& logits) {
    PseudoLabels out;
    out.probs = softmax_rows(logits);
    out.labels.resize(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double* row = logits.row_ptr(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j)
            if (row[j] > row[best]) best = j;
        out.labels[i] = static_cast<int>(best);
    }
    return out;
}

struct AuxLoss {
    double loss = 0.0;
    Mat d_logits_unlabeled;
    Mat d_logits_labeled;
};

// Weighted pseudo-label consistency on the strong unlabeled view plus the
// auxiliary head's own supervised term on the labeled batch.
inline AuxLoss auxiliary_loss(const Mat& logits_aux_unlabeled, const std::vector<int>& pseudo,
                              const std::vector<double>& weights, const Mat& logits_aux_labeled,
                              const std::vector<int>& labels) {
    AuxLoss out;
    CeGrad unlabeled = weighted_cross_entropy(logits_aux_unlabeled, pseudo, weights);
    CeGrad supervised = primary_loss(logits_aux_labeled, labels);
    out.loss = unlabeled.loss + supervised.loss;
    out.d_logits_unlabeled = std::move(unlabeled.d_logits);
    out.d_logits_labeled = std::move(supervised.d_logits);
    return out;
}

inline double total_loss(double l_cls, double l_con, double l_sim, double l_aux) {
    return l_cls + l_con + l_sim + l_aux;
}

struct LossBreakdown {
    double l_cls = 0.0;
    double l_con = 0.0;
    double l_sim = 0.0;
    double l_aux = 0.0;
    double l_total = 0.0;
    double w_mean = 0.0;            // mean reliability weight this batch
    std::vector<int> pseudo_labels; // this batch's frozen pseudo-labels
};

// Test-time prediction: argmax over the primary head's logits; projection
// and auxiliary head play no part.
inline std::vector<int> predict(const ModelParams& params, const Mat& x) {
    const BatchActivations acts = forward(params, x);
    std::vector<int> preds(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* row = acts.logits_cls.row_ptr(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < acts.logits_cls.cols(); ++j)
            if (row[j] > row[best]) best = j;
        preds[i] = static_cast<int>(best);
    }
    return preds;
}

} // namespace sage
