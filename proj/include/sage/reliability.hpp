// Distribution-agnostic reliability weighting for pseudo-labels. Two
// per-sample metrics are read off the weak-view prediction: the max
// confidence and the top-two margin. Running EMA statistics of each metric's
// batch mean and (biased) batch variance feed a truncated Gaussian kernel
//
//     W(q; mu, sigma) = exp(-[min(0, q - mu)]^2 / (2 sigma^2))
//
// so samples at or above the running mean get weight exactly 1 and samples
// below are penalized by their deficit. The final weight is the product of
// the two kernels. Weights are constants to the optimizer.

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sage/matrix.hpp"

namespace sage {

struct ReliabilityTracker {
    double mu_max = 0.0;
    double var_max = 0.0;
    double mu_gap = 0.0;
    double var_gap = 0.0;
    double decay = 0.999;      // EMA decay; first batch initializes directly
    double eps_sigma = 1e-8;   // floor applied to sigma when weighting
    bool initialized = false;
};

struct ConfidenceMetrics {
    std::vector<double> q_max;
    std::vector<double> q_gap;
};

inline ConfidenceMetrics metrics_from_probs(const Mat& probs) {
    if (probs.cols() < 2)
        throw std::invalid_argument("metrics_from_probs: need at least 2 classes");
    ConfidenceMetrics m;
    m.q_max.resize(probs.rows());
    m.q_gap.resize(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const double* row = probs.row_ptr(i);
        double rowsum = 0.0;
        double top1 = -1.0, top2 = -1.0;
        for (std::size_t j = 0; j < probs.cols(); ++j) {
            const double v = row[j];
            rowsum += v;
            if (v > top1) {
                top2 = top1;
                top1 = v;
            } else if (v > top2) {
                top2 = v;
            }
        }
        if (std::fabs(rowsum - 1.0) > 1e-6)
            throw std::invalid_argument("metrics_from_probs: row does not sum to 1");
        m.q_max[i] = top1;
        m.q_gap[i] = top1 - top2;
    }
    return m;
}

namespace detail {

struct MeanVar {
    double mean = 0.0;
    double var = 0.0; // biased (divide by n)
};

inline MeanVar batch_mean_var(const std::vector<double>& xs) {
    MeanVar mv;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) mv.mean += x;
    mv.mean /= n;
    for (double x : xs) mv.var += (x - mv.mean) * (x - mv.mean);
    mv.var /= n;
    return mv;
}

} // namespace detail

inline void update_stats(ReliabilityTracker& t, const std::vector<double>& q_max,
                         const std::vector<double>& q_gap) {
    if (q_max.empty() || q_gap.empty())
        throw std::invalid_argument("update_stats: empty batch");
    const auto mv_max = detail::batch_mean_var(q_max);
    const auto mv_gap = detail::batch_mean_var(q_gap);
    if (!t.initialized) {
        t.mu_max = mv_max.mean;
        t.var_max = mv_max.var;
        t.mu_gap = mv_gap.mean;
        t.var_gap = mv_gap.var;
        t.initialized = true;
        return;
    }
    t.mu_max = t.decay * t.mu_max + (1.0 - t.decay) * mv_max.mean;
    t.var_max = t.decay * t.var_max + (1.0 - t.decay) * mv_max.var;
    t.mu_gap = t.decay * t.mu_gap + (1.0 - t.decay) * mv_gap.mean;
    t.var_gap = t.decay * t.var_gap + (1.0 - t.decay) * mv_gap.var;
}

inline double truncated_gaussian_weight(double q, double mu, double sigma) {
    const double deficit = std::min(0.0, q - mu);
    if (deficit == 0.0) return 1.0;
    return std::exp(-(deficit * deficit) / (2.0 * sigma * sigma));
}

inline std::vector<double> reliability_weights(const ReliabilityTracker& t,
                                               const std::vector<double>& q_max,
                                               const std::vector<double>& q_gap) {
    if (!t.initialized)
        throw std::logic_error("reliability_weights: tracker has no statistics yet");
    if (q_max.size() != q_gap.size())
        throw std::invalid_argument("reliability_weights: metric lengths differ");
    const double sigma_max = std::max(std::sqrt(t.var_max), t.eps_sigma);
    const double sigma_gap = std::max(std::sqrt(t.var_gap), t.eps_sigma);
    std::vector<double> w(q_max.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = truncated_gaussian_weight(q_max[i], t.mu_max, sigma_max) *
               truncated_gaussian_weight(q_gap[i], t.mu_gap, sigma_gap);
    return w;
}

} // namespace sage
