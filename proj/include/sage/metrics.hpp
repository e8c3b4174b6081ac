// Evaluation diagnostics: accuracy, pseudo-label quality (accuracy and
// macro-F1), silhouette coefficient, mean inter/intra-class cosine
// similarity, and the correction ratio — the fraction of wrongly
// pseudo-labeled samples whose consensus-weighted neighbor vote recovers the
// true class.

#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "sage/matrix.hpp"

namespace sage {

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("accuracy: length mismatch");
    if (pred.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

struct PseudoLabelQuality {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

// Macro-F1 over the classes present in either array; a class with no true
// or predicted positives contributes F1 = 0.
inline PseudoLabelQuality pseudo_label_quality(const std::vector<int>& pred,
                                               const std::vector<int>& truth) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("pseudo_label_quality: length mismatch");
    PseudoLabelQuality q;
    q.accuracy = accuracy(pred, truth);

    std::set<int> classes(truth.begin(), truth.end());
    classes.insert(pred.begin(), pred.end());
    double f1_sum = 0.0;
    for (int c : classes) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == c && truth[i] == c) ++tp;
            else if (pred[i] == c) ++fp;
            else if (truth[i] == c) ++fn;
        }
        const double denom = static_cast<double>(2 * tp + fp + fn);
        f1_sum += denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
    }
    q.macro_f1 = classes.empty() ? 0.0 : f1_sum / static_cast<double>(classes.size());
    return q;
}

// Mean silhouette with Euclidean distances: s_i = (b_i - a_i) / max(a_i, b_i)
// where a_i is the mean distance inside the own class (self excluded) and
// b_i the smallest mean distance to another class. Singletons contribute 0.
inline double silhouette(const Mat& features, const std::vector<int>& labels) {
    const std::size_t n = features.rows();
    if (labels.size() != n)
        throw std::invalid_argument("silhouette: label count differs from rows");
    std::set<int> classes(labels.begin(), labels.end());
    if (classes.size() < 2)
        throw std::domain_error("silhouette: undefined with fewer than two classes");

    Mat dist(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double acc = 0.0;
            const double* a = features.row_ptr(i);
            const double* b = features.row_ptr(j);
            for (std::size_t k = 0; k < features.cols(); ++k) {
                const double d = a[k] - b[k];
                acc += d * d;
            }
            dist(i, j) = dist(j, i) = std::sqrt(acc);
        }
    }

    std::vector<int> class_ids(classes.begin(), classes.end());
    std::vector<std::size_t> counts(class_ids.size(), 0);
    std::vector<std::size_t> idx_of(labels.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::lower_bound(class_ids.begin(), class_ids.end(), labels[i]);
        idx_of[i] = static_cast<std::size_t>(it - class_ids.begin());
        counts[idx_of[i]]++;
    }

    double total = 0.0;
    std::vector<double> sums(class_ids.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[idx_of[i]] == 1) continue; // singleton: s_i = 0
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sums[idx_of[j]] += dist(i, j);

        const double own = sums[idx_of[i]] / static_cast<double>(counts[idx_of[i]] - 1);
        double other = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < class_ids.size(); ++c) {
            if (c == idx_of[i] || counts[c] == 0) continue;
            other = std::min(other, sums[c] / static_cast<double>(counts[c]));
        }
        const double denom = std::max(own, other);
        if (denom > 0.0) total += (other - own) / denom;
    }
    return total / static_cast<double>(n);
}

struct ClassSimilarity {
    double inter = 0.0; // mean cosine over different-class pairs
    double intra = 0.0; // mean cosine over same-class pairs
};

inline ClassSimilarity class_similarity(const Mat& features, const std::vector<int>& labels) {
    const std::size_t n = features.rows();
    if (labels.size() != n)
        throw std::invalid_argument("class_similarity: label count differs from rows");
    std::set<int> classes(labels.begin(), labels.end());
    if (classes.size() < 2)
        throw std::domain_error("class_similarity: inter undefined with a single class");

    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* r = features.row_ptr(i);
        for (std::size_t k = 0; k < features.cols(); ++k) acc += r[k] * r[k];
        norms[i] = std::sqrt(acc);
    }

    double intra_sum = 0.0, inter_sum = 0.0;
    std::size_t intra_n = 0, inter_n = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double cosine = 0.0;
            if (norms[i] >= 1e-12 && norms[j] >= 1e-12) {
                double dot = 0.0;
                const double* a = features.row_ptr(i);
                const double* b = features.row_ptr(j);
                for (std::size_t k = 0; k < features.cols(); ++k) dot += a[k] * b[k];
                cosine = dot / (norms[i] * norms[j]);
            }
            if (labels[i] == labels[j]) {
                intra_sum += cosine;
                ++intra_n;
            } else {
                inter_sum += cosine;
                ++inter_n;
            }
        }
    }
    ClassSimilarity out;
    out.intra = intra_n ? intra_sum / static_cast<double>(intra_n) : 0.0;
    out.inter = inter_n ? inter_sum / static_cast<double>(inter_n) : 0.0;
    return out;
}

// Among samples whose pseudo-label disagrees with the hidden truth, count
// those whose consensus-weighted plurality vote over the batch's
// pseudo-labels lands on the truth. Returns 0 when nothing is wrong.
inline double correction_ratio(const Mat& consensus, const std::vector<int>& pseudo,
                               const std::vector<int>& truth) {
    const std::size_t n = consensus.rows();
    if (consensus.cols() != n || pseudo.size() != n || truth.size() != n)
        throw std::invalid_argument("correction_ratio: shape mismatch");
    int max_class = 0;
    for (std::size_t i = 0; i < n; ++i)
        max_class = std::max({max_class, pseudo[i], truth[i]});
    const std::size_t c = static_cast<std::size_t>(max_class) + 1;

    std::size_t wrong = 0, rectified = 0;
    std::vector<double> votes(c);
    for (std::size_t i = 0; i < n; ++i) {
        if (pseudo[i] == truth[i]) continue;
        ++wrong;
        std::fill(votes.begin(), votes.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j)
            votes[static_cast<std::size_t>(pseudo[j])] += consensus(i, j);
        std::size_t best = 0;
        for (std::size_t k = 1; k < c; ++k)
            if (votes[k] > votes[best]) best = k;
        if (static_cast<int>(best) == truth[i]) ++rectified;
    }
    if (wrong == 0) return 0.0;
    return static_cast<double>(rectified) / static_cast<double>(wrong);
}

struct DiagnosticReport {
    double test_acc = 0.0;
    double pl_acc = 0.0;
    double pl_f1_macro = 0.0;
    double silhouette = 0.0;
    double inter_sim = 0.0;
    double intra_sim = 0.0;
    double correction_ratio = 0.0;
};

} // namespace sage
