// Synthetic datasets for semi-supervised experiments with controllable class
// imbalance. Class means sit on a maximally spread simplex frame scaled by a
// separation factor; samples are isotropic unit-variance Gaussians around
// them. The unlabeled split keeps its ground truth, but only diagnostics may
// read it — the trainer never does.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "sage/anchors.hpp"
#include "sage/error.hpp"
#include "sage/matrix.hpp"
#include "sage/rng.hpp"

namespace sage {

enum class Profile { uniform, long_tailed, arbitrary };

inline std::string to_string(Profile p) {
    switch (p) {
        case Profile::uniform: return "uniform";
        case Profile::long_tailed: return "long_tailed";
        case Profile::arbitrary: return "arbitrary";
    }
    return "uniform";
}

inline Profile profile_from_string(const std::string& s) {
    if (s == "uniform") return Profile::uniform;
    if (s == "long_tailed") return Profile::long_tailed;
    if (s == "arbitrary") return Profile::arbitrary;
    throw std::invalid_argument("unknown distribution profile: " + s);
}

// Per-class sample counts realizing the requested max/min imbalance ratio.
// long_tailed: n_k = round(max * gamma^(-k/(C-1))); arbitrary: the same
// multiset, permuted across class indices by the seed.
inline std::vector<std::size_t> class_counts(std::size_t classes, std::size_t max_count,
                                             double gamma, Profile profile,
                                             std::uint64_t seed) {
    if (classes == 0) throw std::invalid_argument("class_counts: need at least one class");
    if (!(gamma >= 1.0)) throw std::invalid_argument("class_counts: gamma must be >= 1");
    if (max_count == 0) throw std::invalid_argument("class_counts: max_count must be positive");

    std::vector<std::size_t> counts(classes, max_count);
    if (profile == Profile::uniform || classes == 1) return counts;

    for (std::size_t k = 0; k < classes; ++k) {
        const double exponent = -static_cast<double>(k) / static_cast<double>(classes - 1);
        const double n = static_cast<double>(max_count) * std::pow(gamma, exponent);
        counts[k] = static_cast<std::size_t>(std::max(1.0, std::round(n)));
    }
    if (profile == Profile::arbitrary) {
        Rng rng(derive_seed(seed, 0x616c6c6f63ull));
        for (std::size_t i = classes - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
            std::swap(counts[i], counts[j]);
        }
    }
    return counts;
}

struct Split {
    Mat x;
    std::vector<int> y;
};

struct Dataset {
    Split labeled;
    Split unlabeled; // y is hidden ground truth, diagnostics only
    Split test;      // balanced
    std::size_t classes = 0;
    std::size_t input_dim = 0;
    double separation = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline Split draw_split(const Mat& means, const std::vector<std::size_t>& counts,
                        std::size_t input_dim, Rng& rng) {
    std::size_t total = 0;
    for (auto n : counts) total += n;
    Split split;
    split.x = Mat(total, input_dim);
    split.y.reserve(total);
    std::size_t row = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        for (std::size_t n = 0; n < counts[c]; ++n, ++row) {
            double* dst = split.x.row_ptr(row);
            const double* mean = means.row_ptr(c);
            for (std::size_t j = 0; j < input_dim; ++j)
                dst[j] = mean[j] + rng.next_gaussian();
            split.y.push_back(static_cast<int>(c));
        }
    }
    return split;
}

} // namespace detail

inline Dataset generate_dataset(std::size_t classes, std::size_t input_dim,
                                const std::vector<std::size_t>& counts_labeled,
                                const std::vector<std::size_t>& counts_unlabeled,
                                std::size_t test_per_class, double separation,
                                std::uint64_t seed) {
    if (!(separation > 0.0))
        throw std::invalid_argument("generate_dataset: separation must be positive");
    if (counts_labeled.size() != classes || counts_unlabeled.size() != classes)
        throw std::invalid_argument("generate_dataset: counts length differs from class count");
    if (classes > input_dim + 1)
        throw infeasible_error(
            "generate_dataset: cannot spread " + std::to_string(classes) +
            " class means equiangularly in dimension " + std::to_string(input_dim));

    // Class means: simplex-frame directions scaled by the separation factor.
    const AnchorFrame directions = generate_etf(classes, input_dim, derive_seed(seed, 1));
    Mat means = directions.p;
    means *= separation;

    Dataset ds;
    ds.classes = classes;
    ds.input_dim = input_dim;
    ds.separation = separation;
    ds.seed = seed;

    Rng rng(derive_seed(seed, 2));
    ds.labeled = detail::draw_split(means, counts_labeled, input_dim, rng);
    ds.unlabeled = detail::draw_split(means, counts_unlabeled, input_dim, rng);
    ds.test = detail::draw_split(means, std::vector<std::size_t>(classes, test_per_class),
                                 input_dim, rng);
    return ds;
}

struct AugmentSpec {
    double sigma_weak = 0.1;
    double sigma_strong = 0.5;
    double mask_prob = 0.2; // strong views only: coordinate dropout
};

inline Mat weak_view(const Mat& x, const AugmentSpec& spec, Rng& rng) {
    Mat out = x;
    if (spec.sigma_weak > 0.0)
        for (double& v : out.data()) v += spec.sigma_weak * rng.next_gaussian();
    return out;
}

inline Mat strong_view(const Mat& x, const AugmentSpec& spec, Rng& rng) {
    Mat out = x;
    if (spec.sigma_strong > 0.0)
        for (double& v : out.data()) v += spec.sigma_strong * rng.next_gaussian();
    if (spec.mask_prob > 0.0)
        for (double& v : out.data())
            if (rng.next_double() < spec.mask_prob) v = 0.0;
    return out;
}

// Text container: header with class count, input dim, per-split class
// counts and the seed, then one "split label features..." row per sample.
inline void save_dataset(const Dataset& ds, std::ostream& os) {
    auto per_class = [&](const Split& s) {
        std::vector<std::size_t> counts(ds.classes, 0);
        for (int y : s.y) counts[static_cast<std::size_t>(y)]++;
        return counts;
    };
    auto write_counts = [&](const char* name, const std::vector<std::size_t>& counts) {
        os << name;
        for (auto c : counts) os << " " << c;
        os << "\n";
    };
    os << "sage-dataset 1\n";
    os << "classes " << ds.classes << "\n";
    os << "input_dim " << ds.input_dim << "\n";
    char sep[40];
    std::snprintf(sep, sizeof sep, "%.17g", ds.separation);
    os << "separation " << sep << "\n";
    os << "seed " << ds.seed << "\n";
    write_counts("labeled_counts", per_class(ds.labeled));
    write_counts("unlabeled_counts", per_class(ds.unlabeled));
    write_counts("test_counts", per_class(ds.test));

    char buf[40];
    auto write_split = [&](char tag, const Split& s) {
        for (std::size_t i = 0; i < s.x.rows(); ++i) {
            os << tag << " " << s.y[i];
            for (std::size_t j = 0; j < s.x.cols(); ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", s.x(i, j));
                os << " " << buf;
            }
            os << "\n";
        }
    };
    write_split('l', ds.labeled);
    write_split('u', ds.unlabeled);
    write_split('t', ds.test);
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_dataset: cannot open " + path);
    save_dataset(ds, os);
}

inline Dataset load_dataset(std::istream& is) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "sage-dataset" || version != 1)
        throw std::runtime_error("load_dataset: unrecognized header");

    Dataset ds;
    std::string key;
    auto expect_key = [&](const char* want) {
        if (!(is >> key) || key != want)
            throw std::runtime_error(std::string("load_dataset: expected field ") + want);
    };
    expect_key("classes");
    is >> ds.classes;
    expect_key("input_dim");
    is >> ds.input_dim;
    expect_key("separation");
    is >> ds.separation;
    expect_key("seed");
    is >> ds.seed;

    auto read_counts = [&](const char* want) {
        expect_key(want);
        std::vector<std::size_t> counts(ds.classes);
        for (auto& c : counts)
            if (!(is >> c)) throw std::runtime_error("load_dataset: truncated counts");
        return counts;
    };
    const auto cl = read_counts("labeled_counts");
    const auto cu = read_counts("unlabeled_counts");
    const auto ct = read_counts("test_counts");

    auto total = [](const std::vector<std::size_t>& v) {
        return std::accumulate(v.begin(), v.end(), std::size_t{0});
    };
    ds.labeled.x = Mat(total(cl), ds.input_dim);
    ds.unlabeled.x = Mat(total(cu), ds.input_dim);
    ds.test.x = Mat(total(ct), ds.input_dim);

    std::size_t rl = 0, ru = 0, rt = 0;
    std::string tag;
    while (is >> tag) {
        Split* split = nullptr;
        std::size_t* row = nullptr;
        if (tag == "l") { split = &ds.labeled; row = &rl; }
        else if (tag == "u") { split = &ds.unlabeled; row = &ru; }
        else if (tag == "t") { split = &ds.test; row = &rt; }
        else throw std::runtime_error("load_dataset: unknown split tag " + tag);
        int y = 0;
        if (!(is >> y)) throw std::runtime_error("load_dataset: truncated row");
        if (*row >= split->x.rows()) throw std::runtime_error("load_dataset: too many rows");
        split->y.push_back(y);
        for (std::size_t j = 0; j < ds.input_dim; ++j)
            if (!(is >> (*split).x(*row, j)))
                throw std::runtime_error("load_dataset: truncated features");
        ++*row;
    }
    if (rl != ds.labeled.x.rows() || ru != ds.unlabeled.x.rows() || rt != ds.test.x.rows())
        throw std::runtime_error("load_dataset: row counts differ from header");
    return ds;
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
    return load_dataset(is);
}

} // namespace sage
