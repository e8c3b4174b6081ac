// The trainable network: an MLP backbone producing features f, a linear
// projection head producing z, and two linear classification heads (primary
// and auxiliary) sharing the backbone. Forward caches every layer input so
// backward can accumulate exact gradients into per-tensor buffers; the
// gradient contract is agreement with central finite differences.
//
// ReLU sits between backbone layers only; the final backbone layer, the
// projection and both heads are plain affine maps. At a ReLU kink the
// subgradient 0 is used.

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sage/matrix.hpp"
#include "sage/rng.hpp"

namespace sage {

struct ModelDims {
    std::size_t input_dim = 8;
    std::vector<std::size_t> hidden = {64, 64};
    std::size_t feature_dim = 16;
    std::size_t classes = 6;
};

struct Linear {
    Mat w;                  // in x out
    std::vector<double> b;  // out
    Mat gw;                 // gradient buffers, same shapes
    std::vector<double> gb;
};

struct ModelParams {
    ModelDims dims;
    std::vector<Linear> backbone; // input_dim -> hidden... -> feature_dim
    Linear projection;            // feature_dim -> feature_dim
    Linear cls_head;              // feature_dim -> classes
    Linear aux_head;              // feature_dim -> classes
};

namespace detail {

inline Linear make_linear(std::size_t in, std::size_t out, Rng& rng) {
    if (in == 0 || out == 0)
        throw std::invalid_argument("model: zero-width layer");
    Linear l;
    l.w = Mat(in, out);
    const double stdev = std::sqrt(2.0 / static_cast<double>(in)); // fan-in scaling
    for (double& v : l.w.data()) v = stdev * rng.next_gaussian();
    l.b.assign(out, 0.0);
    l.gw = Mat(in, out);
    l.gb.assign(out, 0.0);
    return l;
}

inline Mat affine(const Mat& x, const Linear& l) {
    Mat y = x * l.w;
    for (std::size_t i = 0; i < y.rows(); ++i) {
        double* r = y.row_ptr(i);
        for (std::size_t j = 0; j < y.cols(); ++j) r[j] += l.b[j];
    }
    return y;
}

// Accumulate dW = x^T * dy, db = column sums of dy.
inline void accumulate_affine_grads(Linear& l, const Mat& x, const Mat& dy) {
    l.gw += mul_atb(x, dy);
    for (std::size_t i = 0; i < dy.rows(); ++i) {
        const double* r = dy.row_ptr(i);
        for (std::size_t j = 0; j < dy.cols(); ++j) l.gb[j] += r[j];
    }
}

} // namespace detail

inline ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
    if (dims.classes < 2)
        throw std::invalid_argument("init_params: need at least 2 classes");
    Rng rng(seed);
    ModelParams p;
    p.dims = dims;

    std::vector<std::size_t> widths;
    widths.push_back(dims.input_dim);
    for (auto h : dims.hidden) widths.push_back(h);
    widths.push_back(dims.feature_dim);
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        p.backbone.push_back(detail::make_linear(widths[i], widths[i + 1], rng));

    p.projection = detail::make_linear(dims.feature_dim, dims.feature_dim, rng);
    p.cls_head = detail::make_linear(dims.feature_dim, dims.classes, rng);
    p.aux_head = detail::make_linear(dims.feature_dim, dims.classes, rng);
    return p;
}

// Visit every parameter/gradient pair in a fixed order (backbone layers,
// projection, cls head, aux head; weights row-major then bias). The trainer
// relies on this order for its velocity buffers.
template <typename F>
inline void for_each_param(ModelParams& p, F&& f) {
    auto visit = [&](Linear& l) {
        for (std::size_t i = 0; i < l.w.size(); ++i) f(l.w.data()[i], l.gw.data()[i]);
        for (std::size_t i = 0; i < l.b.size(); ++i) f(l.b[i], l.gb[i]);
    };
    for (auto& l : p.backbone) visit(l);
    visit(p.projection);
    visit(p.cls_head);
    visit(p.aux_head);
}

inline std::size_t param_count(const ModelParams& p) {
    std::size_t n = 0;
    auto count = [&](const Linear& l) { n += l.w.size() + l.b.size(); };
    for (const auto& l : p.backbone) count(l);
    count(p.projection);
    count(p.cls_head);
    count(p.aux_head);
    return n;
}

inline void zero_grads(ModelParams& p) {
    for_each_param(p, [](double&, double& g) { g = 0.0; });
}

struct BatchActivations {
    // layer_out[0] is the input batch; layer_out[l+1] is backbone layer l's
    // output (post-ReLU for hidden layers). layer_out.back() == f.
    std::vector<Mat> layer_out;
    Mat f;          // batch x feature_dim backbone features
    Mat z;          // batch x feature_dim projections
    Mat logits_cls; // batch x classes
    Mat logits_aux; // batch x classes
    bool valid = false;
};

inline BatchActivations forward(const ModelParams& p, const Mat& x) {
    if (x.cols() != p.dims.input_dim)
        throw std::invalid_argument("forward: input column count differs from input_dim");
    BatchActivations acts;
    acts.layer_out.reserve(p.backbone.size() + 1);
    acts.layer_out.push_back(x);
    for (std::size_t l = 0; l < p.backbone.size(); ++l) {
        Mat y = detail::affine(acts.layer_out.back(), p.backbone[l]);
        if (l + 1 < p.backbone.size())
            for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
        acts.layer_out.push_back(std::move(y));
    }
    acts.f = acts.layer_out.back();
    acts.z = detail::affine(acts.f, p.projection);
    acts.logits_cls = detail::affine(acts.f, p.cls_head);
    acts.logits_aux = detail::affine(acts.f, p.aux_head);
    acts.valid = true;
    return acts;
}

// Upstream gradients entering the network outputs. Empty matrices mean zero.
struct UpstreamGrads {
    Mat d_logits_cls;
    Mat d_logits_aux;
    Mat d_z;
    Mat d_f; // direct contribution into f, beyond the head/projection paths
};

inline void backward(ModelParams& p, const BatchActivations& acts, const UpstreamGrads& up) {
    if (!acts.valid)
        throw std::logic_error("backward: forward must run first on this batch");

    const std::size_t batch = acts.f.rows();
    Mat d_f(batch, p.dims.feature_dim);
    if (!up.d_f.empty()) d_f += up.d_f;
    if (!up.d_z.empty()) {
        detail::accumulate_affine_grads(p.projection, acts.f, up.d_z);
        d_f += mul_abt(up.d_z, p.projection.w);
    }
    if (!up.d_logits_cls.empty()) {
        detail::accumulate_affine_grads(p.cls_head, acts.f, up.d_logits_cls);
        d_f += mul_abt(up.d_logits_cls, p.cls_head.w);
    }
    if (!up.d_logits_aux.empty()) {
        detail::accumulate_affine_grads(p.aux_head, acts.f, up.d_logits_aux);
        d_f += mul_abt(up.d_logits_aux, p.aux_head.w);
    }

    Mat delta = std::move(d_f);
    for (std::size_t li = p.backbone.size(); li-- > 0;) {
        if (li + 1 < p.backbone.size()) {
            // ReLU mask; output == 0 covers both the negative side and the kink.
            const Mat& out = acts.layer_out[li + 1];
            for (std::size_t i = 0; i < delta.size(); ++i)
                if (out.data()[i] <= 0.0) delta.data()[i] = 0.0;
        }
        detail::accumulate_affine_grads(p.backbone[li], acts.layer_out[li], delta);
        if (li > 0) delta = mul_abt(delta, p.backbone[li].w);
    }
}

// Versioned text checkpoint: dims header plus the flat parameter list in
// for_each_param order, 17 significant digits.
inline void save_checkpoint(ModelParams& p, std::ostream& os) {
    os << "sage-checkpoint 1\n";
    os << "input_dim " << p.dims.input_dim << "\n";
    os << "hidden " << p.dims.hidden.size();
    for (auto h : p.dims.hidden) os << " " << h;
    os << "\n";
    os << "feature_dim " << p.dims.feature_dim << "\n";
    os << "classes " << p.dims.classes << "\n";
    os << "params " << param_count(p) << "\n";
    char buf[40];
    std::size_t column = 0;
    for_each_param(p, [&](double& v, double&) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf << (++column % 8 == 0 ? "\n" : " ");
    });
    if (column % 8 != 0) os << "\n";
}

inline void save_checkpoint(ModelParams& p, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
    save_checkpoint(p, os);
}

inline ModelParams load_checkpoint(std::istream& is) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "sage-checkpoint" || version != 1)
        throw std::runtime_error("load_checkpoint: unrecognized header");

    ModelDims dims;
    std::string key;
    std::size_t hidden_count = 0, declared = 0;
    if (!(is >> key >> dims.input_dim) || key != "input_dim")
        throw std::runtime_error("load_checkpoint: bad input_dim field");
    if (!(is >> key >> hidden_count) || key != "hidden")
        throw std::runtime_error("load_checkpoint: bad hidden field");
    dims.hidden.resize(hidden_count);
    for (auto& h : dims.hidden)
        if (!(is >> h)) throw std::runtime_error("load_checkpoint: truncated hidden list");
    if (!(is >> key >> dims.feature_dim) || key != "feature_dim")
        throw std::runtime_error("load_checkpoint: bad feature_dim field");
    if (!(is >> key >> dims.classes) || key != "classes")
        throw std::runtime_error("load_checkpoint: bad classes field");
    if (!(is >> key >> declared) || key != "params")
        throw std::runtime_error("load_checkpoint: bad params field");

    ModelParams p = init_params(dims, 0);
    if (param_count(p) != declared)
        throw std::runtime_error("load_checkpoint: parameter count mismatch");
    bool truncated = false;
    for_each_param(p, [&](double& v, double& g) {
        if (!(is >> v)) truncated = true;
        g = 0.0;
    });
    if (truncated) throw std::runtime_error("load_checkpoint: truncated parameter list");
    return p;
}

inline ModelParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
    return load_checkpoint(is);
}

} // namespace sage
