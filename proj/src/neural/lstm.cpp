#include "risnoma/neural/lstm.hpp"

#include <cmath>

#include <fmt/format.h>

#include "risnoma/errors.hpp"
#include "risnoma/neural/dense.hpp"

namespace risnoma::nn {

namespace {


void xavier(Tensor2& t, CounterRng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    for (auto& v : t.values()) {
        v = rng.uniform(-limit, limit);
    }
}

}  // namespace

LstmCellParams::LstmCellParams(std::size_t in, std::size_t hidden)
    : w(kGates * hidden, in), u(kGates * hidden, hidden), b(1, kGates * hidden) {
    if (in == 0 || hidden == 0) {
        throw ShapeError("LstmCellParams: zero-sized cell");
    }
}

LstmCell::LstmCell(std::size_t in, std::size_t hidden) : p_(in, hidden), g_(in, hidden) {}

void LstmCell::init(CounterRng& rng) {
    const std::size_t h = hidden();
    // Xavier limits are taken per gate block, as if each gate were its own layer.
    const double lw = std::sqrt(6.0 / static_cast<double>(h + in()));
    const double lu = std::sqrt(6.0 / static_cast<double>(h + h));
    for (auto& v : p_.w.values()) {
        v = rng.uniform(-lw, lw);
    }
    for (auto& v : p_.u.values()) {
        v = rng.uniform(-lu, lu);
    }
    p_.b.fill(0.0);
    for (std::size_t j = 0; j < h; ++j) {
        p_.b(0, kForget * h + j) = 1.0;
    }
}

LstmStepCache LstmCell::step(const Tensor2& x, const Tensor2& h_prev, const Tensor2& c_prev) const {
    if (x.cols() != in() || h_prev.cols() != hidden() || !h_prev.same_shape(c_prev) || x.rows() != h_prev.rows()) {
        throw ShapeError(fmt::format("LstmCell::step: x {}, h {}, c {} for a {}->{} cell", x.shape_string(),
                                     h_prev.shape_string(), c_prev.shape_string(), in(), hidden()));
    }
    const std::size_t h = hidden();
    const std::size_t rows = x.rows();
    LstmStepCache s;
    s.x = x;
    s.h_prev = h_prev;
    s.c_prev = c_prev;
    s.gates = matmul_nt(x, p_.w);
    s.gates += matmul_nt(h_prev, p_.u);
    add_row_broadcast(s.gates, p_.b);
    s.c = Tensor2(rows, h);
    s.tanh_c = Tensor2(rows, h);
    s.h = Tensor2(rows, h);
    for (std::size_t r = 0; r < rows; ++r) {
        auto z = s.gates.row_span(r);
        for (std::size_t j = 0; j < h; ++j) {
            const double f = sigmoid(z[kForget * h + j]);
            const double i = sigmoid(z[kInput * h + j]);
            const double d = std::tanh(z[kCandidate * h + j]);
            const double o = sigmoid(z[kOutput * h + j]);
            z[kForget * h + j] = f;
            z[kInput * h + j] = i;
            z[kCandidate * h + j] = d;
            z[kOutput * h + j] = o;
            const double c = f * c_prev(r, j) + i * d;
            const double tc = std::tanh(c);
            s.c(r, j) = c;
            s.tanh_c(r, j) = tc;
            s.h(r, j) = o * tc;
        }
    }
    check_finite(s.c, "lstm cell state");
    return s;
}

LstmCell::StepGrads LstmCell::backward_step(const LstmStepCache& s, const Tensor2& dh, const Tensor2& dc) {
    if (!dh.same_shape(s.h) || !dc.same_shape(s.c)) {
        throw ShapeError("LstmCell::backward_step: gradient shape mismatch");
    }
    const std::size_t h = hidden();
    const std::size_t rows = s.h.rows();
    Tensor2 dz(rows, kGates * h);
    StepGrads out;
    out.dc_prev = Tensor2(rows, h);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto g = s.gates.row_span(r);
        auto d_row = dz.row_span(r);
        for (std::size_t j = 0; j < h; ++j) {
            const double f = g[kForget * h + j];
            const double i = g[kInput * h + j];
            const double d = g[kCandidate * h + j];
            const double o = g[kOutput * h + j];
            const double tc = s.tanh_c(r, j);
            const double dct = dc(r, j) + dh(r, j) * o * (1.0 - tc * tc);
            d_row[kForget * h + j] = dct * s.c_prev(r, j) * f * (1.0 - f);
            d_row[kInput * h + j] = dct * d * i * (1.0 - i);
            d_row[kCandidate * h + j] = dct * i * (1.0 - d * d);
            d_row[kOutput * h + j] = dh(r, j) * tc * o * (1.0 - o);
            out.dc_prev(r, j) = dct * f;
        }
    }
    add_matmul_tn(g_.w, dz, s.x);
    add_matmul_tn(g_.u, dz, s.h_prev);
    add_column_sums(g_.b, dz);
    out.dx = matmul(dz, p_.w);
    out.dh_prev = matmul(dz, p_.u);
    check_finite(out.dh_prev, "lstm backward");
    return out;
}

void LstmCell::collect(ParamList& out, const std::string& prefix) {
    out.push_back({prefix + "w", &p_.w, &g_.w});
    out.push_back({prefix + "u", &p_.u, &g_.u});
    out.push_back({prefix + "b", &p_.b, &g_.b});
}

std::vector<Tensor2> LstmLayer::forward(const std::vector<Tensor2>& xs) {
    if (xs.empty()) {
        throw ShapeError("LstmLayer::forward: empty sequence");
    }
    std::vector<LstmStepCache> caches;
    caches.reserve(xs.size());
    std::vector<Tensor2> hs;
    hs.reserve(xs.size());
    Tensor2 h(xs.front().rows(), cell_.hidden());
    Tensor2 c(xs.front().rows(), cell_.hidden());
    for (const auto& x : xs) {
        caches.push_back(cell_.step(x, h, c));
        h = caches.back().h;
        c = caches.back().c;
        hs.push_back(h);
    }
    caches_ = std::move(caches);
    return hs;
}

std::vector<Tensor2> LstmLayer::infer(const std::vector<Tensor2>& xs) const {
    if (xs.empty()) {
        throw ShapeError("LstmLayer::infer: empty sequence");
    }
    std::vector<Tensor2> hs;
    hs.reserve(xs.size());
    Tensor2 h(xs.front().rows(), cell_.hidden());
    Tensor2 c(xs.front().rows(), cell_.hidden());
    for (const auto& x : xs) {
        auto s = cell_.step(x, h, c);
        h = std::move(s.h);
        c = std::move(s.c);
        hs.push_back(h);
    }
    return hs;
}

std::vector<Tensor2> LstmLayer::backward(const std::vector<Tensor2>& dhs) {
    if (!caches_) {
        throw InvariantViolation("LstmLayer::backward called without a forward cache");
    }
    const auto& caches = *caches_;
    if (dhs.size() != caches.size()) {
        throw ShapeError(fmt::format("LstmLayer::backward: {} gradients for {} steps", dhs.size(), caches.size()));
    }
    const std::size_t rows = caches.front().h.rows();
    Tensor2 dh_next(rows, cell_.hidden());
    Tensor2 dc_next(rows, cell_.hidden());
    std::vector<Tensor2> dxs(caches.size());
    for (std::size_t t = caches.size(); t-- > 0;) {
        Tensor2 dh = dh_next;
        if (!dhs[t].empty()) {
            dh += dhs[t];
        }
        auto g = cell_.backward_step(caches[t], dh, dc_next);
        dxs[t] = std::move(g.dx);
        dh_next = std::move(g.dh_prev);
        dc_next = std::move(g.dc_prev);
    }
    caches_.reset();
    return dxs;
}

LstmRegressor::LstmRegressor(std::size_t in, std::size_t hidden, std::size_t layers, bool residual)
    : w_out_(1, hidden), g_out_(1, hidden), residual_(residual) {
    if (layers == 0) {
        throw ShapeError("LstmRegressor: need at least one layer");
    }
    for (std::size_t l = 0; l < layers; ++l) {
        layers_.emplace_back(l == 0 ? in : hidden, hidden);
    }
}

void LstmRegressor::init(CounterRng& rng) {
    for (auto& l : layers_) {
        l.init(rng);
    }
    xavier(w_out_, rng);
    if (residual_) {
        w_out_.fill(0.0);
    }
}

Tensor2 LstmRegressor::forward(const std::vector<Tensor2>& xs) {
    std::vector<Tensor2> hs = xs;
    for (auto& l : layers_) {
        hs = l.forward(hs);
    }
    last_h_ = hs.back();
    Tensor2 y = matmul_nt(*last_h_, w_out_);
    if (residual_) {
        y += slice_cols(xs.back(), 0, 1);
    }
    check_finite(y, "lstm regressor output");
    return y;
}

Tensor2 LstmRegressor::infer(const std::vector<Tensor2>& xs) const {
    std::vector<Tensor2> hs = xs;
    for (const auto& l : layers_) {
        hs = l.infer(hs);
    }
    Tensor2 y = matmul_nt(hs.back(), w_out_);
    if (residual_) {
        y += slice_cols(xs.back(), 0, 1);
    }
    check_finite(y, "lstm regressor output");
    return y;
}

void LstmRegressor::backward(const Tensor2& grad_out) {
    if (!last_h_) {
        throw InvariantViolation("LstmRegressor::backward called without a forward cache");
    }
    if (grad_out.rows() != last_h_->rows() || grad_out.cols() != 1) {
        throw ShapeError("LstmRegressor::backward: gradient must be (batch x 1)");
    }
    add_matmul_tn(g_out_, grad_out, *last_h_);
    last_h_.reset();

    // Only the final step of the top layer feeds the head.
    std::vector<Tensor2> grads(layers_.back().steps());
    grads.back() = matmul(grad_out, w_out_);
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        grads = it->backward(grads);
    }
}

ParamList LstmRegressor::parameters() {
    ParamList out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        layers_[l].collect(out, fmt::format("lstm{}.", l));
    }
    out.push_back({"head.w_out", &w_out_, &g_out_});
    return out;
}

std::vector<Tensor2> windows_to_sequence(const Tensor2& windows) {
    std::vector<Tensor2> xs;
    xs.reserve(windows.cols());
    for (std::size_t t = 0; t < windows.cols(); ++t) {
        xs.push_back(slice_cols(windows, t, 1));
    }
    return xs;
}

}  // namespace risnoma::nn
