#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "risnoma/neural/param.hpp"
#include "risnoma/neural/tensor.hpp"
#include "risnoma/rng.hpp"

namespace risnoma::nn {

/// Gate block order: forget, input, candidate, output.
enum Gate : std::size_t { kForget = 0, kInput = 1, kCandidate = 2, kOutput = 3 };
inline constexpr std::size_t kGates = 4;

/// Parameters of one LSTM cell, with the four gates stacked as row blocks in
/// the order above: w is (4H x in), u is (4H x H), b is (1 x 4H). Rows
/// [g*H, (g+1)*H) of w hold the input weights of gate g, and so on.
struct LstmCellParams {
    Tensor2 w;
    Tensor2 u;
    Tensor2 b;

    LstmCellParams() = default;
    LstmCellParams(std::size_t in, std::size_t hidden);

    [[nodiscard]] std::size_t in() const { return w.cols(); }
    [[nodiscard]] std::size_t hidden() const { return u.cols(); }
};

/// Everything a single time step needs for its backward pass.
struct LstmStepCache {
    Tensor2 x, h_prev, c_prev;
    Tensor2 gates;  // (batch x 4H) post-activation f | i | d~ | o
    Tensor2 c, tanh_c, h;

    [[nodiscard]] double gate(std::size_t row, Gate g, std::size_t j) const {
        return gates(row, g * c.cols() + j);
    }
};

class LstmCell {
public:
    LstmCell() = default;
    LstmCell(std::size_t in, std::size_t hidden);

    /// Xavier-uniform input and recurrent weights, zero biases except the
    /// forget gate at 1.
    void init(CounterRng& rng);

    /// One step for a batch: x is (batch x in), h_prev/c_prev (batch x hidden).
    [[nodiscard]] LstmStepCache step(const Tensor2& x, const Tensor2& h_prev, const Tensor2& c_prev) const;

    struct StepGrads {
        Tensor2 dx, dh_prev, dc_prev;
    };
    /// Accumulates parameter gradients for one step given dL/dh_t and dL/dc_t.
    StepGrads backward_step(const LstmStepCache& cache, const Tensor2& dh, const Tensor2& dc);

    LstmCellParams& params() { return p_; }
    [[nodiscard]] const LstmCellParams& params() const { return p_; }
    [[nodiscard]] std::size_t in() const { return p_.in(); }
    [[nodiscard]] std::size_t hidden() const { return p_.hidden(); }

    void collect(ParamList& out, const std::string& prefix);

private:
    LstmCellParams p_;
    LstmCellParams g_;
};

/// An LSTM cell unrolled over a sequence, starting from zero state.
class LstmLayer {
public:
    LstmLayer() = default;
    LstmLayer(std::size_t in, std::size_t hidden) : cell_(in, hidden) {}

    void init(CounterRng& rng) { cell_.init(rng); }

    /// Returns h_t for every step and keeps the caches.
    std::vector<Tensor2> forward(const std::vector<Tensor2>& xs);
    [[nodiscard]] std::vector<Tensor2> infer(const std::vector<Tensor2>& xs) const;
    /// Backpropagation through time. `dhs[t]` is dL/dh_t from above (may be
    /// empty tensors for steps that feed nothing). Returns dL/dx_t.
    std::vector<Tensor2> backward(const std::vector<Tensor2>& dhs);

    /// Sequence length of the cached forward pass (0 when no cache).
    [[nodiscard]] std::size_t steps() const { return caches_ ? caches_->size() : 0; }

    LstmCell& cell() { return cell_; }
    [[nodiscard]] const LstmCell& cell() const { return cell_; }
    void collect(ParamList& out, const std::string& prefix) { cell_.collect(out, prefix); }

private:
    LstmCell cell_;
    std::optional<std::vector<LstmStepCache>> caches_;
};

/// Stacked LSTM layers followed by a bias-free linear read-out of the last
/// hidden state: y = h_T w'^T.
class LstmRegressor {
public:
    LstmRegressor() = default;
    /// With `residual` the output is the last input's first feature plus the
    /// head, and the head starts at zero (the untrained model repeats its
    /// last input).
    LstmRegressor(std::size_t in, std::size_t hidden, std::size_t layers, bool residual = false);

    void init(CounterRng& rng);

    /// xs[t] is (batch x in); returns (batch x 1).
    Tensor2 forward(const std::vector<Tensor2>& xs);
    [[nodiscard]] Tensor2 infer(const std::vector<Tensor2>& xs) const;
    void backward(const Tensor2& grad_out);

    ParamList parameters();
    void zero_grad() { zero_grads(parameters()); }

    [[nodiscard]] std::size_t in() const { return layers_.front().cell().in(); }
    [[nodiscard]] std::size_t hidden() const { return layers_.front().cell().hidden(); }
    [[nodiscard]] std::size_t depth() const { return layers_.size(); }
    [[nodiscard]] bool residual() const { return residual_; }
    LstmLayer& layer(std::size_t i) { return layers_.at(i); }
    Tensor2& head() { return w_out_; }

private:
    std::vector<LstmLayer> layers_;
    Tensor2 w_out_;  // 1 x hidden
    Tensor2 g_out_;
    std::optional<Tensor2> last_h_;
    bool residual_ = false;
};

/// Splits a (batch x steps) window matrix into `steps` tensors of (batch x 1).
std::vector<Tensor2> windows_to_sequence(const Tensor2& windows);

}  // namespace risnoma::nn
