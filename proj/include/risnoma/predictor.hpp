#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "risnoma/neural/lstm.hpp"
#include "risnoma/ucs.hpp"

namespace risnoma {

/// How a probability estimate becomes the indicator fed to the agent.
enum class StateMode {
    threshold,    // U = 1 iff p >= 0.5
    bernoulli,    // U ~ Bernoulli(p)
    probability,  // the agent sees p itself
};

StateMode parse_state_mode(const std::string& name);
std::string to_string(StateMode m);

struct PredictorConfig {
    std::size_t window = 5;
    std::size_t hidden = 64;
    std::size_t layers = 2;
    std::size_t epochs = 60;
    std::size_t batch_size = 16;
    double lr = 1e-3;
    /// Learning rate of the last epoch; the rate decays geometrically from
    /// `lr`. Equal to `lr` means a constant rate.
    double lr_final = 1e-5;
    double rho = 0.9;
    /// Trailing fraction of the training windows held out for model
    /// selection: the parameters of the epoch with the lowest hold-out MSE are
    /// kept. 0 disables the hold-out and keeps the last epoch.
    double validation_fraction = 0.0;
    /// Predict the change from the last observed probability.
    bool residual = true;
    std::uint64_t seed = 7;
    StateMode state_mode = StateMode::threshold;

    void validate() const;
};

struct TrainReport {
    std::vector<double> epoch_loss;        // mean training MSE per epoch
    std::vector<double> validation_loss;   // hold-out MSE per epoch (empty without hold-out)
    std::size_t best_epoch = 0;            // epoch whose parameters were kept
};

/// One LSTM regressor per user.
class PredictorBank {
public:
    PredictorBank() = default;
    PredictorBank(std::size_t k_users, PredictorConfig cfg);

    /// Trains user k's model on its dataset with RMSprop. Throws ConfigError on
    /// an empty dataset or a window length mismatch.
    TrainReport train(std::size_t k, const UcsDataset& data);

    /// p in [0, 1]. Throws InvariantViolation if user k is untrained.
    [[nodiscard]] double predict(std::size_t k, std::span<const double> window) const;
    /// Predictions for every window of a dataset, in order.
    [[nodiscard]] std::vector<double> predict_all(std::size_t k, const UcsDataset& data) const;
    /// Unclamped network output.
    [[nodiscard]] double predict_raw(std::size_t k, std::span<const double> window) const;

    [[nodiscard]] std::size_t users() const { return models_.size(); }
    [[nodiscard]] bool trained(std::size_t k) const { return trained_.at(k) != 0; }
    [[nodiscard]] const PredictorConfig& config() const { return cfg_; }
    nn::LstmRegressor& model(std::size_t k) { return models_.at(k); }
    void mark_trained(std::size_t k) { trained_.at(k) = 1; }

    void save(const std::filesystem::path& path);
    void load(const std::filesystem::path& path);

private:
    PredictorConfig cfg_;
    std::vector<nn::LstmRegressor> models_;
    std::vector<std::uint8_t> trained_;
};

/// Threshold rule: 1 iff p >= 0.5.
int predict_state(double p);

/// Clamps to [0, 1].
double clamp_probability(double raw);

/// Mean squared error between two equally long sequences.
double mse(std::span<const double> a, std::span<const double> b);

/// Mean squared error of the "repeat the last observation" forecaster.
double persistence_mse(const UcsDataset& data);

/// Rows "user,index,true,predicted,persistence" for the test windows.
void write_pred_vs_true_csv(const std::filesystem::path& path, const std::vector<UcsDataset>& tests,
                            const std::vector<std::vector<double>>& predictions);

}  // namespace risnoma
