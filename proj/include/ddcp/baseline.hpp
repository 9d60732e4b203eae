#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddcp/cvae.hpp"
#include "ddcp/dataset.hpp"
#include "ddcp/params.hpp"

namespace ddcp {

// J0(2*pi*f_D*tau*delta): temporal correlation of a Jakes tap delta frames
// ahead, tau = frame duration.
double ar1_coefficient(double doppler_hz, double frame_period_s, int delta);

std::vector<double> predict_zero(std::size_t dim);

// Outdated-CSI reference: the last observed frame, unchanged.
std::vector<double> predict_stale(std::span<const double> x_t);

// Optimal scalar Wiener predictor x_hat = rho * x_t, rho = J0(2 pi f_D tau delta).
std::vector<double> predict_ar1(std::span<const double> x_t, int delta, double doppler_hz,
                                double frame_period_s);

// Simplified stand-in for the learned reference predictor: one tanh
// recurrent cell unrolled over the past frames with a linear head emitting
// the delta-ahead frame. Reported as "simplified-recurrent" everywhere.
struct RecurrentConfig {
    std::size_t frame_dim = 0;  // 2*M*N*L
    std::size_t e_dim = 20;
    std::size_t hidden = 64;
    int unroll = 4;  // past frames fed before predicting

    void validate() const;
    nlohmann::json to_json() const;
    static RecurrentConfig from_json(const nlohmann::json& j);
};

class RecurrentPredictor {
public:
    RecurrentPredictor(RecurrentConfig cfg, std::uint64_t init_seed);

    static RecurrentPredictor load(const std::string& path);
    void save(const std::string& path,
              nlohmann::json training_meta = nlohmann::json::object()) const;

    const RecurrentConfig& config() const { return cfg_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }

    // history: unroll frames, oldest first; e carries the horizon entry.
    std::vector<double> predict(const std::vector<std::vector<double>>& history,
                                const std::vector<double>& e) const;

    // Graph builder for training and gradient checks.
    Value forward_graph(Tape& tape, const std::vector<std::vector<double>>& history,
                        const std::vector<double>& e, bool with_grads);

private:
    RecurrentPredictor(RecurrentConfig cfg, ParameterSet params);
    Value pleaf(Tape& tape, const std::string& name, bool with_grads);

    RecurrentConfig cfg_;
    ParameterSet params_;
};

struct RecurrentPair {
    std::vector<std::vector<double>> history;
    std::vector<double> e;  // horizon entry = delta being trained
    std::vector<double> target;
};

// History = frames[0..unroll), target = frames[unroll-1+horizon]; samples
// whose horizon does not fit in F are skipped.
std::vector<RecurrentPair> make_recurrent_pairs(const Dataset& ds, int unroll);

struct MseEpochLog {
    int epoch = 0;
    double mse = 0.0;
};

// Squared-error descent with the same optimizer settings as the main model.
std::vector<MseEpochLog> train_recurrent(RecurrentPredictor& model,
                                         const std::vector<RecurrentPair>& pairs,
                                         const TrainConfig& cfg);

}  // namespace ddcp
