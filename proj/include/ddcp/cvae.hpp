#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddcp/dataset.hpp"
#include "ddcp/params.hpp"
#include "ddcp/rng.hpp"
#include "ddcp/tape.hpp"

namespace ddcp {

// How the conditional networks see the world:
//   Parametric   c = e                      (scenario parameters only)
//   Observation  c = [e, flatten(frame_0)]  (parameters + last observed frame)
// Observation is the default for sweeps; a purely parametric model cannot
// track a specific Rayleigh realization.
enum class CondMode { Parametric, Observation };

std::string to_string(CondMode m);
CondMode cond_mode_from_string(const std::string& s);

struct ModelConfig {
    std::size_t input_dim = 0;  // 2*M*N*L
    std::size_t e_dim = 20;
    std::size_t latent_dim = 48;
    int flow_blocks = 4;  // K; 0 recovers the plain conditional VAE
    std::vector<std::size_t> encoder_hidden{256, 128};
    std::vector<std::size_t> decoder_hidden{128, 256};
    std::vector<std::size_t> prior_hidden{64};
    CondMode mode = CondMode::Observation;
    double logsig_lo = -6.0;
    double logsig_hi = 3.0;

    std::size_t cond_dim() const {
        return mode == CondMode::Observation ? e_dim + input_dim : e_dim;
    }
    void validate() const;
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

struct TrainConfig {
    int epochs = 50;
    int batch = 16;
    double lr = 1e-3;
    std::uint64_t seed = 1;
    // KL weight warms linearly 0 -> 1 over this many epochs; 0 disables.
    int beta_warmup_epochs = 10;
};

struct ElboParts {
    double recon_loglik = 0.0;
    double kl_term = 0.0;
    double elbo = 0.0;  // always recon_loglik - kl_term
};

struct LatentSample {
    Tensor z0;
    Tensor zK;
    double log_q0 = 0.0;
    double sum_logdet = 0.0;
};

struct Prediction {
    std::vector<double> mean;                 // average of the decoded draws
    std::vector<std::vector<double>> draws;   // n_samples individual decodes
};

struct EpochLog {
    int epoch = 0;
    double beta = 1.0;
    ElboParts parts;  // means over the epoch's training pairs
};

// Closed-form KL between diagonal Gaussians given (mu, log sigma) pairs.
// Zero exactly when the arguments coincide; non-negative always.
double kl_gauss(const Tensor& mu_q, const Tensor& logsig_q, const Tensor& mu_p,
                const Tensor& logsig_p);

// z0 = mu + exp(logsig) .* eps and the posterior log-density at z0.
std::pair<Tensor, double> reparameterize(const Tensor& mu, const Tensor& logsig,
                                         const Tensor& eps);

// Conditional VAE with a conditional-planar-flow latent space.
//
// Encoder q(z0|x,c), conditional prior p(z0|c) and decoder g(z,c) are tanh
// MLPs with linear heads; log-sigma heads are clamped to [logsig_lo,
// logsig_hi]. Each of the K flow blocks derives (u, w, b) from c by an
// affine map and applies z -> z + u_hat * tanh(w.z + b) with the standard
// invertibility correction on u, so the log-det argument stays positive.
class CvaeModel {
public:
    CvaeModel(ModelConfig cfg, std::uint64_t init_seed);

    static CvaeModel load(const std::string& path);
    void save(const std::string& path, nlohmann::json training_meta = nlohmann::json::object()) const;

    const ModelConfig& config() const { return cfg_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }

    struct GaussPair {
        Value mu, logsig;
    };
    struct FlowOut {
        Value z;           // z_K
        Value sum_logdet;  // scalar
    };

    // Graph builders; with_grads binds parameter leaves to gradient sinks.
    GaussPair encode_graph(Tape& tape, Value x, Value c, bool with_grads);
    GaussPair prior_graph(Tape& tape, Value c, bool with_grads);
    Value reparam_graph(Tape& tape, const GaussPair& q, const Tensor& eps) const;
    Value log_q0_graph(Tape& tape, const GaussPair& q, const Tensor& eps) const;
    FlowOut flows_graph(Tape& tape, Value z0, Value c, bool with_grads);
    Value decode_graph(Tape& tape, Value z, Value c, bool with_grads);
    static Value kl_gauss_graph(Tape& tape, const GaussPair& q, const GaussPair& p);
    static Value gauss_logpdf_graph(Tape& tape, Value z, const GaussPair& p);

    struct ElboGraph {
        Value loss;  // beta-weighted negative ELBO, the training objective
        ElboParts parts;
    };
    ElboGraph elbo_graph(Tape& tape, const std::vector<double>& x,
                         const std::vector<double>& cond, const Tensor& eps, double beta,
                         bool with_grads);

    // Plain evaluation (no gradients).
    std::pair<Tensor, Tensor> encode(const std::vector<double>& x,
                                     const std::vector<double>& cond) const;
    std::pair<Tensor, Tensor> prior(const std::vector<double>& cond) const;
    LatentSample apply_flows(const Tensor& z0, const std::vector<double>& cond) const;
    std::vector<double> decode(const Tensor& z, const std::vector<double>& cond) const;
    ElboParts elbo(const std::vector<double>& x, const std::vector<double>& cond,
                   const Tensor& eps) const;

    // Draw z from the conditional prior, push through the flows, decode;
    // the point estimate is the mean of the decoded draws.
    Prediction predict(const std::vector<double>& cond, int n_samples, CounterRng& rng) const;

private:
    Value pleaf(Tape& tape, const std::string& name, bool with_grads);
    void init_params(std::uint64_t seed);
    CvaeModel(ModelConfig cfg, ParameterSet params);

    ModelConfig cfg_;
    ParameterSet params_;
};

struct TrainPair {
    std::vector<double> x;     // target frame features
    std::vector<double> cond;  // conditioning input per the active mode
};

// Conditioning input for one sample: e with its horizon entry overridden to
// `delta` when delta >= 0, plus the flattened observed frame in Observation
// mode. Training uses delta = -1 (the sample's own horizon).
std::vector<double> build_conditioning(const DatasetSample& s, CondMode mode, int delta);

// One pair per sample: target = frames[horizon], observation = frames[0].
std::vector<TrainPair> make_training_pairs(const Dataset& ds, CondMode mode);

// Mini-batch ascent on the mean ELBO. Deterministic given cfg.seed. On a
// non-finite loss the parameters are rolled back to the last completed epoch
// and NumericError is thrown; callers may still save that state.
std::vector<EpochLog> train_cvae(CvaeModel& model, const std::vector<TrainPair>& pairs,
                                 const TrainConfig& cfg);

}  // namespace ddcp
