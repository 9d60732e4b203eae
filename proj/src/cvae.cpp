#include "ddcp/cvae.hpp"

#include <algorithm>
#include <cmath>

#include "ddcp/channel.hpp"
#include "ddcp/checkpoint.hpp"
#include "ddcp/errors.hpp"

namespace ddcp {

using nlohmann::json;

namespace {

constexpr double kHalfLn2Pi = 0.91893853320467274178032973640562;
constexpr double kWNormFloor = 1e-24;  // below this the planar correction is skipped

Tensor to_tensor(const std::vector<double>& x) {
    Tensor t = Tensor::vector(x.size());
    t.v = x;
    return t;
}

struct ParamSpec {
    std::string name;
    std::size_t rows, cols;  // rows == 1 with matrix == false means vector
    bool matrix;
};

void push_affine(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t in,
                 std::size_t n) {
    out.push_back({prefix + ".w", n, in, true});
    out.push_back({prefix + ".b", 1, n, false});
}

// Registration order fixes the checkpoint block order.
std::vector<ParamSpec> enumerate_params(const ModelConfig& cfg) {
    std::vector<ParamSpec> specs;
    const std::size_t c = cfg.cond_dim();
    const std::size_t z = cfg.latent_dim;

    std::size_t width = cfg.input_dim + c;
    for (std::size_t i = 0; i < cfg.encoder_hidden.size(); ++i) {
        push_affine(specs, "enc." + std::to_string(i), width, cfg.encoder_hidden[i]);
        width = cfg.encoder_hidden[i];
    }
    push_affine(specs, "enc.mu", width, z);
    push_affine(specs, "enc.logsig", width, z);

    width = c;
    for (std::size_t i = 0; i < cfg.prior_hidden.size(); ++i) {
        push_affine(specs, "prior." + std::to_string(i), width, cfg.prior_hidden[i]);
        width = cfg.prior_hidden[i];
    }
    push_affine(specs, "prior.mu", width, z);
    push_affine(specs, "prior.logsig", width, z);

    width = z + c;
    for (std::size_t i = 0; i < cfg.decoder_hidden.size(); ++i) {
        push_affine(specs, "dec." + std::to_string(i), width, cfg.decoder_hidden[i]);
        width = cfg.decoder_hidden[i];
    }
    push_affine(specs, "dec.out", width, cfg.input_dim);

    for (int k = 0; k < cfg.flow_blocks; ++k) {
        const std::string p = "flow." + std::to_string(k);
        push_affine(specs, p + ".u", c, z);
        push_affine(specs, p + ".w", c, z);
        push_affine(specs, p + ".b", c, 1);
    }
    return specs;
}

}  // namespace

std::string to_string(CondMode m) {
    return m == CondMode::Observation ? "observation" : "parametric";
}

CondMode cond_mode_from_string(const std::string& s) {
    if (s == "observation") return CondMode::Observation;
    if (s == "parametric") return CondMode::Parametric;
    throw UsageError("unknown conditioning mode: " + s);
}

void ModelConfig::validate() const {
    if (input_dim < 2) throw UsageError("model: input_dim must be at least 2");
    if (e_dim < 1) throw UsageError("model: e_dim must be positive");
    if (latent_dim < 1) throw UsageError("model: latent_dim must be at least 1");
    if (flow_blocks < 0) throw UsageError("model: flow_blocks must be non-negative");
    if (!(logsig_lo < logsig_hi)) throw UsageError("model: log-sigma clamp range is empty");
}

json ModelConfig::to_json() const {
    return json{{"input_dim", input_dim},
                {"e_dim", e_dim},
                {"latent_dim", latent_dim},
                {"flow_blocks", flow_blocks},
                {"encoder_hidden", encoder_hidden},
                {"decoder_hidden", decoder_hidden},
                {"prior_hidden", prior_hidden},
                {"mode", to_string(mode)},
                {"logsig_lo", logsig_lo},
                {"logsig_hi", logsig_hi}};
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig cfg;
    cfg.input_dim = j.at("input_dim").get<std::size_t>();
    cfg.e_dim = j.at("e_dim").get<std::size_t>();
    cfg.latent_dim = j.at("latent_dim").get<std::size_t>();
    cfg.flow_blocks = j.at("flow_blocks").get<int>();
    cfg.encoder_hidden = j.at("encoder_hidden").get<std::vector<std::size_t>>();
    cfg.decoder_hidden = j.at("decoder_hidden").get<std::vector<std::size_t>>();
    cfg.prior_hidden = j.at("prior_hidden").get<std::vector<std::size_t>>();
    cfg.mode = cond_mode_from_string(j.at("mode").get<std::string>());
    cfg.logsig_lo = j.at("logsig_lo").get<double>();
    cfg.logsig_hi = j.at("logsig_hi").get<double>();
    cfg.validate();
    return cfg;
}

double kl_gauss(const Tensor& mu_q, const Tensor& logsig_q, const Tensor& mu_p,
                const Tensor& logsig_p) {
    if (!(mu_q.same_shape(logsig_q) && mu_q.same_shape(mu_p) && mu_q.same_shape(logsig_p)))
        throw ShapeError("kl_gauss: all arguments must share one shape");
    double kl = 0.0;
    for (std::size_t i = 0; i < mu_q.size(); ++i) {
        const double var_q = std::exp(2.0 * logsig_q.v[i]);
        const double var_p2 = 2.0 * std::exp(2.0 * logsig_p.v[i]);
        const double dm = mu_q.v[i] - mu_p.v[i];
        kl += logsig_p.v[i] - logsig_q.v[i] + (var_q + dm * dm) / var_p2 - 0.5;
    }
    return kl;
}

std::pair<Tensor, double> reparameterize(const Tensor& mu, const Tensor& logsig,
                                         const Tensor& eps) {
    if (!(mu.same_shape(logsig) && mu.same_shape(eps)))
        throw ShapeError("reparameterize: shape mismatch");
    Tensor z0 = mu;
    double log_q0 = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        z0.v[i] = mu.v[i] + std::exp(logsig.v[i]) * eps.v[i];
        log_q0 += -0.5 * eps.v[i] * eps.v[i] - logsig.v[i] - kHalfLn2Pi;
    }
    return {std::move(z0), log_q0};
}

CvaeModel::CvaeModel(ModelConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    init_params(init_seed);
}

CvaeModel::CvaeModel(ModelConfig cfg, ParameterSet params)
    : cfg_(std::move(cfg)), params_(std::move(params)) {
    cfg_.validate();
    for (const auto& spec : enumerate_params(cfg_)) {
        if (!params_.contains(spec.name)) throw FormatError("checkpoint lacks tensor " + spec.name);
        const Tensor& t = params_.at(spec.name).value;
        const bool ok = spec.matrix ? (t.rank() == 2 && t.shape[0] == spec.rows &&
                                       t.shape[1] == spec.cols)
                                    : (t.rank() == 1 && t.size() == spec.cols);
        if (!ok) throw FormatError("checkpoint tensor " + spec.name + " has wrong shape");
    }
}

void CvaeModel::init_params(std::uint64_t seed) {
    CounterRng root = CounterRng(seed).derive(stream_salt::kInit);
    std::size_t ordinal = 0;
    for (const auto& spec : enumerate_params(cfg_)) {
        if (spec.matrix)
            params_.add(spec.name, uniform_init(spec.rows, spec.cols, root.derive(ordinal)));
        else
            params_.add(spec.name, Tensor::vector(spec.cols));  // biases start at zero
        ++ordinal;
    }
}

Value CvaeModel::pleaf(Tape& tape, const std::string& name, bool with_grads) {
    Param& p = params_.at(name);
    return tape.leaf(p.value, with_grads ? &p.grad : nullptr);
}

// tanh MLP trunk: h = tanh(W h + b) per layer.
template <typename Leaf>
static Value trunk(Tape& tape, const std::string& prefix, std::size_t layers, Value h,
                   Leaf&& leaf) {
    for (std::size_t i = 0; i < layers; ++i) {
        const std::string p = prefix + "." + std::to_string(i);
        h = tape.tanh(tape.add(tape.matmul(leaf(p + ".w"), h), leaf(p + ".b")));
    }
    return h;
}

CvaeModel::GaussPair CvaeModel::encode_graph(Tape& tape, Value x, Value c, bool with_grads) {
    auto leaf = [&](const std::string& n) { return pleaf(tape, n, with_grads); };
    Value h = trunk(tape, "enc", cfg_.encoder_hidden.size(), tape.concat(x, c), leaf);
    Value mu = tape.add(tape.matmul(leaf("enc.mu.w"), h), leaf("enc.mu.b"));
    Value ls = tape.clamp(tape.add(tape.matmul(leaf("enc.logsig.w"), h), leaf("enc.logsig.b")),
                          cfg_.logsig_lo, cfg_.logsig_hi);
    return {mu, ls};
}

CvaeModel::GaussPair CvaeModel::prior_graph(Tape& tape, Value c, bool with_grads) {
    auto leaf = [&](const std::string& n) { return pleaf(tape, n, with_grads); };
    Value h = trunk(tape, "prior", cfg_.prior_hidden.size(), c, leaf);
    Value mu = tape.add(tape.matmul(leaf("prior.mu.w"), h), leaf("prior.mu.b"));
    Value ls = tape.clamp(tape.add(tape.matmul(leaf("prior.logsig.w"), h), leaf("prior.logsig.b")),
                          cfg_.logsig_lo, cfg_.logsig_hi);
    return {mu, ls};
}

Value CvaeModel::reparam_graph(Tape& tape, const GaussPair& q, const Tensor& eps) const {
    return tape.add(q.mu, tape.mul(tape.exp(q.logsig), tape.constant(eps)));
}

Value CvaeModel::log_q0_graph(Tape& tape, const GaussPair& q, const Tensor& eps) const {
    double c0 = 0.0;
    for (double e : eps.v) c0 += -0.5 * e * e - kHalfLn2Pi;
    return tape.add(tape.scale(tape.sum(q.logsig), -1.0), tape.constant(Tensor::scalar(c0)));
}

CvaeModel::FlowOut CvaeModel::flows_graph(Tape& tape, Value z0, Value c, bool with_grads) {
    Value z = z0;
    Value sum_logdet = tape.constant(Tensor::scalar(0.0));
    Value one = tape.constant(Tensor::scalar(1.0));
    for (int k = 0; k < cfg_.flow_blocks; ++k) {
        const std::string p = "flow." + std::to_string(k);
        auto leaf = [&](const std::string& n) { return pleaf(tape, n, with_grads); };
        Value u = tape.add(tape.matmul(leaf(p + ".u.w"), c), leaf(p + ".u.b"));
        Value w = tape.add(tape.matmul(leaf(p + ".w.w"), c), leaf(p + ".w.b"));
        Value b = tape.add(tape.matmul(leaf(p + ".b.w"), c), leaf(p + ".b.b"));

        // u_hat = u + (m(w.u) - w.u) * w/|w|^2, m(a) = softplus(a) - 1,
        // which pins w.u_hat = m(a) > -1 so the log-det argument stays > 0.
        Value uhat = u;
        Value ss = tape.sum_squares(w);
        if (tape.value(ss).v[0] > kWNormFloor) {
            Value a = tape.dot(w, u);
            Value m = tape.sub(tape.softplus(a), one);
            Value coef = tape.div(tape.sub(m, a), ss);
            uhat = tape.add(u, tape.mul(w, coef));
        }

        Value pre = tape.add(tape.dot(w, z), b);
        Value t = tape.tanh(pre);
        z = tape.add(z, tape.mul(uhat, t));

        // log|1 + u_hat . psi|, psi = (1 - t^2) w
        Value hprime = tape.sub(one, tape.mul(t, t));
        Value arg = tape.add(one, tape.mul(hprime, tape.dot(w, uhat)));
        sum_logdet = tape.add(sum_logdet, tape.log(arg));
    }
    return {z, sum_logdet};
}

Value CvaeModel::decode_graph(Tape& tape, Value z, Value c, bool with_grads) {
    auto leaf = [&](const std::string& n) { return pleaf(tape, n, with_grads); };
    Value h = trunk(tape, "dec", cfg_.decoder_hidden.size(), tape.concat(z, c), leaf);
    return tape.add(tape.matmul(leaf("dec.out.w"), h), leaf("dec.out.b"));
}

Value CvaeModel::kl_gauss_graph(Tape& tape, const GaussPair& q, const GaussPair& p) {
    const std::size_t z = tape.value(q.mu).size();
    Value a = tape.sub(p.logsig, q.logsig);
    Value d = tape.sub(q.mu, p.mu);
    Value num = tape.add(tape.exp(tape.scale(q.logsig, 2.0)), tape.mul(d, d));
    Value den = tape.scale(tape.exp(tape.scale(p.logsig, 2.0)), 2.0);
    Value terms = tape.add(a, tape.div(num, den));
    return tape.add(tape.sum(terms),
                    tape.constant(Tensor::scalar(-0.5 * static_cast<double>(z))));
}

Value CvaeModel::gauss_logpdf_graph(Tape& tape, Value z, const GaussPair& p) {
    const std::size_t n = tape.value(z).size();
    Value d = tape.sub(z, p.mu);
    Value quad = tape.mul(tape.mul(d, d), tape.exp(tape.scale(p.logsig, -2.0)));
    Value out = tape.add(tape.scale(tape.sum(quad), -0.5), tape.scale(tape.sum(p.logsig), -1.0));
    return tape.add(out, tape.constant(Tensor::scalar(-kHalfLn2Pi * static_cast<double>(n))));
}

CvaeModel::ElboGraph CvaeModel::elbo_graph(Tape& tape, const std::vector<double>& x,
                                           const std::vector<double>& cond, const Tensor& eps,
                                           double beta, bool with_grads) {
    if (x.size() != cfg_.input_dim)
        throw ShapeError("elbo: target has " + std::to_string(x.size()) + " entries, expected " +
                         std::to_string(cfg_.input_dim));
    if (cond.size() != cfg_.cond_dim())
        throw ShapeError("elbo: conditioning has " + std::to_string(cond.size()) +
                         " entries, expected " + std::to_string(cfg_.cond_dim()));
    if (eps.size() != cfg_.latent_dim) throw ShapeError("elbo: noise dim mismatch");

    Value xv = tape.constant(to_tensor(x));
    Value c = tape.constant(to_tensor(cond));
    GaussPair q = encode_graph(tape, xv, c, with_grads);
    Value z0 = reparam_graph(tape, q, eps);
    FlowOut fl = flows_graph(tape, z0, c, with_grads);
    Value xhat = decode_graph(tape, fl.z, c, with_grads);
    GaussPair p = prior_graph(tape, c, with_grads);

    // unit-variance Gaussian likelihood: -0.5 ||x - xhat||^2 - dim * ln sqrt(2 pi)
    Value recon = tape.add(
        tape.scale(tape.sum_squares(tape.sub(xhat, xv)), -0.5),
        tape.constant(Tensor::scalar(-kHalfLn2Pi * static_cast<double>(cfg_.input_dim))));

    Value kl;
    if (cfg_.flow_blocks == 0) {
        kl = kl_gauss_graph(tape, q, p);
    } else {
        Value logq0 = log_q0_graph(tape, q, eps);
        kl = tape.sub(tape.sub(logq0, fl.sum_logdet), gauss_logpdf_graph(tape, fl.z, p));
    }

    ElboGraph out;
    out.parts.recon_loglik = tape.value(recon).v[0];
    out.parts.kl_term = tape.value(kl).v[0];
    out.parts.elbo = out.parts.recon_loglik - out.parts.kl_term;
    out.loss = tape.sub(tape.scale(kl, beta), recon);
    return out;
}

std::pair<Tensor, Tensor> CvaeModel::encode(const std::vector<double>& x,
                                            const std::vector<double>& cond) const {
    auto* self = const_cast<CvaeModel*>(this);
    Tape tape;
    GaussPair q = self->encode_graph(tape, tape.constant(to_tensor(x)),
                                     tape.constant(to_tensor(cond)), false);
    return {tape.value(q.mu), tape.value(q.logsig)};
}

std::pair<Tensor, Tensor> CvaeModel::prior(const std::vector<double>& cond) const {
    auto* self = const_cast<CvaeModel*>(this);
    Tape tape;
    GaussPair p = self->prior_graph(tape, tape.constant(to_tensor(cond)), false);
    return {tape.value(p.mu), tape.value(p.logsig)};
}

LatentSample CvaeModel::apply_flows(const Tensor& z0, const std::vector<double>& cond) const {
    auto* self = const_cast<CvaeModel*>(this);
    Tape tape;
    FlowOut fl = self->flows_graph(tape, tape.constant(z0), tape.constant(to_tensor(cond)), false);
    LatentSample out;
    out.z0 = z0;
    out.zK = tape.value(fl.z);
    out.sum_logdet = tape.value(fl.sum_logdet).v[0];
    return out;
}

std::vector<double> CvaeModel::decode(const Tensor& z, const std::vector<double>& cond) const {
    auto* self = const_cast<CvaeModel*>(this);
    Tape tape;
    Value xhat = self->decode_graph(tape, tape.constant(z), tape.constant(to_tensor(cond)), false);
    return tape.value(xhat).v;
}

ElboParts CvaeModel::elbo(const std::vector<double>& x, const std::vector<double>& cond,
                          const Tensor& eps) const {
    auto* self = const_cast<CvaeModel*>(this);
    Tape tape;
    return self->elbo_graph(tape, x, cond, eps, 1.0, false).parts;
}

Prediction CvaeModel::predict(const std::vector<double>& cond, int n_samples,
                              CounterRng& rng) const {
    if (n_samples < 1) throw UsageError("predict: need at least one sample");
    auto* self = const_cast<CvaeModel*>(this);
    Prediction out;
    out.mean.assign(cfg_.input_dim, 0.0);
    out.draws.reserve(static_cast<std::size_t>(n_samples));
    for (int s = 0; s < n_samples; ++s) {
        Tensor eps = Tensor::vector(cfg_.latent_dim);
        for (double& e : eps.v) e = rng.normal();
        Tape tape;
        Value c = tape.constant(to_tensor(cond));
        GaussPair p = self->prior_graph(tape, c, false);
        Value z0 = self->reparam_graph(tape, p, eps);
        FlowOut fl = self->flows_graph(tape, z0, c, false);
        Value xhat = self->decode_graph(tape, fl.z, c, false);
        out.draws.push_back(tape.value(xhat).v);
        for (std::size_t i = 0; i < out.mean.size(); ++i) out.mean[i] += out.draws.back()[i];
    }
    for (double& m : out.mean) m /= static_cast<double>(n_samples);
    return out;
}

void CvaeModel::save(const std::string& path, json training_meta) const {
    json header;
    header["model_type"] = "cvae";
    header["architecture"] = cfg_.to_json();
    header["training"] = std::move(training_meta);
    save_ddck(path, std::move(header), params_);
}

CvaeModel CvaeModel::load(const std::string& path) {
    ParameterSet params;
    json header = load_ddck(path, params);
    if (header.value("model_type", "") != "cvae")
        throw FormatError("checkpoint is not a cvae model: " + path);
    ModelConfig cfg = ModelConfig::from_json(header.at("architecture"));
    return CvaeModel(std::move(cfg), std::move(params));
}

std::vector<double> build_conditioning(const DatasetSample& s, CondMode mode, int delta) {
    std::vector<double> cond = s.e;
    if (delta >= 0) cond[4] = delta / 10.0;
    if (mode == CondMode::Observation) {
        const std::vector<double> obs = flatten_channel(s.frames.frames.at(0));
        cond.insert(cond.end(), obs.begin(), obs.end());
    }
    return cond;
}

std::vector<TrainPair> make_training_pairs(const Dataset& ds, CondMode mode) {
    std::vector<TrainPair> pairs;
    pairs.reserve(ds.count());
    for (const auto& s : ds.samples) {
        const auto h = static_cast<std::size_t>(s.params.horizon);
        if (h >= ds.grid.f)
            throw UsageError("sample horizon exceeds stored frames; regenerate the dataset");
        TrainPair p;
        p.x = flatten_channel(s.frames.frames[h], ds.grid);
        p.cond = build_conditioning(s, mode, -1);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

std::vector<EpochLog> train_cvae(CvaeModel& model, const std::vector<TrainPair>& pairs,
                                 const TrainConfig& cfg) {
    if (pairs.empty()) throw UsageError("train: empty training set");
    if (cfg.epochs < 0) throw UsageError("train: epochs must be non-negative");
    if (cfg.batch < 1) throw UsageError("train: batch must be at least 1");

    AdamConfig adam;
    adam.lr = cfg.lr;
    CounterRng root(cfg.seed);

    // Rollback state for numeric aborts: parameters at the last epoch end.
    std::vector<Tensor> last_good;
    auto snapshot = [&] {
        last_good.clear();
        for (std::size_t i = 0; i < model.params().count(); ++i)
            last_good.push_back(model.params()[i].value);
    };
    snapshot();

    std::vector<EpochLog> log;
    Tape tape;
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double beta =
            cfg.beta_warmup_epochs > 0
                ? std::min(1.0, static_cast<double>(epoch) / cfg.beta_warmup_epochs)
                : 1.0;

        CounterRng shuffle = root.derive(stream_salt::kShuffle).derive(epoch);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle.next_below(i)]);

        double recon_sum = 0.0, kl_sum = 0.0;
        try {
            for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
                const std::size_t stop = std::min(order.size(), start + cfg.batch);
                model.params().zero_grads();
                for (std::size_t pos = start; pos < stop; ++pos) {
                    const std::size_t idx = order[pos];
                    CounterRng noise =
                        root.derive(stream_salt::kNoise).derive(epoch).derive(idx);
                    Tensor eps = Tensor::vector(model.config().latent_dim);
                    for (double& e : eps.v) e = noise.normal();

                    tape.clear();
                    auto g = model.elbo_graph(tape, pairs[idx].x, pairs[idx].cond, eps, beta, true);
                    recon_sum += g.parts.recon_loglik;
                    kl_sum += g.parts.kl_term;
                    Value scaled = tape.scale(g.loss, 1.0 / static_cast<double>(stop - start));
                    tape.backward(scaled);
                }
                model.params().adam_step(adam);
            }
        } catch (const NumericError&) {
            for (std::size_t i = 0; i < model.params().count(); ++i)
                model.params()[i].value = last_good[i];
            throw;
        }

        EpochLog el;
        el.epoch = epoch;
        el.beta = beta;
        el.parts.recon_loglik = recon_sum / static_cast<double>(pairs.size());
        el.parts.kl_term = kl_sum / static_cast<double>(pairs.size());
        el.parts.elbo = el.parts.recon_loglik - el.parts.kl_term;
        log.push_back(el);
        snapshot();
    }
    return log;
}

}  // namespace ddcp
