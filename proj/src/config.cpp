#include "ddcp/config.hpp"

#include <fstream>
#include <set>

#include "ddcp/errors.hpp"

namespace ddcp {

using nlohmann::json;

namespace {

void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw UsageError("config: " + where + " must be an object");
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw UsageError("config: unknown key \"" + key + "\" in " + where);
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

// Continuous range: number (pinned) or [lo, hi].
void maybe_range(const json& j, const char* key, std::pair<double, double>& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (v.is_number()) {
        out = {v.get<double>(), v.get<double>()};
    } else if (v.is_array() && v.size() == 2) {
        out = {v[0].get<double>(), v[1].get<double>()};
    } else {
        throw UsageError(std::string("config: ") + key + " must be a number or [lo, hi]");
    }
}

void maybe_range(const json& j, const char* key, std::pair<int, int>& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (v.is_number_integer()) {
        out = {v.get<int>(), v.get<int>()};
    } else if (v.is_array() && v.size() == 2) {
        out = {v[0].get<int>(), v[1].get<int>()};
    } else {
        throw UsageError(std::string("config: ") + key + " must be an integer or [lo, hi]");
    }
}

// Categorical: single value or list of choices.
template <typename T>
void maybe_choices(const json& j, const char* key, std::vector<T>& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (v.is_array())
        out = v.get<std::vector<T>>();
    else
        out = {v.get<T>()};
}

}  // namespace

std::string canonical_predictor(const std::string& name) {
    if (name == "recurrent" || name == "simplified-recurrent") return "simplified-recurrent";
    if (name == "cvae" || name == "stale" || name == "ar1" || name == "zero") return name;
    throw UsageError("unknown predictor: " + name);
}

void RunConfig::validate() const {
    grid.validate();
    data.scenario.validate();
    if (data.count < 1) throw UsageError("config: data.count must be at least 1");
    if (data.train_count == 0 || data.train_count >= data.count)
        throw UsageError("config: data.train_count must lie strictly between 0 and count");
    if (!(data.pdp_decay > 0)) throw UsageError("config: data.pdp_decay must be positive");
    if (static_cast<std::size_t>(data.scenario.horizon.second) > grid.f - 1)
        throw UsageError("config: scenario horizon range exceeds F-1");
    if (model.latent_dim < 1) throw UsageError("config: model.latent_dim must be positive");
    if (model.flow_blocks < 0) throw UsageError("config: model.flow_blocks must be >= 0");
    if (model.predict_samples < 1)
        throw UsageError("config: model.predict_samples must be positive");
    if (model.beta_warmup_epochs < 0)
        throw UsageError("config: model.beta_warmup_epochs must be >= 0");
    if (train.epochs < 0) throw UsageError("config: train.epochs must be >= 0");
    if (train.batch < 1) throw UsageError("config: train.batch must be positive");
    if (!(train.lr > 0)) throw UsageError("config: train.lr must be positive");
    if (train.recurrent_unroll < 1)
        throw UsageError("config: train.recurrent_unroll must be positive");
    if (sweep.axis != "doppler" && sweep.axis != "horizon")
        throw UsageError("config: sweep.axis must be \"doppler\" or \"horizon\"");
    if (sweep.eval_count < 1) throw UsageError("config: sweep.eval_count must be positive");
    if (sweep.doppler_points_hz.empty() || sweep.horizon_points.empty())
        throw UsageError("config: sweep point lists must be non-empty");
    for (const auto& p : sweep.predictors) canonical_predictor(p);
    if (threads < 1) throw UsageError("config: threads must be positive");
}

ModelConfig RunConfig::model_config() const {
    ModelConfig mc;
    mc.input_dim = grid.feature_dim();
    mc.e_dim = grid.e_dim;
    mc.latent_dim = model.latent_dim;
    mc.flow_blocks = model.flow_blocks;
    mc.encoder_hidden = model.encoder_hidden;
    mc.decoder_hidden = model.decoder_hidden;
    mc.prior_hidden = model.prior_hidden;
    mc.mode = model.mode;
    return mc;
}

GenOptions RunConfig::gen_options() const {
    GenOptions opt;
    opt.ranges = data.scenario;
    opt.pdp_decay = data.pdp_decay;
    opt.threads = threads;
    return opt;
}

RunConfig parse_config(const json& j) {
    expect_object(j, "top level");
    reject_unknown(j, {"grid", "data", "model", "train", "sweep", "threads"}, "top level");

    RunConfig cfg;
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        expect_object(g, "grid");
        reject_unknown(g, {"m", "n", "l", "f"}, "grid");
        maybe(g, "m", cfg.grid.m);
        maybe(g, "n", cfg.grid.n);
        maybe(g, "l", cfg.grid.l);
        maybe(g, "f", cfg.grid.f);
    }
    if (j.contains("data")) {
        const json& d = j.at("data");
        expect_object(d, "data");
        reject_unknown(d, {"count", "base_seed", "train_count", "split_seed", "pdp_decay",
                           "scenario"},
                       "data");
        maybe(d, "count", cfg.data.count);
        maybe(d, "base_seed", cfg.data.base_seed);
        maybe(d, "train_count", cfg.data.train_count);
        maybe(d, "split_seed", cfg.data.split_seed);
        maybe(d, "pdp_decay", cfg.data.pdp_decay);
        if (d.contains("scenario")) {
            const json& s = d.at("scenario");
            expect_object(s, "data.scenario");
            reject_unknown(s,
                           {"snr_db", "speed_mps", "bandwidth_hz", "carrier_hz", "scs_hz",
                            "cp_len", "n_tx", "n_rx", "horizon"},
                           "data.scenario");
            maybe_range(s, "snr_db", cfg.data.scenario.snr_db);
            maybe_range(s, "speed_mps", cfg.data.scenario.speed_mps);
            maybe_range(s, "bandwidth_hz", cfg.data.scenario.bandwidth_hz);
            maybe_choices(s, "carrier_hz", cfg.data.scenario.carrier_hz);
            maybe_choices(s, "scs_hz", cfg.data.scenario.scs_hz);
            maybe_choices(s, "cp_len", cfg.data.scenario.cp_len);
            maybe_choices(s, "n_tx", cfg.data.scenario.n_tx);
            maybe_choices(s, "n_rx", cfg.data.scenario.n_rx);
            maybe_range(s, "horizon", cfg.data.scenario.horizon);
        }
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        expect_object(m, "model");
        reject_unknown(m,
                       {"mode", "latent_dim", "flow_blocks", "encoder_hidden", "decoder_hidden",
                        "prior_hidden", "beta_warmup_epochs", "predict_samples"},
                       "model");
        if (m.contains("mode")) cfg.model.mode = cond_mode_from_string(m.at("mode"));
        maybe(m, "latent_dim", cfg.model.latent_dim);
        maybe(m, "flow_blocks", cfg.model.flow_blocks);
        maybe(m, "encoder_hidden", cfg.model.encoder_hidden);
        maybe(m, "decoder_hidden", cfg.model.decoder_hidden);
        maybe(m, "prior_hidden", cfg.model.prior_hidden);
        maybe(m, "beta_warmup_epochs", cfg.model.beta_warmup_epochs);
        maybe(m, "predict_samples", cfg.model.predict_samples);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        expect_object(t, "train");
        reject_unknown(t, {"epochs", "batch", "lr", "seed", "recurrent_unroll",
                           "recurrent_hidden"},
                       "train");
        maybe(t, "epochs", cfg.train.epochs);
        maybe(t, "batch", cfg.train.batch);
        maybe(t, "lr", cfg.train.lr);
        maybe(t, "seed", cfg.train.seed);
        maybe(t, "recurrent_unroll", cfg.train.recurrent_unroll);
        maybe(t, "recurrent_hidden", cfg.train.recurrent_hidden);
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        expect_object(s, "sweep");
        reject_unknown(s,
                       {"axis", "doppler_points_hz", "delta", "horizon_points",
                        "fixed_doppler_hz", "eval_count", "seed", "predictors"},
                       "sweep");
        maybe(s, "axis", cfg.sweep.axis);
        maybe(s, "doppler_points_hz", cfg.sweep.doppler_points_hz);
        maybe(s, "delta", cfg.sweep.delta);
        maybe(s, "horizon_points", cfg.sweep.horizon_points);
        maybe(s, "fixed_doppler_hz", cfg.sweep.fixed_doppler_hz);
        maybe(s, "eval_count", cfg.sweep.eval_count);
        maybe(s, "seed", cfg.sweep.seed);
        maybe(s, "predictors", cfg.sweep.predictors);
    }
    maybe(j, "threads", cfg.threads);

    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open config: " + path);
    json j = json::parse(is, nullptr, false);
    if (j.is_discarded()) throw FormatError("config is not valid JSON: " + path);
    return parse_config(j);
}

void apply_desk_scale(RunConfig& cfg) {
    cfg.grid.m = 8;
    cfg.grid.n = 8;
    cfg.grid.l = 4;
    cfg.grid.f = 11;
    cfg.model.encoder_hidden = {128, 64};
    cfg.model.decoder_hidden = {64, 128};
    cfg.model.prior_hidden = {32};
}

}  // namespace ddcp
