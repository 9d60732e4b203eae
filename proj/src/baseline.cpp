#include "ddcp/baseline.hpp"

#include <cmath>

#include "ddcp/channel.hpp"
#include "ddcp/checkpoint.hpp"
#include "ddcp/errors.hpp"

namespace ddcp {

using nlohmann::json;

double ar1_coefficient(double doppler_hz, double frame_period_s, int delta) {
    if (delta < 0) throw UsageError("ar1_coefficient: delta must be non-negative");
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const double x = kTwoPi * doppler_hz * frame_period_s * delta;
    return std::cyl_bessel_j(0.0, std::abs(x));
}

std::vector<double> predict_zero(std::size_t dim) { return std::vector<double>(dim, 0.0); }

std::vector<double> predict_stale(std::span<const double> x_t) {
    return {x_t.begin(), x_t.end()};
}

std::vector<double> predict_ar1(std::span<const double> x_t, int delta, double doppler_hz,
                                double frame_period_s) {
    const double rho = ar1_coefficient(doppler_hz, frame_period_s, delta);
    std::vector<double> out(x_t.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rho * x_t[i];
    return out;
}

void RecurrentConfig::validate() const {
    if (frame_dim < 2) throw UsageError("recurrent: frame_dim must be at least 2");
    if (e_dim < 1) throw UsageError("recurrent: e_dim must be positive");
    if (hidden < 1) throw UsageError("recurrent: hidden size must be positive");
    if (unroll < 1) throw UsageError("recurrent: unroll must be at least 1");
}

json RecurrentConfig::to_json() const {
    return json{{"frame_dim", frame_dim}, {"e_dim", e_dim}, {"hidden", hidden}, {"unroll", unroll}};
}

RecurrentConfig RecurrentConfig::from_json(const json& j) {
    RecurrentConfig cfg;
    cfg.frame_dim = j.at("frame_dim").get<std::size_t>();
    cfg.e_dim = j.at("e_dim").get<std::size_t>();
    cfg.hidden = j.at("hidden").get<std::size_t>();
    cfg.unroll = j.at("unroll").get<int>();
    cfg.validate();
    return cfg;
}

RecurrentPredictor::RecurrentPredictor(RecurrentConfig cfg, std::uint64_t init_seed)
    : cfg_(std::move(cfg)) {
    cfg_.validate();
    CounterRng root = CounterRng(init_seed).derive(stream_salt::kInit);
    const std::size_t in = cfg_.frame_dim + cfg_.e_dim;
    params_.add("rnn.in.w", uniform_init(cfg_.hidden, in, root.derive(0)));
    params_.add("rnn.rec.w", uniform_init(cfg_.hidden, cfg_.hidden, root.derive(1)));
    params_.add("rnn.b", Tensor::vector(cfg_.hidden));
    params_.add("rnn.out.w", uniform_init(cfg_.frame_dim, cfg_.hidden, root.derive(2)));
    params_.add("rnn.out.b", Tensor::vector(cfg_.frame_dim));
}

RecurrentPredictor::RecurrentPredictor(RecurrentConfig cfg, ParameterSet params)
    : cfg_(std::move(cfg)), params_(std::move(params)) {
    cfg_.validate();
    for (const char* name : {"rnn.in.w", "rnn.rec.w", "rnn.b", "rnn.out.w", "rnn.out.b"})
        if (!params_.contains(name)) throw FormatError(std::string("checkpoint lacks ") + name);
}

Value RecurrentPredictor::pleaf(Tape& tape, const std::string& name, bool with_grads) {
    Param& p = params_.at(name);
    return tape.leaf(p.value, with_grads ? &p.grad : nullptr);
}

Value RecurrentPredictor::forward_graph(Tape& tape, const std::vector<std::vector<double>>& history,
                                        const std::vector<double>& e, bool with_grads) {
    if (history.empty()) throw UsageError("recurrent: empty history");
    if (e.size() != cfg_.e_dim) throw ShapeError("recurrent: conditioning dim mismatch");

    Value w_in = pleaf(tape, "rnn.in.w", with_grads);
    Value w_rec = pleaf(tape, "rnn.rec.w", with_grads);
    Value b = pleaf(tape, "rnn.b", with_grads);

    Tensor ev = Tensor::vector(cfg_.e_dim);
    ev.v = e;
    Value ec = tape.constant(ev);

    Value h = tape.constant(Tensor::vector(cfg_.hidden));
    for (const auto& frame : history) {
        if (frame.size() != cfg_.frame_dim) throw ShapeError("recurrent: frame dim mismatch");
        Tensor fv = Tensor::vector(cfg_.frame_dim);
        fv.v = frame;
        Value x = tape.concat(tape.constant(fv), ec);
        h = tape.tanh(tape.add(tape.add(tape.matmul(w_in, x), tape.matmul(w_rec, h)), b));
    }
    return tape.add(tape.matmul(pleaf(tape, "rnn.out.w", with_grads), h),
                    pleaf(tape, "rnn.out.b", with_grads));
}

std::vector<double> RecurrentPredictor::predict(const std::vector<std::vector<double>>& history,
                                                const std::vector<double>& e) const {
    auto* self = const_cast<RecurrentPredictor*>(this);
    Tape tape;
    Value out = self->forward_graph(tape, history, e, false);
    return tape.value(out).v;
}

void RecurrentPredictor::save(const std::string& path, json training_meta) const {
    json header;
    header["model_type"] = "simplified-recurrent";
    header["architecture"] = cfg_.to_json();
    header["training"] = std::move(training_meta);
    save_ddck(path, std::move(header), params_);
}

RecurrentPredictor RecurrentPredictor::load(const std::string& path) {
    ParameterSet params;
    json header = load_ddck(path, params);
    if (header.value("model_type", "") != "simplified-recurrent")
        throw FormatError("checkpoint is not a simplified-recurrent model: " + path);
    RecurrentConfig cfg = RecurrentConfig::from_json(header.at("architecture"));
    return RecurrentPredictor(std::move(cfg), std::move(params));
}

std::vector<RecurrentPair> make_recurrent_pairs(const Dataset& ds, int unroll) {
    if (unroll < 1 || static_cast<std::size_t>(unroll) + 1 > ds.grid.f)
        throw UsageError("recurrent: unroll does not fit the dataset frames");
    std::vector<RecurrentPair> pairs;
    for (const auto& s : ds.samples) {
        const std::size_t target = static_cast<std::size_t>(unroll) - 1 +
                                   static_cast<std::size_t>(s.params.horizon);
        if (target >= ds.grid.f) continue;  // horizon does not fit; skip
        RecurrentPair p;
        for (int f = 0; f < unroll; ++f)
            p.history.push_back(flatten_channel(s.frames.frames[static_cast<std::size_t>(f)]));
        p.e = s.e;
        p.target = flatten_channel(s.frames.frames[target]);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

std::vector<MseEpochLog> train_recurrent(RecurrentPredictor& model,
                                         const std::vector<RecurrentPair>& pairs,
                                         const TrainConfig& cfg) {
    if (pairs.empty()) throw UsageError("recurrent: empty training set");
    if (cfg.batch < 1) throw UsageError("recurrent: batch must be at least 1");

    AdamConfig adam;
    adam.lr = cfg.lr;
    CounterRng root(cfg.seed);

    std::vector<Tensor> last_good;
    auto snapshot = [&] {
        last_good.clear();
        for (std::size_t i = 0; i < model.params().count(); ++i)
            last_good.push_back(model.params()[i].value);
    };
    snapshot();

    std::vector<MseEpochLog> log;
    Tape tape;
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        CounterRng shuffle = root.derive(stream_salt::kShuffle).derive(epoch);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle.next_below(i)]);

        double se_sum = 0.0;
        try {
            for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
                const std::size_t stop = std::min(order.size(), start + cfg.batch);
                model.params().zero_grads();
                for (std::size_t pos = start; pos < stop; ++pos) {
                    const auto& p = pairs[order[pos]];
                    tape.clear();
                    Value out = model.forward_graph(tape, p.history, p.e, true);
                    Tensor tv = Tensor::vector(p.target.size());
                    tv.v = p.target;
                    Value loss = tape.sum_squares(tape.sub(out, tape.constant(tv)));
                    se_sum += tape.value(loss).v[0] / static_cast<double>(p.target.size());
                    tape.backward(tape.scale(loss, 1.0 / static_cast<double>(stop - start)));
                }
                model.params().adam_step(adam);
            }
        } catch (const NumericError&) {
            for (std::size_t i = 0; i < model.params().count(); ++i)
                model.params()[i].value = last_good[i];
            throw;
        }
        log.push_back({epoch, se_sum / static_cast<double>(pairs.size())});
        snapshot();
    }
    return log;
}

}  // namespace ddcp
