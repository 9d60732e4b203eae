#include "ddcp/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddcp/channel.hpp"
#include "ddcp/errors.hpp"

namespace ddcp {

double bessel_j0_series(double x, int terms) {
    const double q = -0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int m = 1; m < terms; ++m) {
        term *= q / (static_cast<double>(m) * static_cast<double>(m));
        sum += term;
    }
    return sum;
}

GradCheckResult gradient_check(ParameterSet& params,
                               const std::function<double(bool)>& loss, double h,
                               double rel_tol, double abs_floor) {
    params.zero_grads();
    loss(true);
    std::vector<Tensor> analytic;
    for (std::size_t i = 0; i < params.count(); ++i) analytic.push_back(params[i].grad);

    GradCheckResult res;
    res.pass = true;
    for (std::size_t pi = 0; pi < params.count(); ++pi) {
        Param& p = params[pi];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double saved = p.value.v[i];
            p.value.v[i] = saved + h;
            const double fp = loss(false);
            p.value.v[i] = saved - h;
            const double fm = loss(false);
            p.value.v[i] = saved;

            const double fd = (fp - fm) / (2.0 * h);
            const double a = analytic[pi].v[i];
            const double diff = std::abs(a - fd);
            const double denom = std::max(std::abs(a), std::abs(fd));
            const double rel = denom > 0.0 ? diff / denom : 0.0;
            ++res.checked;
            if (diff >= abs_floor && rel >= rel_tol) {
                res.pass = false;
                if (rel > res.max_rel_err) {
                    res.max_rel_err = rel;
                    res.worst_param = p.name + "[" + std::to_string(i) + "]";
                }
            } else if (rel > res.max_rel_err && diff >= abs_floor) {
                res.max_rel_err = rel;
                res.worst_param = p.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return res;
}

namespace {

// |det| by LU with partial pivoting; small matrices only.
double abs_det(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    double det = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (a[piv][col] == 0.0) return 0.0;
        if (piv != col) std::swap(a[piv], a[col]);
        det *= a[col][col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
        }
    }
    return std::abs(det);
}

}  // namespace

double numeric_flow_logdet(const CvaeModel& model, const Tensor& z0,
                           const std::vector<double>& cond, double h) {
    const std::size_t z = z0.size();
    std::vector<std::vector<double>> jac(z, std::vector<double>(z, 0.0));
    for (std::size_t j = 0; j < z; ++j) {
        Tensor zp = z0, zm = z0;
        zp.v[j] += h;
        zm.v[j] -= h;
        const Tensor fp = model.apply_flows(zp, cond).zK;
        const Tensor fm = model.apply_flows(zm, cond).zK;
        for (std::size_t i = 0; i < z; ++i) jac[i][j] = (fp.v[i] - fm.v[i]) / (2.0 * h);
    }
    return std::log(abs_det(std::move(jac)));
}

namespace {

std::vector<double> random_vec(std::size_t n, CounterRng& rng, double scale) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

CheckLine check_gradient_integrity(CounterRng rng, bool inject) {
    ModelConfig cfg;
    cfg.input_dim = 16;
    cfg.e_dim = 6;
    cfg.latent_dim = 4;
    cfg.flow_blocks = 2;
    cfg.encoder_hidden = {8};
    cfg.decoder_hidden = {8};
    cfg.prior_hidden = {8};
    cfg.mode = CondMode::Parametric;
    CvaeModel model(cfg, rng.next_u64());

    const std::vector<double> x = random_vec(cfg.input_dim, rng, 0.7);
    const std::vector<double> c = random_vec(cfg.e_dim, rng, 0.5);
    Tensor eps = Tensor::vector(cfg.latent_dim);
    for (double& e : eps.v) e = rng.normal();

    auto loss = [&](bool acc) {
        Tape tape;
        auto g = model.elbo_graph(tape, x, c, eps, 1.0, acc);
        if (acc) {
            tape.backward(g.loss);
            if (inject) model.params().at("enc.mu.b").grad.v[0] += 0.5;
        }
        return -g.parts.elbo;
    };
    GradCheckResult res = gradient_check(model.params(), loss);

    std::ostringstream detail;
    detail << res.checked << " partials, max rel err " << res.max_rel_err;
    if (!res.pass) detail << " at " << res.worst_param;
    return {"gradient-integrity", res.pass, detail.str()};
}

CheckLine check_flow_logdet(CounterRng rng, int points) {
    ModelConfig cfg;
    cfg.input_dim = 8;
    cfg.e_dim = 5;
    cfg.latent_dim = 6;
    cfg.flow_blocks = 3;
    cfg.encoder_hidden = {8};
    cfg.decoder_hidden = {8};
    cfg.prior_hidden = {8};
    cfg.mode = CondMode::Parametric;

    double worst = 0.0;
    for (int pt = 0; pt < points; ++pt) {
        CvaeModel model(cfg, rng.next_u64());
        Tensor z0 = Tensor::vector(cfg.latent_dim);
        for (double& v : z0.v) v = rng.normal();
        const std::vector<double> c = random_vec(cfg.e_dim, rng, 1.0);
        const double analytic = model.apply_flows(z0, c).sum_logdet;
        const double numeric = numeric_flow_logdet(model, z0, c);
        worst = std::max(worst, std::abs(analytic - numeric));
    }
    std::ostringstream detail;
    detail << points << " random (z, c) points, max |analytic - numeric| = " << worst;
    return {"flow-logdet", worst < 1e-6, detail.str()};
}

CheckLine check_kl_oracles(CounterRng rng, int n_random, int mc_draws) {
    const std::size_t z = 4;
    bool pass = true;
    std::ostringstream detail;

    // KL(p||p) must be exactly zero.
    for (int i = 0; i < 100 && pass; ++i) {
        Tensor mu = Tensor::vector(z), ls = Tensor::vector(z);
        for (auto& v : mu.v) v = rng.normal();
        for (auto& v : ls.v) v = 0.5 * rng.normal();
        if (kl_gauss(mu, ls, mu, ls) != 0.0) {
            pass = false;
            detail << "KL(p||p) != 0; ";
        }
    }

    // Non-negativity at random inputs.
    double min_kl = 0.0;
    for (int i = 0; i < n_random; ++i) {
        Tensor mq = Tensor::vector(z), lq = Tensor::vector(z);
        Tensor mp = Tensor::vector(z), lp = Tensor::vector(z);
        for (auto& v : mq.v) v = 2.0 * rng.normal();
        for (auto& v : lq.v) v = rng.normal();
        for (auto& v : mp.v) v = 2.0 * rng.normal();
        for (auto& v : lp.v) v = rng.normal();
        min_kl = std::min(min_kl, kl_gauss(mq, lq, mp, lp));
    }
    if (min_kl < 0.0) {
        pass = false;
        detail << "negative KL " << min_kl << "; ";
    }

    // Identity-flow Monte Carlo KL vs the closed form, through the model path.
    ModelConfig cfg;
    cfg.input_dim = 8;
    cfg.e_dim = 5;
    cfg.latent_dim = z;
    cfg.flow_blocks = 2;
    cfg.encoder_hidden = {8};
    cfg.decoder_hidden = {8};
    cfg.prior_hidden = {8};
    cfg.mode = CondMode::Parametric;
    CvaeModel model(cfg, rng.next_u64());
    for (int k = 0; k < cfg.flow_blocks; ++k)
        for (const char* part : {".u.w", ".u.b", ".w.w", ".w.b", ".b.w", ".b.b"}) {
            Tensor& t = model.params().at("flow." + std::to_string(k) + part).value;
            std::fill(t.v.begin(), t.v.end(), 0.0);
        }

    const std::vector<double> x = random_vec(cfg.input_dim, rng, 0.7);
    const std::vector<double> c = random_vec(cfg.e_dim, rng, 0.5);
    const auto [mu_q, ls_q] = model.encode(x, c);
    const auto [mu_p, ls_p] = model.prior(c);
    const double closed = kl_gauss(mu_q, ls_q, mu_p, ls_p);

    double sum = 0.0, sum_sq = 0.0;
    Tensor eps = Tensor::vector(z);
    for (int i = 0; i < mc_draws; ++i) {
        for (double& e : eps.v) e = rng.normal();
        const double kl_i = model.elbo(x, c, eps).kl_term;
        sum += kl_i;
        sum_sq += kl_i * kl_i;
    }
    const double mean = sum / mc_draws;
    const double var = std::max(0.0, sum_sq / mc_draws - mean * mean);
    const double se = std::sqrt(var / mc_draws);
    if (std::abs(mean - closed) > 3.0 * se) {
        pass = false;
        detail << "MC KL " << mean << " vs closed " << closed << " (se " << se << "); ";
    }
    if (pass)
        detail << "KL(p||p)=0, min KL " << min_kl << ", MC-closed gap "
               << std::abs(mean - closed) << " <= 3se (" << 3.0 * se << ")";
    return {"kl-oracles", pass, detail.str()};
}

CheckLine check_jakes_autocorrelation(CounterRng rng, int taps) {
    const double fd = 1000.0;
    const int lags = 9;
    std::vector<double> re_sum(lags, 0.0);
    for (int t = 0; t < taps; ++t) {
        JakesTap tap(fd, rng.derive(static_cast<std::uint64_t>(t)));
        const cplx h0 = tap.value(0.0);
        for (int k = 0; k < lags; ++k) {
            const double tau = (k / 8.0) / fd;  // f_D * tau in [0, 1]
            const cplx hk = tap.value(tau);
            re_sum[k] += (h0 * std::conj(hk)).real();
        }
    }
    double worst = 0.0;
    for (int k = 0; k < lags; ++k) {
        const double fd_tau = k / 8.0;
        const double expected = bessel_j0_series(2.0 * 3.14159265358979323846 * fd_tau);
        worst = std::max(worst, std::abs(re_sum[k] / taps - expected));
    }
    std::ostringstream detail;
    detail << taps << " taps, max |corr - J0| = " << worst << " over f_D*tau <= 1";
    return {"jakes-autocorrelation", worst < 0.05, detail.str()};
}

}  // namespace

std::vector<CheckLine> run_selfcheck(const SelfCheckOptions& opt) {
    CounterRng rng(opt.seed);
    std::vector<CheckLine> lines;
    lines.push_back(check_gradient_integrity(rng.derive(1), opt.inject_broken_derivative));
    lines.push_back(check_flow_logdet(rng.derive(2), 20));
    lines.push_back(check_kl_oracles(rng.derive(3), 10000, 10000));
    lines.push_back(check_jakes_autocorrelation(rng.derive(4), 2000));
    return lines;
}

}  // namespace ddcp
