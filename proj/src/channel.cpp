#include "ddcp/channel.hpp"

#include <cmath>

#include "ddcp/errors.hpp"

namespace ddcp {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::vector<double> power_delay_profile(std::size_t l, double decay) {
    if (l < 1) throw UsageError("power_delay_profile: need at least one tap");
    if (!(decay > 0.0)) throw UsageError("power_delay_profile: decay must be positive");
    std::vector<double> p(l);
    double total = 0.0;
    for (std::size_t i = 0; i < l; ++i) {
        p[i] = std::exp(-static_cast<double>(i) / decay);
        total += p[i];
    }
    for (double& x : p) x /= total;
    return p;
}

JakesTap::JakesTap(double doppler_hz, CounterRng stream, int n_sinusoids)
    : omega_(static_cast<std::size_t>(n_sinusoids)),
      phase_(static_cast<std::size_t>(n_sinusoids)),
      amp_(1.0 / std::sqrt(static_cast<double>(n_sinusoids))) {
    if (n_sinusoids < 1) throw UsageError("JakesTap: need at least one sinusoid");
    if (doppler_hz < 0.0) throw UsageError("JakesTap: Doppler must be non-negative");
    for (std::size_t n = 0; n < omega_.size(); ++n) {
        const double alpha = stream.uniform(0.0, kTwoPi);
        omega_[n] = kTwoPi * doppler_hz * std::cos(alpha);
        phase_[n] = stream.uniform(0.0, kTwoPi);
    }
}

cplx JakesTap::value(double t) const {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < omega_.size(); ++n) {
        const double a = omega_[n] * t + phase_[n];
        re += std::cos(a);
        im += std::sin(a);
    }
    return {amp_ * re, amp_ * im};
}

void JakesTap::sample_block(double t0, double dt, std::span<cplx> out) const {
    if (out.empty()) return;
    std::vector<cplx> ph(omega_.size());
    std::vector<cplx> rot(omega_.size());
    for (std::size_t n = 0; n < omega_.size(); ++n) {
        const double a0 = omega_[n] * t0 + phase_[n];
        ph[n] = {std::cos(a0), std::sin(a0)};
        rot[n] = {std::cos(omega_[n] * dt), std::sin(omega_[n] * dt)};
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < ph.size(); ++n) {
            re += ph[n].real();
            im += ph[n].imag();
            ph[n] *= rot[n];
        }
        out[k] = {amp_ * re, amp_ * im};
    }
}

ChannelFrameSequence generate_frame_sequence(const ScenarioParams& p, const GridConfig& grid,
                                             CounterRng stream, double pdp_decay) {
    p.validate();
    grid.validate();

    ChannelFrameSequence seq;
    seq.tap_powers = power_delay_profile(grid.l, pdp_decay);
    seq.doppler_hz = derive_doppler(p.speed_mps, p.carrier_hz);
    seq.sample_period_s = 1.0 / p.bandwidth_hz;
    seq.frames.assign(grid.f, std::vector<cplx>(grid.d()));

    const std::size_t bins = grid.bins();
    const std::size_t total = grid.f * bins;
    std::vector<cplx> block(total);
    for (std::size_t l = 0; l < grid.l; ++l) {
        JakesTap tap(seq.doppler_hz, stream.derive(stream_salt::kTap).derive(l));
        tap.sample_block(0.0, seq.sample_period_s, block);
        const double scale = std::sqrt(seq.tap_powers[l]);
        for (std::size_t f = 0; f < grid.f; ++f) {
            cplx* dst = &seq.frames[f][l * bins];
            const cplx* src = &block[f * bins];
            for (std::size_t i = 0; i < bins; ++i) dst[i] = scale * src[i];
        }
    }
    return seq;
}

std::vector<double> flatten_channel(const std::vector<cplx>& frame) {
    const std::size_t d = frame.size();
    std::vector<double> x(2 * d);
    for (std::size_t k = 0; k < d; ++k) {
        x[k] = frame[k].real();
        x[d + k] = frame[k].imag();
    }
    return x;
}

std::vector<double> flatten_channel(const std::vector<cplx>& frame, const GridConfig& grid) {
    if (frame.size() != grid.d())
        throw ShapeError("flatten_channel: frame has " + std::to_string(frame.size()) +
                         " entries, grid expects " + std::to_string(grid.d()));
    return flatten_channel(frame);
}

std::vector<cplx> unflatten_channel(std::span<const double> x) {
    if (x.size() % 2 != 0) throw ShapeError("unflatten_channel: odd feature length");
    const std::size_t d = x.size() / 2;
    std::vector<cplx> frame(d);
    for (std::size_t k = 0; k < d; ++k) frame[k] = {x[k], x[d + k]};
    return frame;
}

}  // namespace ddcp
