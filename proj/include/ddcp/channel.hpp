#pragma once

#include <complex>
#include <span>
#include <vector>

#include "ddcp/grid.hpp"
#include "ddcp/rng.hpp"
#include "ddcp/scenario.hpp"

namespace ddcp {

using cplx = std::complex<double>;

// Exponential power delay profile p_l ~ exp(-l/decay), normalized to sum 1.
std::vector<double> power_delay_profile(std::size_t l, double decay);

// One WSSUS Rayleigh tap as a sum of sinusoids:
//   h(t) = (1/sqrt(Ns)) * sum_n exp(j*(2*pi*f_D*cos(alpha_n)*t + phi_n))
// with alpha_n, phi_n uniform on [0, 2*pi). Ensemble autocorrelation is
// J0(2*pi*f_D*tau) and the envelope is Rayleigh in the large-Ns limit.
class JakesTap {
public:
    static constexpr int kDefaultSinusoids = 32;

    JakesTap(double doppler_hz, CounterRng stream, int n_sinusoids = kDefaultSinusoids);

    // Direct evaluation at an arbitrary time.
    cplx value(double t) const;

    // Contiguous samples value(t0 + k*dt), k = 0..out.size()-1, via rotating
    // phasors. Matches value() up to accumulated rounding (~1e-12 relative
    // over 1e4 steps).
    void sample_block(double t0, double dt, std::span<cplx> out) const;

private:
    std::vector<double> omega_;  // 2*pi*f_D*cos(alpha_n)
    std::vector<double> phase_;
    double amp_;
};

// F frames of M*N*L complex gains with temporally continuous fading.
// Frame f, complex index l*M*N + i holds tap l at sample time (f*M*N + i)*T_s.
struct ChannelFrameSequence {
    std::vector<std::vector<cplx>> frames;
    std::vector<double> tap_powers;
    double doppler_hz = 0.0;
    double sample_period_s = 0.0;

    double frame_duration_s(const GridConfig& grid) const {
        return static_cast<double>(grid.bins()) * sample_period_s;
    }
};

// Jakes processes for all L taps, sampled at T_s = 1/bandwidth over F*M*N
// contiguous samples, each tap scaled by sqrt(tap_powers[l]).
ChannelFrameSequence generate_frame_sequence(const ScenarioParams& p, const GridConfig& grid,
                                             CounterRng stream, double pdp_decay = 1.5);

// Real feature: all real parts then all imaginary parts of the complex
// ordering l*M*N + i. Exact inverse pair.
std::vector<double> flatten_channel(const std::vector<cplx>& frame);
std::vector<double> flatten_channel(const std::vector<cplx>& frame, const GridConfig& grid);
std::vector<cplx> unflatten_channel(std::span<const double> x);

}  // namespace ddcp
