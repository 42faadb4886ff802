#include "hydroquad/filters.hpp"

#include <algorithm>
#include <cmath>

#include "hydroquad/errors.hpp"

namespace hydroquad {

namespace {

struct Biquad {
    double b0, b1, b2, a1, a2; // a0 normalized to 1
};

// Bilinear-transform design of a 2nd-order Butterworth lowpass (Q = 1/sqrt2).
Biquad butter2_lowpass(double fs, double fc) {
    const double K = std::tan(M_PI * fc / fs);
    const double Q = 1.0 / std::sqrt(2.0);
    const double norm = 1.0 / (1.0 + K / Q + K * K);
    Biquad c;
    c.b0 = K * K * norm;
    c.b1 = 2.0 * c.b0;
    c.b2 = c.b0;
    c.a1 = 2.0 * (K * K - 1.0) * norm;
    c.a2 = (1.0 - K / Q + K * K) * norm;
    return c;
}

// Direct form II transposed, with the state primed so that a constant input
// x0 would pass through unchanged (steady-state initialization).
std::vector<double> run_biquad(const Biquad& c, const std::vector<double>& x) {
    const double x0 = x.front();
    double z1 = (c.b1 - c.a1 + c.b2 - c.a2) * x0;
    double z2 = (c.b2 - c.a2) * x0;
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        const double yi = c.b0 * xi + z1;
        z1 = c.b1 * xi - c.a1 * yi + z2;
        z2 = c.b2 * xi - c.a2 * yi;
        y[i] = yi;
    }
    return y;
}

} // namespace

std::vector<double> lowpass_filtfilt(const std::vector<double>& x, double fs,
                                     double cutoff_hz) {
    if (!(fs > 0.0)) throw SamplingError("lowpass_filtfilt: fs must be positive");
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * fs))
        throw SamplingError("lowpass_filtfilt: cutoff must lie in (0, fs/2)");

    constexpr std::size_t pad = 9; // 3 * biquad order, matching common filtfilt practice
    if (x.size() <= pad)
        throw InsufficientLength("lowpass_filtfilt: need more than 9 samples");

    // Odd reflection about the first and last samples suppresses edge
    // transients: ext = [2*x0 - x[pad..1], x, 2*xn - x[n-2..n-1-pad]].
    std::vector<double> ext;
    ext.reserve(x.size() + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 2; i <= pad + 1; ++i)
        ext.push_back(2.0 * x.back() - x[x.size() - i]);

    const Biquad c = butter2_lowpass(fs, cutoff_hz);
    std::vector<double> fwd = run_biquad(c, ext);
    std::reverse(fwd.begin(), fwd.end());
    std::vector<double> bwd = run_biquad(c, fwd);
    std::reverse(bwd.begin(), bwd.end());

    return {bwd.begin() + static_cast<std::ptrdiff_t>(pad),
            bwd.begin() + static_cast<std::ptrdiff_t>(pad + x.size())};
}

} // namespace hydroquad
