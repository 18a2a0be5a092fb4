#include "rigoletto/signal.hpp"

#include <cmath>
#include <map>
#include <utility>

namespace rigoletto {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Iterative radix-2 Cooley-Tukey; sign = -1 forward, +1 inverse (unnormalized).
void fft_pow2(ComplexVec& a, int sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = sign * 2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Precomputed Bluestein state for one (length, direction) pair.
struct BluesteinPlan {
  ComplexVec chirp;    // e^{sign * i*pi*k^2/n}
  ComplexVec b_fft;    // forward FFT of the chirp convolution kernel
  std::size_t m = 0;
};

const BluesteinPlan& bluestein_plan(std::size_t n, int sign) {
  thread_local std::map<std::pair<std::size_t, int>, BluesteinPlan> cache;
  auto [it, inserted] = cache.try_emplace({n, sign});
  BluesteinPlan& plan = it->second;
  if (!inserted) return plan;

  plan.m = next_power_of_two(2 * n - 1);
  plan.chirp.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument exact for large k.
    const std::size_t k2 = (k * k) % (2 * n);
    const double angle = sign * M_PI * static_cast<double>(k2) / static_cast<double>(n);
    plan.chirp[k] = {std::cos(angle), std::sin(angle)};
  }
  plan.b_fft.assign(plan.m, {0.0, 0.0});
  plan.b_fft[0] = std::conj(plan.chirp[0]);
  for (std::size_t k = 1; k < n; ++k)
    plan.b_fft[k] = plan.b_fft[plan.m - k] = std::conj(plan.chirp[k]);
  fft_pow2(plan.b_fft, -1);
  return plan;
}

// Bluestein's algorithm: DFT of arbitrary length as a convolution carried
// out with power-of-two FFTs.
ComplexVec fft_bluestein(const ComplexVec& x, int sign) {
  const std::size_t n = x.size();
  const BluesteinPlan& plan = bluestein_plan(n, sign);
  ComplexVec a(plan.m, {0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * plan.chirp[k];
  fft_pow2(a, -1);
  for (std::size_t k = 0; k < plan.m; ++k) a[k] *= plan.b_fft[k];
  fft_pow2(a, +1);
  const double inv_m = 1.0 / static_cast<double>(plan.m);
  ComplexVec out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * inv_m * plan.chirp[k];
  return out;
}

ComplexVec transform(const ComplexVec& x, int sign) {
  if (x.empty()) throw InvalidInput("fft: empty input");
  if (x.size() == 1) return x;
  if (is_power_of_two(x.size())) {
    ComplexVec a = x;
    fft_pow2(a, sign);
    return a;
  }
  return fft_bluestein(x, sign);
}

}  // namespace

ComplexVec fft(const ComplexVec& x) { return transform(x, -1); }

ComplexVec ifft(const ComplexVec& x) {
  ComplexVec out = transform(x, +1);
  const double inv_n = 1.0 / static_cast<double>(out.size());
  for (auto& v : out) v *= inv_n;
  return out;
}

Eigen::VectorXd taper_window(Taper taper, int length) {
  if (length < 1) throw InvalidInput("taper_window: length must be >= 1");
  Eigen::VectorXd w(length);
  switch (taper) {
    case Taper::Rectangular:
      w.setOnes();
      break;
    case Taper::Hann:
      if (length == 1) {
        w(0) = 1.0;
      } else {
        for (int t = 0; t < length; ++t)
          w(t) = 0.5 - 0.5 * std::cos(2.0 * M_PI * t / (length - 1));
      }
      break;
  }
  return w;
}

Eigen::MatrixXd band_filter(const Eigen::MatrixXd& trial, double fs_hz,
                            double low_hz, double high_hz) {
  if (!(fs_hz > 0.0)) throw InvalidInput("band_filter: fs must be positive");
  if (!(0.0 < low_hz && low_hz < high_hz && high_hz < fs_hz / 2.0))
    throw InvalidInput("band_filter: band must satisfy 0 < low < high < fs/2");
  const int n_samples = static_cast<int>(trial.cols());
  if (n_samples < 2) throw InvalidInput("band_filter: too few samples");

  Eigen::MatrixXd out(trial.rows(), n_samples);
  for (int c = 0; c < trial.rows(); ++c) {
    ComplexVec x(n_samples);
    for (int t = 0; t < n_samples; ++t) x[t] = {trial(c, t), 0.0};
    ComplexVec spec = fft(x);
    for (int k = 0; k < n_samples; ++k) {
      // Two-sided bin frequency: bins above N/2 alias to negative freqs.
      const int kk = (k <= n_samples / 2) ? k : k - n_samples;
      const double f = std::abs(kk) * fs_hz / n_samples;
      if (f < low_hz || f > high_hz) spec[k] = {0.0, 0.0};
    }
    ComplexVec y = ifft(spec);
    for (int t = 0; t < n_samples; ++t) out(c, t) = y[t].real();
  }
  return out;
}

Eigen::MatrixXcd analytic_signal(const Eigen::MatrixXd& trial) {
  const int n_samples = static_cast<int>(trial.cols());
  if (n_samples < 4) throw InvalidInput("analytic_signal: need at least 4 samples");
  Eigen::MatrixXcd out(trial.rows(), n_samples);
  for (int c = 0; c < trial.rows(); ++c) {
    ComplexVec x(n_samples);
    for (int t = 0; t < n_samples; ++t) x[t] = {trial(c, t), 0.0};
    ComplexVec spec = fft(x);
    // One-sided construction: keep DC (and Nyquist when even), double the
    // positive bins, zero the negative ones.
    const int half = n_samples / 2;
    for (int k = 1; k < half + (n_samples % 2 ? 1 : 0); ++k) spec[k] *= 2.0;
    for (int k = half + 1; k < n_samples; ++k) spec[k] = {0.0, 0.0};
    ComplexVec z = ifft(spec);
    for (int t = 0; t < n_samples; ++t) out(c, t) = z[t];
  }
  return out;
}

Eigen::MatrixXcd band_analytic(const Eigen::MatrixXd& trial, double fs_hz,
                               double low_hz, double high_hz) {
  if (!(fs_hz > 0.0)) throw InvalidInput("band_analytic: fs must be positive");
  if (!(0.0 < low_hz && low_hz < high_hz && high_hz < fs_hz / 2.0))
    throw InvalidInput("band_analytic: band must satisfy 0 < low < high < fs/2");
  const int n_samples = static_cast<int>(trial.cols());
  if (n_samples < 4) throw InvalidInput("band_analytic: need at least 4 samples");

  Eigen::MatrixXcd out(trial.rows(), n_samples);
  const int half = n_samples / 2;
  for (int c = 0; c < trial.rows(); ++c) {
    ComplexVec x(n_samples);
    for (int t = 0; t < n_samples; ++t) x[t] = {trial(c, t), 0.0};
    ComplexVec spec = fft(x);
    // Band mask and one-sided doubling in one pass over the spectrum.
    for (int k = 0; k < n_samples; ++k) {
      const int kk = (k <= half) ? k : k - n_samples;
      const double f = std::abs(kk) * fs_hz / n_samples;
      if (f < low_hz || f > high_hz || kk < 0) {
        spec[k] = {0.0, 0.0};
      } else if (k != 0 && !(n_samples % 2 == 0 && k == half)) {
        spec[k] *= 2.0;
      }
    }
    ComplexVec z = ifft(spec);
    for (int t = 0; t < n_samples; ++t) out(c, t) = z[t];
  }
  return out;
}

CrossSpectrum cross_spectral_density(const Eigen::MatrixXd& trial, double fs_hz,
                                     int seg_len, double overlap, Taper taper) {
  const int n_channels = static_cast<int>(trial.rows());
  const int n_samples = static_cast<int>(trial.cols());
  if (!(fs_hz > 0.0)) throw InvalidInput("cross_spectral_density: fs must be positive");
  if (seg_len < 2) throw InvalidInput("cross_spectral_density: segment too short");
  if (seg_len > n_samples)
    throw InvalidInput("cross_spectral_density: segment longer than trial");
  if (!(overlap >= 0.0 && overlap < 1.0))
    throw InvalidInput("cross_spectral_density: overlap must lie in [0, 1)");

  const Eigen::VectorXd window = taper_window(taper, seg_len);
  const double window_power = window.squaredNorm();
  int hop = static_cast<int>(std::lround(seg_len * (1.0 - overlap)));
  if (hop < 1) hop = 1;

  const int n_bins = seg_len / 2 + 1;
  CrossSpectrum csd;
  csd.freqs_hz.resize(n_bins);
  for (int k = 0; k < n_bins; ++k) csd.freqs_hz(k) = k * fs_hz / seg_len;
  csd.matrices.assign(n_bins, Eigen::MatrixXcd::Zero(n_channels, n_channels));

  int n_segments = 0;
  std::vector<ComplexVec> spectra(n_channels);
  for (int start = 0; start + seg_len <= n_samples; start += hop) {
    for (int c = 0; c < n_channels; ++c) {
      ComplexVec x(seg_len);
      for (int t = 0; t < seg_len; ++t)
        x[t] = {trial(c, start + t) * window(t), 0.0};
      spectra[c] = fft(x);
    }
    for (int k = 0; k < n_bins; ++k) {
      Eigen::MatrixXcd& m = csd.matrices[k];
      for (int i = 0; i < n_channels; ++i)
        for (int j = 0; j < n_channels; ++j)
          m(i, j) += spectra[i][k] * std::conj(spectra[j][k]);
    }
    ++n_segments;
  }

  // Periodogram scaling: power/Hz with one-sided doubling of interior bins.
  for (int k = 0; k < n_bins; ++k) {
    double scale = 1.0 / (n_segments * fs_hz * window_power);
    const bool interior = k != 0 && !(seg_len % 2 == 0 && k == n_bins - 1);
    if (interior) scale *= 2.0;
    csd.matrices[k] *= scale;
    // Hermitian by construction; pin the diagonal real.
    for (int i = 0; i < n_channels; ++i)
      csd.matrices[k](i, i) = {csd.matrices[k](i, i).real(), 0.0};
  }
  return csd;
}

}  // namespace rigoletto
