#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "rigoletto/errors.hpp"

namespace rigoletto {

using ComplexVec = std::vector<std::complex<double>>;

/// Unnormalized forward DFT, any length (radix-2 with Bluestein fallback).
ComplexVec fft(const ComplexVec& x);

/// Inverse DFT with 1/N normalization.
ComplexVec ifft(const ComplexVec& x);

enum class Taper { Rectangular, Hann };

Eigen::VectorXd taper_window(Taper taper, int length);

/// Zero-phase band-pass by frequency-domain masking: bins with
/// low_hz <= |f| <= high_hz are kept, everything else is zeroed.
/// Rows are channels, columns samples.
Eigen::MatrixXd band_filter(const Eigen::MatrixXd& trial, double fs_hz,
                            double low_hz, double high_hz);

/// Analytic signal per channel via one-sided spectrum construction;
/// the real part reproduces the input.
Eigen::MatrixXcd analytic_signal(const Eigen::MatrixXd& trial);

/// Analytic signal of the band-filtered input in a single transform pair;
/// equals analytic_signal(band_filter(...)) up to round-off.
Eigen::MatrixXcd band_analytic(const Eigen::MatrixXd& trial, double fs_hz,
                               double low_hz, double high_hz);

/// Welch-averaged cross-spectral density. One Hermitian matrix per
/// frequency bin, bins 0..seg_len/2 at spacing fs/seg_len, scaled to
/// power per Hz with one-sided doubling of interior bins.
struct CrossSpectrum {
  Eigen::VectorXd freqs_hz;
  std::vector<Eigen::MatrixXcd> matrices;
};

CrossSpectrum cross_spectral_density(const Eigen::MatrixXd& trial, double fs_hz,
                                     int seg_len, double overlap, Taper taper);

}  // namespace rigoletto
