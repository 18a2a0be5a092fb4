#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rigoletto/matrix.hpp"
#include "rigoletto/signal.hpp"

namespace rigoletto {

/// Labeled multichannel trials at a fixed sampling rate. Each trial is a
/// channels x samples matrix; label -1 marks an unknown class.
struct EpochSet {
  double fs_hz = 0.0;
  std::vector<std::string> channel_names;
  std::vector<Eigen::MatrixXd> trials;
  std::vector<int> labels;

  int n_trials() const { return static_cast<int>(trials.size()); }
  int n_channels() const { return static_cast<int>(channel_names.size()); }
  int n_samples() const {
    return trials.empty() ? 0 : static_cast<int>(trials[0].cols());
  }
  void validate() const;
};

/// Restrict every trial to the sample range [floor(t0*fs), floor(t1*fs)).
EpochSet window_epochs(const EpochSet& e, double t0_s, double t1_s);

/// Unbiased sample covariance (rows are channels).
SymmetricMatrix sample_covariance(const Eigen::MatrixXd& trial);

enum class Estimator { Cov, Coh, ICoh, PLV, AEC };

const char* estimator_name(Estimator e);
std::optional<Estimator> estimator_from_name(const std::string& name);

/// Canonical ordering used everywhere estimators are enumerated.
inline constexpr Estimator kEstimatorOrder[] = {
    Estimator::Cov, Estimator::Coh, Estimator::ICoh, Estimator::PLV,
    Estimator::AEC};

struct Band {
  double low_hz = 8.0;
  double high_hz = 30.0;
};

/// Per-frequency symmetric matrices plus a mask of entries that were forced
/// to zero because an auto-spectrum (or envelope variance) vanished.
struct PerFrequencyMatrices {
  Eigen::VectorXd freqs_hz;
  std::vector<Eigen::MatrixXd> values;
  std::vector<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> flagged;
};

PerFrequencyMatrices coherence(const CrossSpectrum& csd);
PerFrequencyMatrices imaginary_coherence(const CrossSpectrum& csd);

/// Band-averaged connectivity values for one trial.
struct ConnectivityMatrix {
  Estimator estimator;
  Eigen::MatrixXd values;
  Band band_hz;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> flagged;
};

ConnectivityMatrix band_average(Estimator estimator,
                                const PerFrequencyMatrices& per_freq,
                                double low_hz, double high_hz);

struct ConnectivityConfig {
  Band band;
  double welch_seg_s = 1.0;       // Welch segment length in seconds
  double welch_overlap = 0.5;
  Taper welch_taper = Taper::Hann;
  double edge_trim_s = 0.25;      // samples dropped at each trial edge for
                                  // phase/envelope statistics
};

std::vector<ConnectivityMatrix> plv(const EpochSet& e, const ConnectivityConfig& cfg);
std::vector<ConnectivityMatrix> aec(const EpochSet& e, const ConnectivityConfig& cfg);

/// Per-trial SPD matrices keyed by estimator, all lists the same length.
struct FeatureBundle {
  std::map<Estimator, std::vector<SpdMatrix>> features;
  int dim = 0;

  int n_trials() const {
    return features.empty() ? 0
                            : static_cast<int>(features.begin()->second.size());
  }
  std::vector<Estimator> estimators() const;
  bool has(Estimator e) const { return features.count(e) != 0; }
  const std::vector<SpdMatrix>& at(Estimator e) const;
  FeatureBundle subset(std::span<const int> trial_indices) const;
  void validate() const;
};

struct ExtractConfig {
  std::optional<std::pair<double, double>> window_s;  // applied when set
  std::set<Estimator> estimators = {Estimator::Cov, Estimator::Coh,
                                    Estimator::PLV};
  ConnectivityConfig connectivity;
  double cov_shrinkage = 0.0;     // shrinkage intensity for the covariance
  double fc_eps_rel = 1e-6;       // SPD floor relative to mean diagonal
};

/// Extracts per-trial SPD features for the requested estimators. Functional
/// connectivity matrices are projected onto the SPD cone; covariances are
/// shrunk and then certified.
FeatureBundle extract_features(const EpochSet& e, const ExtractConfig& cfg);

}  // namespace rigoletto
