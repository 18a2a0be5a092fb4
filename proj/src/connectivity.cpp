#include "rigoletto/connectivity.hpp"

#include <algorithm>
#include <cmath>

namespace rigoletto {

void EpochSet::validate() const {
  if (!(fs_hz > 0.0)) throw InvalidInput("EpochSet: fs must be positive");
  const int n_ch = n_channels();
  if (n_ch < 1) throw InvalidInput("EpochSet: no channels");
  if (labels.size() != trials.size())
    throw InvalidInput("EpochSet: label count does not match trial count");
  const int n_samp = n_samples();
  if (n_samp < 2) throw InvalidInput("EpochSet: trials need at least 2 samples");
  for (const auto& t : trials) {
    if (t.rows() != n_ch || t.cols() != n_samp)
      throw InvalidInput("EpochSet: inconsistent trial dimensions");
  }
}

EpochSet window_epochs(const EpochSet& e, double t0_s, double t1_s) {
  e.validate();
  const int n_samp = e.n_samples();
  const double duration = n_samp / e.fs_hz;
  if (!(t0_s >= 0.0 && t0_s < t1_s && t1_s <= duration))
    throw InvalidInput("window_epochs: require 0 <= t0 < t1 <= duration");
  const int first = static_cast<int>(std::floor(t0_s * e.fs_hz));
  const int last = static_cast<int>(std::floor(t1_s * e.fs_hz));  // exclusive
  if (last - first < 1) throw InvalidInput("window_epochs: empty window");
  EpochSet out;
  out.fs_hz = e.fs_hz;
  out.channel_names = e.channel_names;
  out.labels = e.labels;
  out.trials.reserve(e.trials.size());
  for (const auto& t : e.trials)
    out.trials.push_back(t.middleCols(first, last - first));
  return out;
}

SymmetricMatrix sample_covariance(const Eigen::MatrixXd& trial) {
  const int n_samp = static_cast<int>(trial.cols());
  if (n_samp < 2) throw InvalidInput("sample_covariance: need at least 2 samples");
  const Eigen::VectorXd mean = trial.rowwise().mean();
  const Eigen::MatrixXd centered = trial.colwise() - mean;
  const Eigen::MatrixXd c = centered * centered.transpose() / (n_samp - 1);
  return SymmetricMatrix::symmetrized(c);
}

const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::Cov: return "Cov";
    case Estimator::Coh: return "Coh";
    case Estimator::ICoh: return "ICoh";
    case Estimator::PLV: return "PLV";
    case Estimator::AEC: return "AEC";
  }
  return "?";
}

std::optional<Estimator> estimator_from_name(const std::string& name) {
  for (Estimator e : kEstimatorOrder)
    if (name == estimator_name(e)) return e;
  return std::nullopt;
}

PerFrequencyMatrices coherence(const CrossSpectrum& csd) {
  PerFrequencyMatrices out;
  out.freqs_hz = csd.freqs_hz;
  const int n_bins = static_cast<int>(csd.matrices.size());
  out.values.reserve(n_bins);
  out.flagged.reserve(n_bins);
  for (int k = 0; k < n_bins; ++k) {
    const Eigen::MatrixXcd& s = csd.matrices[k];
    const int n = static_cast<int>(s.rows());
    Eigen::MatrixXd coh = Eigen::MatrixXd::Zero(n, n);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> flag(n, n);
    flag.setConstant(false);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double denom = s(i, i).real() * s(j, j).real();
        if (denom <= 0.0) {
          flag(i, j) = flag(j, i) = true;
          continue;
        }
        const double v = std::min(1.0, std::norm(s(i, j)) / denom);
        coh(i, j) = coh(j, i) = v;
      }
    }
    out.values.push_back(std::move(coh));
    out.flagged.push_back(std::move(flag));
  }
  return out;
}

PerFrequencyMatrices imaginary_coherence(const CrossSpectrum& csd) {
  PerFrequencyMatrices out;
  out.freqs_hz = csd.freqs_hz;
  const int n_bins = static_cast<int>(csd.matrices.size());
  out.values.reserve(n_bins);
  out.flagged.reserve(n_bins);
  for (int k = 0; k < n_bins; ++k) {
    const Eigen::MatrixXcd& s = csd.matrices[k];
    const int n = static_cast<int>(s.rows());
    Eigen::MatrixXd icoh = Eigen::MatrixXd::Zero(n, n);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> flag(n, n);
    flag.setConstant(false);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double denom = s(i, i).real() * s(j, j).real();
        if (denom <= 0.0) {
          flag(i, j) = flag(j, i) = true;
          continue;
        }
        const double v = s(i, j).imag() / std::sqrt(denom);
        icoh(i, j) = icoh(j, i) = v;
      }
    }
    out.values.push_back(std::move(icoh));
    out.flagged.push_back(std::move(flag));
  }
  return out;
}

ConnectivityMatrix band_average(Estimator estimator,
                                const PerFrequencyMatrices& per_freq,
                                double low_hz, double high_hz) {
  const int n_bins = static_cast<int>(per_freq.values.size());
  if (n_bins == 0) throw InvalidInput("band_average: no frequency bins");
  const int n = static_cast<int>(per_freq.values[0].rows());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> flag(n, n);
  flag.setConstant(false);
  int used = 0;
  for (int k = 0; k < n_bins; ++k) {
    const double f = per_freq.freqs_hz(k);
    if (f < low_hz || f > high_hz) continue;
    acc += per_freq.values[k];
    if (!per_freq.flagged.empty())
      flag = (flag.array() || per_freq.flagged[k].array()).eval();
    ++used;
  }
  if (used == 0) throw InvalidInput("band_average: no bins inside the band");
  ConnectivityMatrix out;
  out.estimator = estimator;
  out.values = acc / used;
  out.band_hz = Band{low_hz, high_hz};
  out.flagged = flag;
  return out;
}

namespace {

int edge_trim_samples(const ConnectivityConfig& cfg, double fs, int n_samples) {
  int trim = static_cast<int>(std::lround(cfg.edge_trim_s * fs));
  if (trim < 0) trim = 0;
  if (n_samples - 2 * trim < 2)
    throw InvalidInput("trial too short for edge trimming");
  return trim;
}

}  // namespace

std::vector<ConnectivityMatrix> plv(const EpochSet& e, const ConnectivityConfig& cfg) {
  e.validate();
  const int n = e.n_channels();
  std::vector<ConnectivityMatrix> out;
  out.reserve(e.trials.size());
  for (const auto& trial : e.trials) {
    const Eigen::MatrixXcd z =
        band_analytic(trial, e.fs_hz, cfg.band.low_hz, cfg.band.high_hz);
    const int trim = edge_trim_samples(cfg, e.fs_hz, static_cast<int>(z.cols()));
    const int t0 = trim;
    const int t1 = static_cast<int>(z.cols()) - trim;

    // Unit phasors per channel and sample.
    Eigen::MatrixXcd phasor(n, t1 - t0);
    for (int c = 0; c < n; ++c)
      for (int t = t0; t < t1; ++t) {
        const std::complex<double> v = z(c, t);
        const double mag = std::abs(v);
        phasor(c, t - t0) = mag > 0.0 ? v / mag : std::complex<double>(0.0, 0.0);
      }

    ConnectivityMatrix m;
    m.estimator = Estimator::PLV;
    m.band_hz = cfg.band;
    m.values = Eigen::MatrixXd::Zero(n, n);
    m.flagged.resize(n, n);
    m.flagged.setConstant(false);
    const double inv_t = 1.0 / static_cast<double>(t1 - t0);
    for (int i = 0; i < n; ++i) {
      m.values(i, i) = 1.0;
      for (int j = i + 1; j < n; ++j) {
        const std::complex<double> mean_phasor =
            (phasor.row(i).array() * phasor.row(j).array().conjugate()).sum() * inv_t;
        const double v = std::min(1.0, std::abs(mean_phasor));
        m.values(i, j) = m.values(j, i) = v;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<ConnectivityMatrix> aec(const EpochSet& e, const ConnectivityConfig& cfg) {
  e.validate();
  const int n = e.n_channels();
  std::vector<ConnectivityMatrix> out;
  out.reserve(e.trials.size());
  for (const auto& trial : e.trials) {
    const Eigen::MatrixXcd z =
        band_analytic(trial, e.fs_hz, cfg.band.low_hz, cfg.band.high_hz);
    const int trim = edge_trim_samples(cfg, e.fs_hz, static_cast<int>(z.cols()));
    const int t0 = trim;
    const int t1 = static_cast<int>(z.cols()) - trim;
    const int len = t1 - t0;

    Eigen::MatrixXd envelope(n, len);
    for (int c = 0; c < n; ++c)
      for (int t = t0; t < t1; ++t) envelope(c, t - t0) = std::abs(z(c, t));
    const Eigen::VectorXd mean = envelope.rowwise().mean();
    const Eigen::MatrixXd centered = envelope.colwise() - mean;
    const Eigen::VectorXd sd = centered.rowwise().norm();

    ConnectivityMatrix m;
    m.estimator = Estimator::AEC;
    m.band_hz = cfg.band;
    m.values = Eigen::MatrixXd::Zero(n, n);
    m.flagged.resize(n, n);
    m.flagged.setConstant(false);
    for (int i = 0; i < n; ++i) {
      m.values(i, i) = 1.0;
      for (int j = i + 1; j < n; ++j) {
        const double denom = sd(i) * sd(j);
        if (denom <= 0.0) {
          m.flagged(i, j) = m.flagged(j, i) = true;
          continue;  // entry stays 0
        }
        const double r = centered.row(i).dot(centered.row(j)) / denom;
        const double v = std::clamp(r, -1.0, 1.0);
        m.values(i, j) = m.values(j, i) = v;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Estimator> FeatureBundle::estimators() const {
  std::vector<Estimator> out;
  out.reserve(features.size());
  for (const auto& [e, mats] : features) out.push_back(e);
  return out;
}

const std::vector<SpdMatrix>& FeatureBundle::at(Estimator e) const {
  auto it = features.find(e);
  if (it == features.end())
    throw InvalidInput(std::string("FeatureBundle: missing estimator ") +
                       estimator_name(e));
  return it->second;
}

FeatureBundle FeatureBundle::subset(std::span<const int> trial_indices) const {
  FeatureBundle out;
  out.dim = dim;
  for (const auto& [e, mats] : features) {
    std::vector<SpdMatrix> sub;
    sub.reserve(trial_indices.size());
    for (int idx : trial_indices) {
      if (idx < 0 || idx >= static_cast<int>(mats.size()))
        throw InvalidInput("FeatureBundle::subset: index out of range");
      sub.push_back(mats[idx]);
    }
    out.features.emplace(e, std::move(sub));
  }
  return out;
}

void FeatureBundle::validate() const {
  if (features.empty()) throw InvalidInput("FeatureBundle: no estimators");
  const int n = n_trials();
  for (const auto& [e, mats] : features) {
    if (static_cast<int>(mats.size()) != n)
      throw InvalidInput("FeatureBundle: trial count mismatch across estimators");
    for (const auto& m : mats)
      if (m.dim() != dim)
        throw InvalidInput("FeatureBundle: dimension mismatch");
  }
}

namespace {

// FC matrices reach the manifold through the spectral floor projection.
SpdMatrix project_fc(const Eigen::MatrixXd& values, double eps_rel) {
  const SymmetricMatrix sym = SymmetricMatrix::symmetrized(values);
  const double mean_diag = sym.trace() / sym.dim();
  const double eps = eps_rel * (mean_diag > 0.0 ? mean_diag : 1.0);
  return nearest_spd(sym, eps);
}

}  // namespace

FeatureBundle extract_features(const EpochSet& e, const ExtractConfig& cfg) {
  EpochSet windowed = cfg.window_s
                          ? window_epochs(e, cfg.window_s->first, cfg.window_s->second)
                          : e;
  windowed.validate();
  if (cfg.estimators.empty())
    throw InvalidInput("extract_features: no estimators requested");

  FeatureBundle bundle;
  bundle.dim = windowed.n_channels();
  const ConnectivityConfig& conn = cfg.connectivity;

  const bool needs_csd = cfg.estimators.count(Estimator::Coh) ||
                         cfg.estimators.count(Estimator::ICoh);
  int seg_len = static_cast<int>(std::lround(conn.welch_seg_s * windowed.fs_hz));
  seg_len = std::min(seg_len, windowed.n_samples());

  std::map<Estimator, std::vector<SpdMatrix>> features;
  for (Estimator est : cfg.estimators) features[est] = {};

  std::vector<ConnectivityMatrix> plv_mats, aec_mats;
  if (cfg.estimators.count(Estimator::PLV)) plv_mats = plv(windowed, conn);
  if (cfg.estimators.count(Estimator::AEC)) aec_mats = aec(windowed, conn);

  for (int t = 0; t < windowed.n_trials(); ++t) {
    const Eigen::MatrixXd& trial = windowed.trials[t];
    CrossSpectrum csd;
    if (needs_csd)
      csd = cross_spectral_density(trial, windowed.fs_hz, seg_len,
                                   conn.welch_overlap, conn.welch_taper);

    for (Estimator est : cfg.estimators) {
      switch (est) {
        case Estimator::Cov: {
          const SymmetricMatrix c = sample_covariance(trial);
          features[est].push_back(shrink_covariance(c, cfg.cov_shrinkage));
          break;
        }
        case Estimator::Coh: {
          const ConnectivityMatrix m = band_average(
              Estimator::Coh, coherence(csd), conn.band.low_hz, conn.band.high_hz);
          features[est].push_back(project_fc(m.values, cfg.fc_eps_rel));
          break;
        }
        case Estimator::ICoh: {
          // Band-average the magnitude of the imaginary part so opposite
          // signs across bins do not cancel; unit diagonal before projection.
          const PerFrequencyMatrices per_freq = imaginary_coherence(csd);
          PerFrequencyMatrices abs_freq = per_freq;
          for (auto& v : abs_freq.values) v = v.cwiseAbs();
          ConnectivityMatrix m = band_average(Estimator::ICoh, abs_freq,
                                              conn.band.low_hz, conn.band.high_hz);
          m.values.diagonal().setOnes();
          features[est].push_back(project_fc(m.values, cfg.fc_eps_rel));
          break;
        }
        case Estimator::PLV:
          features[est].push_back(project_fc(plv_mats[t].values, cfg.fc_eps_rel));
          break;
        case Estimator::AEC:
          features[est].push_back(project_fc(aec_mats[t].values, cfg.fc_eps_rel));
          break;
      }
    }
  }

  bundle.features = std::move(features);
  bundle.validate();
  return bundle;
}

}  // namespace rigoletto
