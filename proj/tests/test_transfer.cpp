#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "rigoletto/eval.hpp"
#include "rigoletto/transfer.hpp"

using namespace rigoletto;
using namespace rigoletto::testing;

namespace {

SpdMatrix wishart_like(Rng& rng, const Eigen::MatrixXd& sqrt_cov, int draws) {
  const int n = static_cast<int>(sqrt_cov.rows());
  Eigen::MatrixXd samples(n, draws);
  for (int t = 0; t < draws; ++t)
    for (int i = 0; i < n; ++i) samples(i, t) = rng.gaussian();
  samples = sqrt_cov * samples;
  const Eigen::VectorXd mean = samples.rowwise().mean();
  samples.colwise() -= mean;
  return SpdMatrix(
      SymmetricMatrix::symmetrized(samples * samples.transpose() / (draws - 1)));
}

// One synthetic subject: two-class covariance data behind a per-subject
// mixing matrix. Subjects built from nearby mixings are near-twins.
SubjectData make_subject(Rng& rng, const std::string& id,
                         const Eigen::MatrixXd& mixing, int per_class,
                         int draws = 150) {
  const int n = static_cast<int>(mixing.rows());
  Eigen::VectorXd d0 = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd d1 = Eigen::VectorXd::Ones(n);
  d0(0) = 5.0;
  d1(1) = 5.0;
  const Eigen::MatrixXd s0 = mixing * Eigen::MatrixXd(d0.cwiseSqrt().asDiagonal());
  const Eigen::MatrixXd s1 = mixing * Eigen::MatrixXd(d1.cwiseSqrt().asDiagonal());

  SubjectData subject;
  subject.id = id;
  subject.bundle.dim = n;
  std::vector<SpdMatrix> mats;
  for (int i = 0; i < per_class; ++i) {
    mats.push_back(wishart_like(rng, s0, draws));
    subject.labels.push_back(0);
    mats.push_back(wishart_like(rng, s1, draws));
    subject.labels.push_back(1);
  }
  subject.bundle.features.emplace(Estimator::Cov, std::move(mats));
  return subject;
}

Eigen::MatrixXd perturbed(Rng& rng, const Eigen::MatrixXd& base, double scale) {
  const int n = static_cast<int>(base.rows());
  return base * (Eigen::MatrixXd::Identity(n, n) +
                 (scale / std::sqrt(n)) * random_gaussian(rng, n, n));
}

SubjectBundle train_bundle(const SubjectData& s, std::uint64_t seed) {
  EnsembleConfig cfg;
  cfg.seed = seed;
  EnsembleModel model = ensemble_fit(s.bundle, s.labels, cfg);
  SpdMatrix mean = subject_mean(s.bundle.at(Estimator::Cov), MetricKind::Airm);
  return SubjectBundle{s.id, std::move(model), std::move(mean), MetricKind::Airm};
}

}  // namespace

TEST_CASE("subject_mean matches the karcher machinery") {
  Rng rng(601);
  const SpdMatrix a = random_spd(rng, 4);
  const std::vector<SpdMatrix> single{a};
  CHECK(rel_frob_error(subject_mean(single, MetricKind::Airm).values(), a.values()) <
        1e-10);

  const std::vector<SpdMatrix> dup{a, a, a};
  CHECK(rel_frob_error(subject_mean(dup, MetricKind::Airm).values(), a.values()) <
        1e-10);

  CHECK_THROWS_AS(subject_mean({}, MetricKind::Airm), InvalidInput);

  // Commuting set: matches the closed-form log average.
  const Eigen::MatrixXd q = random_orthogonal(rng, 4);
  std::vector<SpdMatrix> commuting;
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd d(4);
    for (int k = 0; k < 4; ++k) d(k) = std::exp(rng.uniform(-1.0, 1.0));
    commuting.emplace_back(
        SymmetricMatrix::symmetrized(q * d.asDiagonal() * q.transpose()));
  }
  const SpdMatrix airm = subject_mean(commuting, MetricKind::Airm);
  const SpdMatrix le = mean_logeuclid(commuting);
  CHECK(rel_frob_error(airm.values(), le.values()) < 1e-8);
}

TEST_CASE("select_source returns the closest subject with stable ties") {
  Rng rng(607);
  std::vector<SubjectData> subjects;
  Eigen::MatrixXd m0 = perturbed(rng, Eigen::MatrixXd::Identity(4, 4), 0.4);
  Eigen::MatrixXd m1 = perturbed(rng, Eigen::MatrixXd::Identity(4, 4), 0.4);
  subjects.push_back(make_subject(rng, "a", m0, 10));
  subjects.push_back(make_subject(rng, "b", m1, 10));

  std::vector<SubjectBundle> sources;
  for (const auto& s : subjects) sources.push_back(train_bundle(s, 5));

  // Exact mean match selects that source.
  CHECK(select_source(sources[1].subject_mean, sources) == 1);
  CHECK(select_source(sources[0].subject_mean, sources) == 0);

  // Single source is always chosen.
  std::vector<SubjectBundle> one{sources[0]};
  CHECK(select_source(random_spd(rng, 4), one) == 0);

  CHECK_THROWS_AS(select_source(sources[0].subject_mean, {}), InvalidInput);
}

TEST_CASE("select_source is permutation consistent away from ties") {
  Rng rng(613);
  std::vector<SubjectBundle> sources;
  std::vector<Eigen::MatrixXd> mixes;
  for (int i = 0; i < 4; ++i) {
    mixes.push_back(perturbed(rng, Eigen::MatrixXd::Identity(3, 3), 0.5));
    sources.push_back(train_bundle(make_subject(rng, std::to_string(i), mixes[i], 8), 3));
  }
  const SpdMatrix target = random_spd(rng, 3);
  const std::size_t chosen = select_source(target, sources);
  // Margin over the runner-up.
  double best = 1e300, second = 1e300;
  for (const auto& s : sources) {
    const double d = dist_airm(target, s.subject_mean);
    if (d < best) {
      second = best;
      best = d;
    } else {
      second = std::min(second, d);
    }
  }
  REQUIRE(second - best > 1e-9);

  std::vector<SubjectBundle> reversed(sources.rbegin(), sources.rend());
  const std::size_t chosen_rev = select_source(target, reversed);
  CHECK(reversed[chosen_rev].subject_id == sources[chosen].subject_id);
}

TEST_CASE("transfer_predict on a source's own data matches its model") {
  Rng rng(617);
  const Eigen::MatrixXd mix = perturbed(rng, Eigen::MatrixXd::Identity(4, 4), 0.3);
  const SubjectData subject = make_subject(rng, "self", mix, 12);
  const SubjectBundle bundle = train_bundle(subject, 9);

  std::vector<SubjectBundle> sources{bundle};
  const std::vector<Prediction> transferred =
      transfer_predict(subject.bundle, bundle.subject_mean, sources);
  for (int t = 0; t < subject.bundle.n_trials(); ++t) {
    const Prediction direct = ensemble_predict(bundle.model, subject.bundle, t);
    CHECK(transferred[t].label == direct.label);
    CHECK((transferred[t].probabilities - direct.probabilities).norm() < 1e-9);
  }

  // Deterministic across calls.
  const std::vector<Prediction> again =
      transfer_predict(subject.bundle, bundle.subject_mean, sources);
  for (int t = 0; t < subject.bundle.n_trials(); ++t)
    CHECK(again[t].probabilities == transferred[t].probabilities);
}

TEST_CASE("cloned subjects are matched and decoded accurately") {
  Rng rng(619);
  const int n = 4;
  const Eigen::MatrixXd base_a = perturbed(rng, Eigen::MatrixXd::Identity(n, n), 0.45);
  const Eigen::MatrixXd base_b = perturbed(rng, Eigen::MatrixXd::Identity(n, n), 0.45);

  // Sources: one subject per base; target: a small perturbation of base a.
  std::vector<SubjectData> source_data{make_subject(rng, "a", base_a, 20),
                                       make_subject(rng, "b", base_b, 20)};
  std::vector<SubjectBundle> sources;
  for (const auto& s : source_data) sources.push_back(train_bundle(s, 21));

  const SubjectData target =
      make_subject(rng, "target", perturbed(rng, base_a, 0.02), 20);
  const SpdMatrix target_mean =
      subject_mean(target.bundle.at(Estimator::Cov), MetricKind::Airm);

  CHECK(select_source(target_mean, sources) == 0);

  const std::vector<Prediction> preds =
      transfer_predict(target.bundle, target_mean, sources);
  std::vector<int> y_pred;
  for (const Prediction& p : preds) y_pred.push_back(p.label);
  CHECK(cohen_kappa(target.labels, y_pred) >= 0.8);
}

TEST_CASE("weighted vote concentrates on a zero-distance source") {
  Rng rng(631);
  const Eigen::MatrixXd mix_a = perturbed(rng, Eigen::MatrixXd::Identity(3, 3), 0.3);
  const Eigen::MatrixXd mix_b = perturbed(rng, Eigen::MatrixXd::Identity(3, 3), 0.9);
  const SubjectData sa = make_subject(rng, "a", mix_a, 10);
  const SubjectData sb = make_subject(rng, "b", mix_b, 10);
  std::vector<SubjectBundle> sources{train_bundle(sa, 1), train_bundle(sb, 2)};

  const Prediction vote =
      weighted_vote_predict(sa.bundle, 0, sources[0].subject_mean, sources);
  const FeatureBundle recentered = recenter_bundle(
      sa.bundle, sources[0].subject_mean, sources[0].subject_mean);
  const Prediction own = ensemble_predict(sources[0].model, recentered, 0);
  CHECK((vote.probabilities - own.probabilities).norm() < 1e-6);
}

TEST_CASE("weighted vote of identical sources returns their probabilities") {
  Rng rng(641);
  const Eigen::MatrixXd mix = perturbed(rng, Eigen::MatrixXd::Identity(3, 3), 0.3);
  const SubjectData s = make_subject(rng, "s", mix, 10);
  const SubjectBundle b = train_bundle(s, 4);
  std::vector<SubjectBundle> twice{b, b};

  const SpdMatrix target_mean = random_spd(rng, 3);
  const Prediction vote = weighted_vote_predict(s.bundle, 1, target_mean, twice);
  const FeatureBundle recentered =
      recenter_bundle(s.bundle, b.subject_mean, target_mean);
  const Prediction single = ensemble_predict(b.model, recentered, 1);
  CHECK((vote.probabilities - single.probabilities).norm() < 1e-12);
  CHECK(vote.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weighted vote stays inside the convex hull of source probabilities") {
  Rng rng(643);
  std::vector<SubjectBundle> sources;
  std::vector<SubjectData> data;
  for (int i = 0; i < 3; ++i) {
    const Eigen::MatrixXd mix =
        perturbed(rng, Eigen::MatrixXd::Identity(3, 3), 0.3 + 0.2 * i);
    data.push_back(make_subject(rng, std::to_string(i), mix, 8));
    sources.push_back(train_bundle(data.back(), 30 + i));
  }
  const SubjectData target =
      make_subject(rng, "t", perturbed(rng, Eigen::MatrixXd::Identity(3, 3), 0.4), 8);
  const SpdMatrix target_mean =
      subject_mean(target.bundle.at(Estimator::Cov), MetricKind::Airm);

  for (int trial = 0; trial < 4; ++trial) {
    const Prediction vote =
        weighted_vote_predict(target.bundle, trial, target_mean, sources);
    Eigen::Vector2d lo(1.0, 1.0), hi(0.0, 0.0);
    for (const SubjectBundle& s : sources) {
      const FeatureBundle recentered =
          recenter_bundle(target.bundle, s.subject_mean, target_mean);
      const Prediction p = ensemble_predict(s.model, recentered, trial);
      lo = lo.cwiseMin(p.probabilities);
      hi = hi.cwiseMax(p.probabilities);
    }
    for (int c = 0; c < 2; ++c) {
      CHECK(vote.probabilities(c) >= lo(c) - 1e-12);
      CHECK(vote.probabilities(c) <= hi(c) + 1e-12);
    }
  }
}

TEST_CASE("leave_one_subject_out pairs clones and reports full grids") {
  Rng rng(653);
  const int n = 4;
  std::vector<SubjectData> subjects;
  for (int pair = 0; pair < 2; ++pair) {
    const Eigen::MatrixXd base =
        perturbed(rng, Eigen::MatrixXd::Identity(n, n), 0.45);
    subjects.push_back(
        make_subject(rng, "p" + std::to_string(pair) + "a", base, 15));
    subjects.push_back(make_subject(rng, "p" + std::to_string(pair) + "b",
                                    perturbed(rng, base, 0.02), 15));
  }
  EnsembleConfig cfg;
  cfg.seed = 3;
  const LosoReport report = leave_one_subject_out(subjects, cfg);

  CHECK(report.subject_ids.size() == 4);
  CHECK(report.kappa_grid.rows() == 4);
  CHECK(report.per_target.size() == 4);

  // Distance grid: symmetric with zero diagonal.
  CHECK((report.distance_grid - report.distance_grid.transpose()).norm() < 1e-8);
  for (int i = 0; i < 4; ++i) CHECK(report.distance_grid(i, i) == 0.0);

  // Every target selects its clone and decodes it well.
  const std::vector<int> clone{1, 0, 3, 2};
  for (int t = 0; t < 4; ++t) {
    CHECK(report.selected_source[t] == clone[t]);
    CHECK(report.per_target[t].kappa_mean >= 0.8);
  }

  CHECK_THROWS_AS(
      leave_one_subject_out(std::span<const SubjectData>(subjects.data(), 1), cfg),
      InvalidInput);
}
