#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "myopass/biomech.hpp"
#include "myopass/errors.hpp"
#include "myopass/passivity.hpp"

using namespace myopass;

namespace {

constexpr double kPi = std::numbers::pi;

LimbParams kelvin_voigt(double damping) {
  LimbParams p;
  p.base_damping = damping;
  p.maxwell_damping_base = 0.0;
  p.maxwell_damping_gain = 0.0;
  p.direction_gain.fill(1.0);
  return p;
}

ActivationProfile steady(double target) {
  ActivationProfile a;
  a.target = target;
  a.tracking_noise = 0.0;
  return a;
}

TrialOptions no_emg() {
  TrialOptions o;
  o.synthesize_emg = false;
  return o;
}

double simulated_eop(const LimbParams& p, int dir, double activation, double f,
                     double rate = 1000.0) {
  PerturbationSpec spec;
  spec.frequency = f;
  spec.direction_index = dir;
  auto options = no_emg();
  options.rate = rate;
  const auto trial = simulate_trial(p, spec, steady(activation), 1, options);
  return estimate_eop(trial, {5.0, 10.0}).xi;
}

}  // namespace

TEST(PerturbationDirection, CardinalVectors) {
  EXPECT_DOUBLE_EQ(perturbation_direction(0).x, 1.0);
  EXPECT_DOUBLE_EQ(perturbation_direction(0).y, 0.0);
  EXPECT_DOUBLE_EQ(perturbation_direction(2).x, 0.0);
  EXPECT_DOUBLE_EQ(perturbation_direction(2).y, 1.0);
  EXPECT_NEAR(perturbation_direction(1).x, std::sqrt(2.0) / 2.0, 1e-12);
  EXPECT_NEAR(perturbation_direction(1).y, std::sqrt(2.0) / 2.0, 1e-12);
  for (int i = 0; i < kDirections; ++i) {
    const auto d = perturbation_direction(i);
    EXPECT_NEAR(d.x, std::cos(kPi * i / 4.0), 1e-15);
    EXPECT_NEAR(d.y, std::sin(kPi * i / 4.0), 1e-15);
  }
  EXPECT_THROW(perturbation_direction(8), DomainError);
  EXPECT_THROW(perturbation_direction(-1), DomainError);
}

TEST(AnalyticEop, MaxwellBranchRemoved) {
  LimbParams p = kelvin_voigt(8.0);
  p.direction_gain[3] = 1.25;
  EXPECT_EQ(analytic_eop(p, 3, 0.4, 1.0), 1.25 * 8.0);
}

TEST(AnalyticEop, HighFrequencyLimit) {
  LimbParams p;
  const double g = p.direction_gain[0];
  EXPECT_NEAR(analytic_eop(p, 0, 0.4, 1e6), g * p.base_damping, 1e-6);
}

TEST(AnalyticEop, WorkedExample) {
  LimbParams p;
  p.base_damping = 10.0;
  p.maxwell_damping_base = 5.0;
  p.maxwell_damping_gain = 20.0;
  p.maxwell_stiffness = 2000.0;
  p.direction_gain.fill(1.0);
  const double expected = 10.0 + 13.0 / (1.0 + std::pow(13.0 * 2.0 * kPi / 2000.0, 2));
  EXPECT_NEAR(analytic_eop(p, 0, 0.4, 1.0), expected, 1e-12);
  EXPECT_NEAR(expected, 22.978, 1e-3);
  EXPECT_NEAR(simulated_eop(p, 0, 0.4, 1.0), expected, 0.01 * expected);
}

TEST(SimulateTrial, KelvinVoigtRecoversDamping) {
  for (int dir : {0, 3, 6}) {
    const double xi = simulated_eop(kelvin_voigt(15.0), dir, 0.0, 1.0);
    EXPECT_NEAR(xi, 15.0, 15.0e-3) << dir;
  }
}

TEST(SimulateTrial, ShapesAndLabels) {
  PerturbationSpec spec;
  spec.direction_index = 2;
  TrialOptions options;
  options.subject_id = 4;
  options.activation_label = ActivationLevel::kStiff;
  options.band_label = FrequencyBand::kHigh;
  spec.frequency = 3.0;
  const auto trial = simulate_trial(LimbParams{}, spec, ActivationProfile{0.4}, 11, options);
  EXPECT_EQ(trial.force.size(), 10001u);
  EXPECT_EQ(trial.velocity.size(), 10001u);
  EXPECT_EQ(trial.force.channel_count(), 2u);
  EXPECT_EQ(trial.emg.channel_count(), kEmgChannels);
  EXPECT_DOUBLE_EQ(trial.emg.sample_rate(), kDefaultEmgRate);
  EXPECT_EQ(trial.emg.size(), 21481u);
  EXPECT_EQ(trial.subject_id, 4);
  EXPECT_EQ(trial.condition.direction_index, 2);
  EXPECT_EQ(trial.condition.activation, ActivationLevel::kStiff);
  EXPECT_EQ(trial.condition.band, FrequencyBand::kHigh);
  EXPECT_EQ(trial.initial_energy, 0.0);
  // Motion is along +y only.
  for (double v : trial.velocity.channel(0)) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(SimulateTrial, Deterministic) {
  const PerturbationSpec spec;
  const auto a = simulate_trial(LimbParams{}, spec, ActivationProfile{0.4}, 5);
  const auto b = simulate_trial(LimbParams{}, spec, ActivationProfile{0.4}, 5);
  for (std::size_t k = 0; k < a.force.size(); k += 97) {
    ASSERT_EQ(a.force.channel(0)[k], b.force.channel(0)[k]);
  }
  for (std::size_t k = 0; k < a.emg.size(); k += 97) {
    ASSERT_EQ(a.emg.channel(1)[k], b.emg.channel(1)[k]);
  }
}

TEST(SimulateTrial, ZeroAmplitudeIsUnusable) {
  PerturbationSpec spec;
  spec.amplitude = 0.0;
  const auto trial = simulate_trial(LimbParams{}, spec, steady(0.05), 1, no_emg());
  for (double v : trial.velocity.channel(0)) ASSERT_EQ(v, 0.0);
  EXPECT_THROW(estimate_eop(trial, {5.0, 10.0}), DegenerateError);
}

TEST(SimulateTrial, RejectsCoarseRate) {
  PerturbationSpec spec;
  spec.frequency = 3.0;
  auto options = no_emg();
  options.rate = 50.0;
  EXPECT_THROW(simulate_trial(LimbParams{}, spec, steady(0.05), 1, options), DomainError);
}

TEST(SimulateTrial, InvalidParametersThrow) {
  LimbParams p;
  p.mass = -1.0;
  EXPECT_THROW(simulate_trial(p, PerturbationSpec{}, steady(0.05), 1, no_emg()), DomainError);
  EXPECT_THROW(simulate_trial(LimbParams{}, PerturbationSpec{}, steady(1.5), 1, no_emg()),
               DomainError);
}

TEST(SimulateTrial, LimbIsPassive) {
  for (int dir = 0; dir < kDirections; dir += 3) {
    PerturbationSpec spec;
    spec.direction_index = dir;
    spec.frequency = dir == 3 ? 3.0 : 1.0;
    const auto trial = simulate_trial(LimbParams{}, spec, ActivationProfile{0.4}, 3, no_emg());
    const auto ledger = energy_ledger(trial.force, trial.velocity, trial.initial_energy);
    EXPECT_TRUE(is_passive(ledger).passive) << dir;
  }
}

TEST(SimulateTrial, ActivationRaisesEop) {
  const LimbParams p;
  EXPECT_GT(simulated_eop(p, 0, 0.4, 1.0), simulated_eop(p, 0, 0.0, 1.0));
}

TEST(SimulateTrial, MatchesAnalyticEopAtTwoKilohertz) {
  const LimbParams p;
  for (double f : {1.0, 3.0}) {
    for (double a : {0.05, 0.4}) {
      const double expected = analytic_eop(p, 5, a, f);
      EXPECT_NEAR(simulated_eop(p, 5, a, f, 2000.0), expected, 0.01 * expected) << f << " " << a;
    }
  }
}

TEST(DefaultModel, QualitativeOrdering) {
  const LimbParams p;
  for (int dir = 0; dir < kDirections; ++dir) {
    for (double a : {0.05, 0.4}) {
      EXPECT_GT(analytic_eop(p, dir, a, 1.0), analytic_eop(p, dir, a, 3.0));
    }
    double last = -1.0;
    for (double a = 0.0; a <= 1.0; a += 0.05) {
      const double xi = analytic_eop(p, dir, a, 3.0);
      EXPECT_GT(xi, last);
      last = xi;
    }
    const double slope_low = analytic_eop(p, dir, 0.4, 1.0) - analytic_eop(p, dir, 0.05, 1.0);
    const double slope_high = analytic_eop(p, dir, 0.4, 3.0) - analytic_eop(p, dir, 0.05, 3.0);
    EXPECT_GT(slope_low, slope_high);
  }
}

TEST(MaxwellStep, ExactForConstantVelocity) {
  // Steady state of dfm/dt = k (v - fm / c) is fm = c v.
  double fm = 0.0;
  for (int i = 0; i < 10000; ++i) fm = maxwell_step(fm, 0.1, 0.1, 1500.0, 20.0, 1e-3);
  EXPECT_NEAR(fm, 2.0, 1e-9);
  // One step from rest: fm = c v (1 - exp(-k dt / c)).
  EXPECT_NEAR(maxwell_step(0.0, 0.1, 0.1, 1500.0, 20.0, 1e-3),
              2.0 * (1.0 - std::exp(-1500.0 * 1e-3 / 20.0)), 1e-14);
  // Without a damper there is no force.
  EXPECT_EQ(maxwell_step(1.0, 0.1, 0.1, 1500.0, 0.0, 1e-3), 0.0);
}

TEST(Activation, StaysInRangeAndConverges) {
  ActivationProfile prof;
  prof.target = 0.4;
  const auto a = simulate_activation(prof, 10001, 1000.0, 9);
  double mean = 0.0;
  for (std::size_t k = 5000; k < a.size(); ++k) mean += a[k];
  mean /= 5001.0;
  for (double v : a) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_NEAR(mean, 0.4, 0.02);
  EXPECT_EQ(a[0], 0.0);
}

TEST(Cohort, JitterWithinBoundsAndDeterministic) {
  const auto cohort = make_cohort(5, 0.2, 2024);
  const auto again = make_cohort(5, 0.2, 2024);
  const LimbParams base;
  ASSERT_EQ(cohort.size(), 5u);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    EXPECT_EQ(cohort[i].id, static_cast<int>(i) + 1);
    const auto& l = cohort[i].limb;
    EXPECT_EQ(l.mass, again[i].limb.mass);
    EXPECT_GE(l.mass, 0.8 * base.mass);
    EXPECT_LE(l.mass, 1.2 * base.mass);
    EXPECT_GE(l.maxwell_damping_gain, 0.8 * base.maxwell_damping_gain);
    EXPECT_LE(l.maxwell_damping_gain, 1.2 * base.maxwell_damping_gain);
    for (int d = 0; d < kDirections; ++d) {
      EXPECT_GE(l.direction_gain[d], 0.8 * base.direction_gain[d]);
      EXPECT_LE(l.direction_gain[d], 1.2 * base.direction_gain[d]);
    }
    for (double m : cohort[i].emg_mvc_rms) {
      EXPECT_GE(m, 0.5);
      EXPECT_LE(m, 1.5);
    }
  }
  EXPECT_NE(cohort[0].limb.mass, cohort[1].limb.mass);
  EXPECT_THROW(make_cohort(0, 0.2, 1), DomainError);
}

TEST(Cohort, EveryJitteredSubjectKeepsQualitativeOrdering) {
  for (const auto& s : make_cohort(5, 0.2, 2024)) {
    for (int dir = 0; dir < kDirections; ++dir) {
      const auto& p = s.limb;
      EXPECT_GT(analytic_eop(p, dir, 0.05, 1.0), analytic_eop(p, dir, 0.05, 3.0));
      EXPECT_GT(analytic_eop(p, dir, 0.4, 1.0), analytic_eop(p, dir, 0.4, 3.0));
      EXPECT_GT(analytic_eop(p, dir, 0.4, 1.0), analytic_eop(p, dir, 0.05, 1.0));
    }
  }
}
