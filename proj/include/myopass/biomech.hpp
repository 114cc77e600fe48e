#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "myopass/condition.hpp"
#include "myopass/emg.hpp"
#include "myopass/signals.hpp"

namespace myopass {

/// Synthetic limb along one perturbation axis: inertia, a direction-scaled
/// Kelvin-Voigt element (damper b0, spring k) and a Maxwell branch (spring
/// k_m in series with an activation-dependent damper c0 + c1 * a).
struct LimbParams {
  double mass = 1.2;                    // kg
  double base_damping = 8.0;            // b0, N s/m
  double stiffness = 250.0;             // k, N/m
  double maxwell_stiffness = 1500.0;    // k_m, N/m
  double maxwell_damping_base = 12.0;   // c0, N s/m
  double maxwell_damping_gain = 30.0;   // c1, N s/m per unit activation
  std::array<double, kDirections> direction_gain = default_direction_gains();

  /// 1 + 0.3 cos(2 (theta - 0.3)): an ellipse-like anisotropy.
  static std::array<double, kDirections> default_direction_gains();

  /// Throws DomainError unless every parameter is positive. The Maxwell
  /// damper terms may be zero, which removes the branch.
  void validate() const;

  /// Total Maxwell damping g_i * (c0 + c1 * a).
  double maxwell_damping(int direction, double activation) const;
};

struct PerturbationSpec {
  double frequency = 1.0;    // Hz
  double amplitude = 0.02;   // m
  int direction_index = 0;   // 0..7, 45 degree steps
  double duration = 10.0;    // s
  double ramp_time = 1.0;    // s of raised-cosine amplitude fade-in

  void validate() const;
};

struct ActivationProfile {
  double target = 0.05;              // activation fraction in [0, 1]
  double tracking_noise = 0.03;      // std-dev of multiplicative noise
  double rise_time = 0.3;            // s, first-order lag time constant
  double noise_correlation = 0.05;   // s

  void validate() const;
};

struct TrialCondition {
  int direction_index = 0;
  ActivationLevel activation = ActivationLevel::kRelaxed;
  FrequencyBand band = FrequencyBand::kLow;
};

struct TrialRecord {
  TrialCondition condition;
  SampledSignal force;       // 2 channels (fx, fy), N
  SampledSignal velocity;    // 2 channels (vx, vy), m/s
  SampledSignal emg;         // 4 channels at the EMG rate, mV (may be empty)
  SampledSignal activation;  // 1 channel at the robot rate
  PerturbationSpec spec;
  int subject_id = 0;
  double initial_energy = 0.0;  // J stored in the limb at t = 0
};

struct TrialOptions {
  double rate = 1000.0;  // robot sample rate, Hz
  double emg_rate = kDefaultEmgRate;
  bool synthesize_emg = true;
  std::array<double, kEmgChannels> emg_mvc_rms{1.0, 1.0, 1.0, 1.0};  // mV
  /// White force-sensor noise per axis (N); zero keeps trials noise free.
  double force_noise_std = 0.0;
  ActivationLevel activation_label = ActivationLevel::kRelaxed;
  FrequencyBand band_label = FrequencyBand::kLow;
  int subject_id = 0;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Unit vector (cos(pi i / 4), sin(pi i / 4)). Throws DomainError for an
/// index outside 0..7.
Vec2 perturbation_direction(int direction_index);

/// Handle position, velocity and acceleration along the perturbation axis.
struct AxisKinematics {
  double position = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
};
AxisKinematics perturbation_kinematics(const PerturbationSpec& spec, double t);

/// Steady-state dissipative admittance of the limb, i.e. its EoP at one
/// frequency: g b0 + g b_m / (1 + (g b_m omega / k_m)^2), b_m = c0 + c1 a.
double analytic_eop(const LimbParams& params, int direction_index,
                    double activation, double frequency);

/// Activation trajectory sampled at `rate`: first-order lag from zero towards
/// the target (exact exponential update) times (1 + noise), where the noise
/// is a unit-variance Ornstein-Uhlenbeck process scaled by tracking_noise.
/// Clamped to [0, 1].
std::vector<double> simulate_activation(const ActivationProfile& profile,
                                        std::size_t samples, double rate,
                                        std::uint64_t seed);

/// One Maxwell-branch update over a step of length dt: exact solution of
/// dfm/dt = k_m (v - fm / c) with v linear between v0 and v1.
double maxwell_step(double fm, double v0, double v1, double k_m, double c,
                    double dt);

/// Runs one perturbation trial. Requires rate >= 20 * frequency.
/// Throws DomainError on invalid inputs, IntegrationError if the state
/// leaves the finite range.
TrialRecord simulate_trial(const LimbParams& params, const PerturbationSpec& spec,
                           const ActivationProfile& activation,
                           std::uint64_t seed, const TrialOptions& options = {});

/// A synthetic participant.
struct Subject {
  int id = 1;
  LimbParams limb;
  std::array<double, kEmgChannels> emg_mvc_rms{1.0, 1.0, 1.0, 1.0};  // mV
};

/// `count` subjects whose limb parameters (including the direction gains)
/// are the defaults scaled by independent U(1 - jitter, 1 + jitter) factors,
/// with EMG amplitudes drawn from U(0.5, 1.5) mV. Seed deterministic.
std::vector<Subject> make_cohort(int count, double jitter, std::uint64_t seed,
                                 const LimbParams& base = {});

}  // namespace myopass
