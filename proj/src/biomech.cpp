#include "myopass/biomech.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "myopass/errors.hpp"
#include "myopass/seeding.hpp"

namespace myopass {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(name) + " must be positive");
  }
}

void require_direction(int direction_index) {
  if (direction_index < 0 || direction_index >= kDirections) {
    throw DomainError("direction index must be in 0..7, got " +
                      std::to_string(direction_index));
  }
}

}  // namespace

std::array<double, kDirections> LimbParams::default_direction_gains() {
  std::array<double, kDirections> gains{};
  for (int i = 0; i < kDirections; ++i) {
    const double theta = kPi * i / 4.0;
    gains[static_cast<std::size_t>(i)] = 1.0 + 0.3 * std::cos(2.0 * (theta - 0.3));
  }
  return gains;
}

void LimbParams::validate() const {
  require_positive(mass, "mass");
  require_positive(base_damping, "base damping");
  require_positive(stiffness, "stiffness");
  require_positive(maxwell_stiffness, "Maxwell stiffness");
  if (!(maxwell_damping_base >= 0.0) || !(maxwell_damping_gain >= 0.0)) {
    throw DomainError("Maxwell damping terms must be non-negative");
  }
  for (const double g : direction_gain) require_positive(g, "direction gain");
}

double LimbParams::maxwell_damping(int direction, double activation) const {
  require_direction(direction);
  return direction_gain[static_cast<std::size_t>(direction)] *
         (maxwell_damping_base + maxwell_damping_gain * activation);
}

void PerturbationSpec::validate() const {
  require_positive(frequency, "perturbation frequency");
  if (!(amplitude >= 0.0)) throw DomainError("amplitude must be non-negative");
  require_direction(direction_index);
  require_positive(duration, "perturbation duration");
  if (!(ramp_time >= 0.0) || ramp_time > duration) {
    throw DomainError("ramp time must lie in [0, duration]");
  }
}

void ActivationProfile::validate() const {
  if (!(target >= 0.0 && target <= 1.0)) {
    throw DomainError("activation target must lie in [0, 1]");
  }
  if (!(tracking_noise >= 0.0)) throw DomainError("tracking noise must be >= 0");
  require_positive(rise_time, "activation rise time");
  require_positive(noise_correlation, "noise correlation time");
}

Vec2 perturbation_direction(int direction_index) {
  require_direction(direction_index);
  // Exact values on the axes and diagonals.
  constexpr double h = std::numbers::sqrt2 / 2.0;
  static constexpr std::array<Vec2, kDirections> kUnit{
      Vec2{1.0, 0.0}, Vec2{h, h},   Vec2{0.0, 1.0},  Vec2{-h, h},
      Vec2{-1.0, 0.0}, Vec2{-h, -h}, Vec2{0.0, -1.0}, Vec2{h, -h}};
  return kUnit[static_cast<std::size_t>(direction_index)];
}

AxisKinematics perturbation_kinematics(const PerturbationSpec& spec, double t) {
  const double w = 2.0 * kPi * spec.frequency;
  double s = 1.0, ds = 0.0, dds = 0.0;
  if (spec.ramp_time > 0.0 && t < spec.ramp_time) {
    const double r = kPi / spec.ramp_time;
    s = 0.5 * (1.0 - std::cos(r * t));
    ds = 0.5 * r * std::sin(r * t);
    dds = 0.5 * r * r * std::cos(r * t);
  }
  const double sn = std::sin(w * t);
  const double cs = std::cos(w * t);
  const double a = spec.amplitude;
  return {a * s * sn, a * (ds * sn + s * w * cs),
          a * (dds * sn + 2.0 * ds * w * cs - s * w * w * sn)};
}

double analytic_eop(const LimbParams& params, int direction_index,
                    double activation, double frequency) {
  require_direction(direction_index);
  const double g = params.direction_gain[static_cast<std::size_t>(direction_index)];
  const double c = params.maxwell_damping(direction_index, activation);
  const double base = g * params.base_damping;
  if (c == 0.0) return base;
  const double ratio = c * 2.0 * kPi * frequency / params.maxwell_stiffness;
  return base + c / (1.0 + ratio * ratio);
}

std::vector<double> simulate_activation(const ActivationProfile& profile,
                                        std::size_t samples, double rate,
                                        std::uint64_t seed) {
  profile.validate();
  require_positive(rate, "activation rate");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double dt = 1.0 / rate;
  const double lag = std::exp(-dt / profile.rise_time);
  const double rho = std::exp(-dt / profile.noise_correlation);
  const double innovation = std::sqrt(1.0 - rho * rho);

  std::vector<double> out(samples);
  double level = 0.0;
  double noise = normal(rng);
  for (std::size_t k = 0; k < samples; ++k) {
    const double a = level * (1.0 + profile.tracking_noise * noise);
    out[k] = std::clamp(a, 0.0, 1.0);
    level = profile.target + (level - profile.target) * lag;
    noise = rho * noise + innovation * normal(rng);
  }
  return out;
}

double maxwell_step(double fm, double v0, double v1, double k_m, double c,
                    double dt) {
  if (c <= 0.0) return 0.0;
  const double lambda = k_m / c;
  const double x = lambda * dt;
  const double decay = std::exp(-x);
  const double one_minus = -std::expm1(-x);           // 1 - e^{-x}
  const double i0 = one_minus / lambda;               // int e^{-l(dt-s)} ds
  const double ramp = (one_minus - x * decay) / (lambda * lambda);
  const double i1 = dt * i0 - ramp;                   // int e^{-l(dt-s)} s ds
  return decay * fm + k_m * (v0 * i0 + (v1 - v0) / dt * i1);
}

TrialRecord simulate_trial(const LimbParams& params, const PerturbationSpec& spec,
                           const ActivationProfile& activation,
                           std::uint64_t seed, const TrialOptions& options) {
  params.validate();
  spec.validate();
  activation.validate();
  require_positive(options.rate, "robot rate");
  if (options.rate < 20.0 * spec.frequency) {
    throw DomainError("robot rate must be at least 20x the perturbation frequency");
  }

  const double rate = options.rate;
  const double dt = 1.0 / rate;
  const auto n = static_cast<std::size_t>(std::round(spec.duration * rate)) + 1;
  const int dir = spec.direction_index;
  const Vec2 axis = perturbation_direction(dir);
  const double g = params.direction_gain[static_cast<std::size_t>(dir)];
  const double damping = g * params.base_damping;

  const std::vector<double> a =
      simulate_activation(activation, n, rate, derive_seed(seed, 0xAC7u));

  std::vector<double> force(n);
  std::vector<double> velocity(n);
  double fm = 0.0;
  double v_prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const AxisKinematics kin = perturbation_kinematics(spec, t);
    if (k > 0) {
      const double c = params.maxwell_damping(dir, a[k - 1]);
      fm = maxwell_step(fm, v_prev, kin.velocity, params.maxwell_stiffness, c, dt);
    }
    force[k] = params.mass * kin.acceleration + damping * kin.velocity +
               params.stiffness * kin.position + fm;
    velocity[k] = kin.velocity;
    if (!std::isfinite(force[k])) {
      std::ostringstream msg;
      msg << "trial state became non-finite at t=" << t << " s (Maxwell force "
          << fm << " N, velocity " << kin.velocity << " m/s)";
      throw IntegrationError(msg.str());
    }
    v_prev = kin.velocity;
  }

  TrialRecord trial;
  trial.spec = spec;
  trial.subject_id = options.subject_id;
  trial.condition = {dir, options.activation_label, options.band_label};
  {
    const AxisKinematics start = perturbation_kinematics(spec, 0.0);
    trial.initial_energy = 0.5 * params.mass * start.velocity * start.velocity +
                           0.5 * params.stiffness * start.position * start.position;
  }

  SampledSignal f = scale_by_direction(force, rate, 0.0, axis.x, axis.y,
                                       {"fx", "fy"}, "N");
  if (options.force_noise_std > 0.0) {
    std::mt19937_64 rng(derive_seed(seed, 0xF0Cu));
    std::normal_distribution<double> noise(0.0, options.force_noise_std);
    std::vector<double> fx(f.channel(0).begin(), f.channel(0).end());
    std::vector<double> fy(f.channel(1).begin(), f.channel(1).end());
    for (std::size_t k = 0; k < n; ++k) {
      fx[k] += noise(rng);
      fy[k] += noise(rng);
    }
    f = SampledSignal(rate, 0.0, {"fx", "fy"}, {std::move(fx), std::move(fy)}, "N");
  }
  trial.force = std::move(f);
  trial.velocity = scale_by_direction(velocity, rate, 0.0, axis.x, axis.y,
                                      {"vx", "vy"}, "m/s");
  trial.activation = SampledSignal(rate, 0.0, {"activation"}, {a}, "fraction");

  if (options.synthesize_emg) {
    const auto emg_n =
        static_cast<std::size_t>(std::floor(spec.duration * options.emg_rate + 1e-9)) + 1;
    const SampledSignal a_emg =
        resample_linear(trial.activation, options.emg_rate, 0.0, emg_n);
    trial.emg = synthesize_emg(a_emg, options.emg_mvc_rms, derive_seed(seed, 0xE36u));
  }
  return trial;
}

std::vector<Subject> make_cohort(int count, double jitter, std::uint64_t seed,
                                 const LimbParams& base) {
  if (count < 1) throw DomainError("cohort needs at least one subject");
  if (!(jitter >= 0.0 && jitter < 1.0)) {
    throw DomainError("parameter jitter must lie in [0, 1)");
  }
  base.validate();
  std::vector<Subject> cohort;
  for (int id = 1; id <= count; ++id) {
    std::mt19937_64 rng(derive_seed(seed, 0xC0Fu, static_cast<std::uint64_t>(id)));
    std::uniform_real_distribution<double> scale(1.0 - jitter, 1.0 + jitter);
    std::uniform_real_distribution<double> amplitude(0.5, 1.5);
    Subject s;
    s.id = id;
    s.limb = base;
    s.limb.mass *= scale(rng);
    s.limb.base_damping *= scale(rng);
    s.limb.stiffness *= scale(rng);
    s.limb.maxwell_stiffness *= scale(rng);
    s.limb.maxwell_damping_base *= scale(rng);
    s.limb.maxwell_damping_gain *= scale(rng);
    for (double& gain : s.limb.direction_gain) gain *= scale(rng);
    for (double& m : s.emg_mvc_rms) m = amplitude(rng);
    cohort.push_back(s);
  }
  return cohort;
}

}  // namespace myopass
