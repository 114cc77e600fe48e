#include "myopass/passivity.hpp"

#include <cmath>
#include <limits>

#include "myopass/errors.hpp"

namespace myopass {

EnergyLedger energy_ledger(const SampledSignal& u, const SampledSignal& y,
                           double initial_energy) {
  if (u.sample_rate() != y.sample_rate() || u.size() != y.size() ||
      u.channel_count() != y.channel_count() ||
      std::abs(u.start_time() - y.start_time()) * u.sample_rate() > 1e-6) {
    throw AlignmentError("energy ledger needs aligned port signals");
  }
  EnergyLedger ledger;
  ledger.initial_energy = initial_energy;
  const std::size_t n = u.size();
  ledger.time.resize(n);
  ledger.energy.resize(n);
  const double half_dt = 0.5 * u.dt();
  double previous_power = 0.0;
  double energy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double power = 0.0;
    for (std::size_t c = 0; c < u.channel_count(); ++c) {
      power += u.channel(c)[k] * y.channel(c)[k];
    }
    if (k > 0) energy += half_dt * (previous_power + power);
    ledger.time[k] = u.time_at(k);
    ledger.energy[k] = energy;
    previous_power = power;
  }
  return ledger;
}

PassivityVerdict is_passive(const EnergyLedger& ledger, double tolerance) {
  PassivityVerdict verdict;
  verdict.min_total = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ledger.size(); ++k) {
    const double total = ledger.total(k);
    verdict.min_total = std::min(verdict.min_total, total);
    if (total < -tolerance && !verdict.first_violation_time) {
      verdict.passive = false;
      verdict.first_violation_time = ledger.time[k];
      verdict.deficit = -total;
    }
  }
  if (ledger.size() == 0) verdict.min_total = ledger.initial_energy;
  return verdict;
}

EnergyLedger interconnection_energy(std::span<const EnergyLedger> ledgers) {
  if (ledgers.empty()) throw DomainError("interconnection needs at least one ledger");
  EnergyLedger total = ledgers.front();
  for (std::size_t i = 1; i < ledgers.size(); ++i) {
    const EnergyLedger& other = ledgers[i];
    if (other.size() != total.size()) {
      throw AlignmentError("interconnected ledgers have different lengths");
    }
    for (std::size_t k = 0; k < total.size(); ++k) {
      if (std::abs(other.time[k] - total.time[k]) > 1e-9) {
        throw AlignmentError("interconnected ledgers use different time grids");
      }
      total.energy[k] += other.energy[k];
    }
    total.initial_energy += other.initial_energy;
  }
  return total;
}

Window snap_to_periods(const Window& w, double frequency) {
  if (!(frequency > 0.0)) throw DomainError("frequency must be positive");
  const double period = 1.0 / frequency;
  // Half a microsecond of slack so a window of exactly N periods keeps N.
  const double periods = std::floor(w.length() / period + 5e-7);
  if (periods < 1.0) {
    throw RangeError("window is shorter than one perturbation period");
  }
  return {w.t_end - periods * period, w.t_end};
}

EopRatio eop_ratio(const SampledSignal& force, const SampledSignal& velocity,
                   const Window& w, double threshold) {
  EopRatio ratio;
  ratio.denominator = l2_norm_integral(velocity, w);
  if (!(ratio.denominator > threshold)) {
    throw DegenerateError(
        "velocity energy in the analysis window is too small for an EoP estimate");
  }
  ratio.numerator = inner_product_integral(force, velocity, w);
  return ratio;
}

namespace {

EopEstimate estimate_impl(const TrialRecord& trial, const Window& w,
                          const MvcCalibration* cal, const EopOptions& options) {
  const Window window =
      options.snap_to_periods ? snap_to_periods(w, trial.spec.frequency) : w;
  EopRatio ratio;
  if (options.project_on_axis) {
    const Vec2 axis = perturbation_direction(trial.condition.direction_index);
    const SampledSignal f(trial.force.sample_rate(), trial.force.start_time(),
                          {"f"}, {project(trial.force, axis.x, axis.y)}, "N");
    const SampledSignal v(trial.velocity.sample_rate(),
                          trial.velocity.start_time(), {"v"},
                          {project(trial.velocity, axis.x, axis.y)}, "m/s");
    ratio = eop_ratio(f, v, window, options.degenerate_threshold);
  } else {
    ratio = eop_ratio(trial.force, trial.velocity, window,
                      options.degenerate_threshold);
  }

  EopEstimate estimate;
  estimate.xi = ratio.xi();
  estimate.numerator = ratio.numerator;
  estimate.denominator = ratio.denominator;
  estimate.direction_index = trial.condition.direction_index;
  estimate.activation = trial.condition.activation;
  estimate.band = trial.condition.band;
  estimate.frequency = trial.spec.frequency;
  estimate.window = window;
  estimate.subject_id = trial.subject_id;
  estimate.mean_pct_mvc = std::numeric_limits<double>::quiet_NaN();
  if (cal != nullptr) {
    estimate.mean_pct_mvc = pct_mvc(trial.emg, *cal, window, options.envelope,
                                    options.feedback_channels)
                                .pooled;
  }
  return estimate;
}

}  // namespace

EopEstimate estimate_eop(const TrialRecord& trial, const Window& w,
                         const EopOptions& options) {
  return estimate_impl(trial, w, nullptr, options);
}

EopEstimate estimate_eop(const TrialRecord& trial, const Window& w,
                         const MvcCalibration& cal, const EopOptions& options) {
  return estimate_impl(trial, w, &cal, options);
}

PassivityClass classify(double xi) {
  if (!std::isfinite(xi)) throw DomainError("passivity coefficient must be finite");
  PassivityClass result;
  if (xi >= 0.0) {
    result.kind = PassivityKind::kOutputStrictlyPassive;
    result.excess = xi;
    result.l2_gain = xi > 0.0 ? 1.0 / xi : std::numeric_limits<double>::infinity();
  } else {
    result.kind = PassivityKind::kOutputNonPassive;
    result.shortage = -xi;
  }
  return result;
}

}  // namespace myopass
