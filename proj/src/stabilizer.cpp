#include "myopass/stabilizer.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "myopass/errors.hpp"
#include "myopass/seeding.hpp"

namespace myopass {

ForceFieldSpec ForceFieldSpec::negative_damping(double shortage) {
  ForceFieldSpec spec;
  spec.kind = Kind::kNegativeDamping;
  spec.damping = -shortage;
  return spec;
}

ForceFieldSpec ForceFieldSpec::delayed_spring(double gain, double delay) {
  ForceFieldSpec spec;
  spec.kind = Kind::kDelayedSpring;
  spec.damping = 0.0;
  spec.spring_gain = gain;
  spec.delay = delay;
  return spec;
}

double ForceFieldSpec::nominal_sop(double frequency) const {
  if (kind == Kind::kNegativeDamping) return std::max(0.0, -damping);
  const double w = 2.0 * std::numbers::pi * frequency;
  return std::max(0.0, spring_gain * std::sin(w * delay) / w);
}

double Scenario::pct_for_lookup() const {
  return std::isnan(lookup_pct_mvc) ? activation.target : lookup_pct_mvc;
}

BudgetedPassivityController::BudgetedPassivityController(double eop_budget,
                                                         double deadband)
    : budget_(eop_budget), deadband_(deadband) {
  if (!(eop_budget >= 0.0)) throw DomainError("EoP budget must be non-negative");
}

double BudgetedPassivityController::damping(double field_force, double velocity,
                                            double dt) {
  const double speed_sq = velocity * velocity;
  field_energy_ += field_force * velocity * dt;
  budget_energy_ += budget_ * speed_sq * dt;
  const double w = field_energy_ + budget_energy_ + injected_;
  if (w >= 0.0 || std::abs(velocity) <= deadband_) return 0.0;
  const double alpha = -w / (speed_sq * dt);
  injected_ += alpha * speed_sq * dt;
  return alpha;
}

double PlainTdpaController::damping(double field_force, double velocity,
                                    double dt) {
  const double power = field_force * velocity;
  if (power > 0.0) {
    energy_in_ += power * dt;
  } else {
    energy_out_ -= power * dt;
  }
  const double observed = energy_in_ - energy_out_ + dissipated_;
  if (observed >= 0.0 || std::abs(velocity) <= deadband_) return 0.0;
  const double alpha = -observed / (velocity * velocity * dt);
  dissipated_ += alpha * velocity * velocity * dt;
  return alpha;
}

InterconnectionResult run_interconnection_with(const Scenario& scenario,
                                               DampingController& controller,
                                               double eop_budget) {
  const LimbParams& limb = scenario.limb;
  const PerturbationSpec& spec = scenario.perturbation;
  limb.validate();
  spec.validate();
  if (!(scenario.rate >= 1000.0)) {
    throw DomainError("interconnection rate must be at least 1 kHz");
  }
  if (!(spec.amplitude > 0.0)) {
    throw DomainError("interconnection needs a positive perturbation amplitude");
  }
  const double dt = 1.0 / scenario.rate;
  const double stiffness_total = scenario.servo.stiffness + limb.stiffness +
                                 std::abs(scenario.field.spring_gain);
  const double stiff_step = dt * std::sqrt(stiffness_total / limb.mass);
  if (stiff_step >= 1.0) {
    std::ostringstream msg;
    msg << "step " << dt << " s too large for the servo/limb stiffness (omega*dt = "
        << stiff_step << ")";
    throw IntegrationError(msg.str());
  }

  const auto n = static_cast<std::size_t>(std::round(spec.duration * scenario.rate)) + 1;
  const int dir = spec.direction_index;
  const double g = limb.direction_gain[static_cast<std::size_t>(dir)];
  const double base_damping = g * limb.base_damping;
  const std::vector<double> activation = simulate_activation(
      scenario.activation, n, scenario.rate, derive_seed(scenario.seed, 0x57Au));
  const auto delay_steps = static_cast<std::size_t>(
      std::lround(std::max(0.0, scenario.field.delay) * scenario.rate));
  const double speed_limit = scenario.unbounded_factor * spec.amplitude;

  InterconnectionResult out;
  out.eop_budget = eop_budget;
  out.nominal_sop = scenario.field.nominal_sop(spec.frequency);
  for (auto* v : {&out.time, &out.position, &out.velocity, &out.field_force,
                  &out.limb_force, &out.damping}) {
    v->reserve(n);
  }

  double x = 0.0, v = 0.0, fm = 0.0;
  double e_field = 0.0, e_budget = 0.0, e_limb = 0.0;
  out.min_observed = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    double field_force = 0.0;
    if (scenario.field.kind == ForceFieldSpec::Kind::kNegativeDamping) {
      field_force = scenario.field.damping * v;
    } else {
      const double delayed = k >= delay_steps ? out.position[k - delay_steps] : 0.0;
      field_force = scenario.field.spring_gain * (delay_steps == 0 ? x : delayed);
    }
    const double alpha = controller.damping(field_force, v, dt);
    const double limb_force = base_damping * v + limb.stiffness * x + fm;

    out.time.push_back(t);
    out.position.push_back(x);
    out.velocity.push_back(v);
    out.field_force.push_back(field_force);
    out.limb_force.push_back(limb_force);
    out.damping.push_back(alpha);

    e_field += field_force * v * dt;
    e_budget += eop_budget * v * v * dt;
    e_limb += limb_force * v * dt;
    const double injected = controller.injected();
    const double observed = e_field + e_budget + injected;
    out.field_ledger.time.push_back(t);
    out.field_ledger.energy.push_back(e_field);
    out.budget_ledger.time.push_back(t);
    out.budget_ledger.energy.push_back(e_budget);
    out.injected_ledger.time.push_back(t);
    out.injected_ledger.energy.push_back(injected);
    out.limb_ledger.time.push_back(t);
    out.limb_ledger.energy.push_back(e_limb);
    out.observed_ledger.time.push_back(t);
    out.observed_ledger.energy.push_back(observed);
    out.min_observed = std::min(out.min_observed, observed);
    out.max_speed = std::max(out.max_speed, std::abs(v));

    if (std::abs(v) > speed_limit) {
      out.bounded = false;
      break;
    }
    if (k + 1 == n) break;

    const AxisKinematics ref = perturbation_kinematics(spec, t);
    const double servo_force = scenario.servo.stiffness * (ref.position - x) +
                               scenario.servo.damping * (ref.velocity - v);
    const double accel =
        (servo_force - limb_force - field_force - alpha * v) / limb.mass;
    const double v_next = v + dt * accel;
    const double x_next = x + dt * v_next;
    fm = maxwell_step(fm, v, v_next, limb.maxwell_stiffness,
                      limb.maxwell_damping(dir, activation[k]), dt);
    v = v_next;
    x = x_next;
    if (!std::isfinite(x) || !std::isfinite(v) || !std::isfinite(fm)) {
      std::ostringstream msg;
      msg << "co-simulation diverged numerically at t=" << t << " s";
      throw IntegrationError(msg.str());
    }
  }
  out.injected_dissipation = controller.injected();
  return out;
}

InterconnectionResult run_interconnection(const Scenario& scenario,
                                          double eop_budget) {
  BudgetedPassivityController controller(eop_budget, scenario.velocity_deadband);
  return run_interconnection_with(scenario, controller, eop_budget);
}

double map_budget(const Scenario& scenario, const GmpMap& map) {
  const double predicted = lookup(map, scenario.perturbation.direction_index,
                                  scenario.pct_for_lookup(),
                                  scenario.perturbation.frequency);
  return scenario.safety_factor * std::max(0.0, predicted);
}

InterconnectionResult run_interconnection(const Scenario& scenario,
                                          const GmpMap* map) {
  const double budget = map != nullptr ? map_budget(scenario, *map) : 0.0;
  return run_interconnection(scenario, budget);
}

DissipationSavings dissipation_savings(const InterconnectionResult& with_map,
                                       const InterconnectionResult& without_map) {
  if (!with_map.bounded || !without_map.bounded) {
    throw InvalidComparisonError("dissipation comparison needs two bounded runs");
  }
  DissipationSavings savings;
  const double with = with_map.injected_dissipation;
  const double without = without_map.injected_dissipation;
  if (without > 0.0) {
    savings.ratio = with / without;
  } else {
    savings.ratio = with > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }
  savings.joules_saved = without - with;
  savings.fraction_saved = 1.0 - savings.ratio;
  return savings;
}

}  // namespace myopass
