#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "myopass/biomech.hpp"
#include "myopass/gmp.hpp"
#include "myopass/passivity.hpp"

namespace myopass {

/// Virtual force field rendered by the robot, in impedance convention: the
/// field's force opposes the handle and field_force * velocity is the power
/// flowing into the field.
struct ForceFieldSpec {
  enum class Kind { kNegativeDamping, kDelayedSpring };

  Kind kind = Kind::kNegativeDamping;
  double damping = -5.0;     // N s/m, used by kNegativeDamping
  double spring_gain = 0.0;  // N/m, used by kDelayedSpring
  double delay = 0.0;        // s, used by kDelayedSpring

  static ForceFieldSpec negative_damping(double shortage);
  static ForceFieldSpec delayed_spring(double gain, double delay);

  /// Shortage of passivity at `frequency`: max(0, -damping) for a damper,
  /// max(0, K sin(omega tau) / omega) for a delayed spring.
  double nominal_sop(double frequency) const;
};

/// Position servo through which the robot imposes the perturbation.
struct ServoGains {
  double stiffness = 20000.0;  // N/m
  double damping = 40.0;       // N s/m
};

struct Scenario {
  LimbParams limb;
  ForceFieldSpec field;
  PerturbationSpec perturbation;
  ActivationProfile activation{0.4};
  /// %MVC used for the map lookup; NaN means "use activation.target".
  double lookup_pct_mvc = std::numeric_limits<double>::quiet_NaN();
  ServoGains servo;
  double rate = 1000.0;
  double safety_factor = 0.8;
  double velocity_deadband = 1e-6;  // m/s
  /// The run is declared unbounded once |v| exceeds this multiple of the
  /// perturbation amplitude.
  double unbounded_factor = 1e3;
  std::uint64_t seed = 1;

  double pct_for_lookup() const;
};

/// Damping injection law evaluated once per control step.
class DampingController {
 public:
  virtual ~DampingController() = default;
  /// Injected damping alpha >= 0 for a step in which the field produces
  /// `field_force` at handle velocity `velocity`.
  virtual double damping(double field_force, double velocity, double dt) = 0;
  /// Cumulative energy dissipated by the injected damping (J).
  virtual double injected() const = 0;
};

/// One-step TDPA law on the budgeted ledger
///   W(t) = E_field(t) + integral (alpha + budget) |v|^2 dt,
/// injecting the smallest alpha that keeps W >= 0.
class BudgetedPassivityController final : public DampingController {
 public:
  BudgetedPassivityController(double eop_budget, double deadband);

  double damping(double field_force, double velocity, double dt) override;
  double injected() const override { return injected_; }
  double field_energy() const { return field_energy_; }
  double budget_energy() const { return budget_energy_; }
  double observed() const { return field_energy_ + budget_energy_ + injected_; }

 private:
  double budget_;
  double deadband_;
  double field_energy_ = 0.0;
  double budget_energy_ = 0.0;
  double injected_ = 0.0;
};

/// Classic passivity observer / controller with separate input and output
/// energy accumulators and no human budget.
class PlainTdpaController final : public DampingController {
 public:
  explicit PlainTdpaController(double deadband) : deadband_(deadband) {}

  double damping(double field_force, double velocity, double dt) override;
  double injected() const override { return dissipated_; }

 private:
  double deadband_;
  double energy_in_ = 0.0;
  double energy_out_ = 0.0;
  double dissipated_ = 0.0;
};

struct InterconnectionResult {
  std::vector<double> time;
  std::vector<double> position;     // m along the perturbation axis
  std::vector<double> velocity;     // m/s
  std::vector<double> field_force;  // N
  std::vector<double> limb_force;   // N
  std::vector<double> damping;      // alpha, N s/m

  EnergyLedger field_ledger;     // integral field_force * v
  EnergyLedger budget_ledger;    // integral budget * v^2
  EnergyLedger injected_ledger;  // integral alpha * v^2
  EnergyLedger limb_ledger;      // integral limb_force * v
  EnergyLedger observed_ledger;  // W(t)

  double eop_budget = 0.0;  // N s/m credited per unit |v|^2
  double nominal_sop = 0.0;
  double injected_dissipation = 0.0;  // J
  double min_observed = 0.0;          // J
  double max_speed = 0.0;             // m/s
  bool bounded = true;
};

/// Fixed-step co-simulation of limb, servo, field and `controller`. The
/// controller ledgers come from the controller itself, so a plain TDPA run
/// leaves budget_ledger at zero.
InterconnectionResult run_interconnection_with(const Scenario& scenario,
                                               DampingController& controller,
                                               double eop_budget = 0.0);

/// Budgeted run with an explicit budget in N s/m (already safety-scaled).
InterconnectionResult run_interconnection(const Scenario& scenario,
                                          double eop_budget);

/// Budget from the map: safety_factor * lookup(map, direction, pct, f).
/// Without a map the budget is zero. Throws OutOfRangeError when the
/// perturbation frequency lies outside the map grid.
InterconnectionResult run_interconnection(const Scenario& scenario,
                                          const GmpMap* map);

double map_budget(const Scenario& scenario, const GmpMap& map);

struct DissipationSavings {
  double ratio = 1.0;          // with-map / without-map injected energy
  double joules_saved = 0.0;   // without - with
  double fraction_saved = 0.0; // 1 - ratio
};

/// Throws InvalidComparisonError unless both runs are bounded.
DissipationSavings dissipation_savings(const InterconnectionResult& with_map,
                                       const InterconnectionResult& without_map);

}  // namespace myopass
