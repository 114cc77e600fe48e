#pragma once

#include <optional>
#include <span>
#include <vector>

#include "myopass/biomech.hpp"
#include "myopass/emg.hpp"
#include "myopass/signals.hpp"

namespace myopass {

/// Running energy E_S(t) = integral of u^T y from the first sample, plus the
/// initial store E(0) kept separately.
struct EnergyLedger {
  std::vector<double> time;
  std::vector<double> energy;  // J, energy[0] == 0
  double initial_energy = 0.0;

  std::size_t size() const { return time.size(); }
  double total(std::size_t k) const { return energy[k] + initial_energy; }
};

/// Single forward pass of trapezoidal accumulation.
EnergyLedger energy_ledger(const SampledSignal& u, const SampledSignal& y,
                           double initial_energy = 0.0);

inline constexpr double kPassivityTolerance = 1e-9;  // J

struct PassivityVerdict {
  bool passive = true;
  double min_total = 0.0;  // min over t of E_S(t) + E(0)
  std::optional<double> first_violation_time;
  double deficit = 0.0;  // J below zero at the first violation
};

/// Passive iff E_S(t) + E(0) >= -tolerance on the whole grid.
PassivityVerdict is_passive(const EnergyLedger& ledger,
                            double tolerance = kPassivityTolerance);

/// Pointwise sum of ledgers on a shared grid; initial energies add.
/// Throws AlignmentError on a grid mismatch, DomainError for an empty list.
EnergyLedger interconnection_energy(std::span<const EnergyLedger> ledgers);

struct EopEstimate {
  double xi = 0.0;  // N s/m, negative for a non-passive port
  int direction_index = 0;
  ActivationLevel activation = ActivationLevel::kRelaxed;
  FrequencyBand band = FrequencyBand::kLow;
  double frequency = 0.0;  // Hz
  double mean_pct_mvc = 0.0;
  Window window;
  double numerator = 0.0;    // J
  double denominator = 0.0;  // (m/s)^2 s
  int subject_id = 0;
};

struct EopOptions {
  /// Integrate only the components along the perturbation axis instead of
  /// the full 2-D products.
  bool project_on_axis = false;
  /// Shrink the window to whole perturbation periods ending at t_end.
  bool snap_to_periods = true;
  double degenerate_threshold = 1e-9;
  EnvelopeOptions envelope;
  std::vector<std::size_t> feedback_channels{kDefaultFeedbackChannels.begin(),
                                             kDefaultFeedbackChannels.end()};
};

/// Largest window of whole periods of `frequency` inside w, anchored at
/// w.t_end.
Window snap_to_periods(const Window& w, double frequency);

/// Ratio of integral f^T v to integral v^T v over w. Throws DegenerateError
/// when the velocity energy is at or below `threshold`.
struct EopRatio {
  double numerator = 0.0;
  double denominator = 0.0;
  double xi() const { return numerator / denominator; }
};
EopRatio eop_ratio(const SampledSignal& force, const SampledSignal& velocity,
                   const Window& w, double threshold = 1e-9);

/// EoP of one trial over w. Without a calibration mean_pct_mvc is NaN.
EopEstimate estimate_eop(const TrialRecord& trial, const Window& w,
                         const EopOptions& options = {});
EopEstimate estimate_eop(const TrialRecord& trial, const Window& w,
                         const MvcCalibration& cal,
                         const EopOptions& options = {});

/// Output-strict passivity class of a coefficient.
enum class PassivityKind { kOutputStrictlyPassive, kOutputNonPassive };

struct PassivityClass {
  PassivityKind kind = PassivityKind::kOutputStrictlyPassive;
  double excess = 0.0;    // EoP, xi when OSP
  double shortage = 0.0;  // SoP, -xi when ONP
  /// 1 / xi for xi > 0, +infinity at the xi == 0 boundary, empty for ONP.
  std::optional<double> l2_gain;
};

PassivityClass classify(double xi);

}  // namespace myopass
