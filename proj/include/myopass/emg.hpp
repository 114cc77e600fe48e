#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "myopass/signals.hpp"

namespace myopass {

inline constexpr std::size_t kEmgChannels = 4;
inline constexpr double kDefaultEmgRate = 2148.0;

/// Electrode order on the forearm.
enum class Muscle : std::size_t {
  kExtensorDigitorum = 0,
  kExtensorCarpiRadialis = 1,
  kPalmarisLongus = 2,
  kFlexorCarpiUlnaris = 3,
};

/// Channels whose %MVC is shown as the two feedback bars.
inline constexpr std::array<std::size_t, 2> kDefaultFeedbackChannels{
    static_cast<std::size_t>(Muscle::kPalmarisLongus),
    static_cast<std::size_t>(Muscle::kExtensorDigitorum)};

struct EnvelopeOptions {
  double window = kDefaultRmsWindow;  // s
  double stride = kDefaultRmsStride;  // s
};

struct MvcCalibration {
  std::vector<double> mvc_rms;  // mV, one per channel, all > 0
  int repetitions = 2;
  double effort_duration = 3.0;  // s
};

struct EmgSynthesisOptions {
  double band_low = 20.0;    // Hz
  double band_high = 450.0;  // Hz
  double warmup = 1.0;       // s of discarded filter start-up
};

/// Raw surface EMG for every entry of `mvc_rms`: band-limited (2nd-order
/// Butterworth high-pass then low-pass) Gaussian noise normalised to unit RMS
/// and amplitude-modulated by activation(t) * mvc_rms[c]. `activation` is a
/// single channel in [0, 1] already sampled at the desired EMG rate.
SampledSignal synthesize_emg(const SampledSignal& activation,
                             std::span<const double> mvc_rms, std::uint64_t seed,
                             const EmgSynthesisOptions& options = {});

/// Per channel, the largest sliding-window RMS across all recordings. Throws
/// DomainError for an empty list or mismatched channel counts.
MvcCalibration estimate_mvc(std::span<const SampledSignal> recordings,
                            const EnvelopeOptions& envelope = {});

/// Mean over a window of RMS(emg) / mvc_rms per channel, plus the arithmetic
/// mean of the feedback channels.
struct PctMvc {
  std::vector<double> per_channel;
  double pooled = 0.0;
};

PctMvc pct_mvc(const SampledSignal& emg, const MvcCalibration& cal,
               const Window& w, const EnvelopeOptions& envelope = {},
               std::span<const std::size_t> feedback = kDefaultFeedbackChannels);

/// RMS envelope normalised by the calibration: %MVC as a fraction over time.
SampledSignal pct_mvc_series(const SampledSignal& emg, const MvcCalibration& cal,
                             const EnvelopeOptions& envelope = {});

/// Scripted maximum-effort recordings: `repetitions` grasps of
/// `effort_duration` seconds each, with a lag to full activation.
std::vector<SampledSignal> simulate_mvc_recordings(
    std::span<const double> true_mvc_rms, std::uint64_t seed,
    int repetitions = 2, double effort_duration = 3.0,
    double rate = kDefaultEmgRate);

}  // namespace myopass
