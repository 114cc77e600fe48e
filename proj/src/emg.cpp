#include "myopass/emg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "myopass/errors.hpp"
#include "myopass/kernels.hpp"
#include "myopass/seeding.hpp"

namespace myopass {

namespace {

// Direct-form-I biquad, Butterworth (Q = 1/sqrt(2)) via the bilinear
// transform.
class Biquad {
 public:
  static Biquad lowpass(double cutoff, double rate) {
    return design(cutoff, rate, /*highpass=*/false);
  }
  static Biquad highpass(double cutoff, double rate) {
    return design(cutoff, rate, /*highpass=*/true);
  }

  double step(double x) {
    const double y = b0_ * x + b1_ * x1_ + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  static Biquad design(double cutoff, double rate, bool highpass) {
    const double w0 = 2.0 * std::numbers::pi * cutoff / rate;
    const double alpha = std::sin(w0) / std::numbers::sqrt2;
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha;
    Biquad q;
    if (highpass) {
      q.b0_ = (1.0 + cw) / 2.0 / a0;
      q.b1_ = -(1.0 + cw) / a0;
    } else {
      q.b0_ = (1.0 - cw) / 2.0 / a0;
      q.b1_ = (1.0 - cw) / a0;
    }
    q.b2_ = q.b0_;
    q.a1_ = -2.0 * cw / a0;
    q.a2_ = (1.0 - alpha) / a0;
    return q;
  }

  double b0_ = 1, b1_ = 0, b2_ = 0, a1_ = 0, a2_ = 0;
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

std::vector<std::string> emg_labels(std::size_t n) {
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < n; ++c) labels.push_back("emg" + std::to_string(c + 1));
  return labels;
}

}  // namespace

SampledSignal synthesize_emg(const SampledSignal& activation,
                             std::span<const double> mvc_rms, std::uint64_t seed,
                             const EmgSynthesisOptions& options) {
  if (activation.channel_count() != 1) {
    throw DomainError("activation must be a single channel");
  }
  const auto a = activation.channel(0);
  for (const double value : a) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw DomainError("activation must lie in [0, 1]");
    }
  }
  const double rate = activation.sample_rate();
  if (!(options.band_high < rate / 2.0) || !(options.band_low > 0.0) ||
      !(options.band_low < options.band_high)) {
    throw DomainError("EMG band edges must satisfy 0 < low < high < rate/2");
  }
  const std::size_t n = activation.size();
  const auto warmup = static_cast<std::size_t>(std::round(options.warmup * rate));

  std::vector<std::vector<double>> data(mvc_rms.size(), std::vector<double>(n));
  for (std::size_t c = 0; c < mvc_rms.size(); ++c) {
    std::mt19937_64 rng(derive_seed(seed, 0xE3Cu, c));
    std::normal_distribution<double> white(0.0, 1.0);
    Biquad hp = Biquad::highpass(options.band_low, rate);
    Biquad lp = Biquad::lowpass(options.band_high, rate);
    for (std::size_t k = 0; k < warmup; ++k) lp.step(hp.step(white(rng)));
    auto& out = data[c];
    for (std::size_t k = 0; k < n; ++k) out[k] = lp.step(hp.step(white(rng)));
    if (n > 0) {
      const double unit = std::sqrt(kernels::sum_squares(out) / static_cast<double>(n));
      const double scale = unit > 0.0 ? mvc_rms[c] / unit : 0.0;
      for (std::size_t k = 0; k < n; ++k) out[k] *= scale * a[k];
    }
  }
  return SampledSignal(rate, activation.start_time(), emg_labels(mvc_rms.size()),
                       std::move(data), "mV");
}

MvcCalibration estimate_mvc(std::span<const SampledSignal> recordings,
                            const EnvelopeOptions& envelope) {
  if (recordings.empty()) throw DomainError("MVC estimation needs a recording");
  const std::size_t channels = recordings.front().channel_count();
  if (channels == 0) throw DomainError("MVC recording has no channels");
  MvcCalibration cal;
  cal.mvc_rms.assign(channels, 0.0);
  cal.repetitions = static_cast<int>(recordings.size());
  for (const auto& recording : recordings) {
    if (recording.channel_count() != channels) {
      throw DomainError("MVC recordings have different channel counts");
    }
    const SampledSignal env = rms(recording, envelope.window, envelope.stride);
    for (std::size_t c = 0; c < channels; ++c) {
      const auto values = env.channel(c);
      cal.mvc_rms[c] =
          std::max(cal.mvc_rms[c], *std::max_element(values.begin(), values.end()));
    }
    cal.effort_duration = recording.end_time() - recording.start_time();
  }
  return cal;
}

SampledSignal pct_mvc_series(const SampledSignal& emg, const MvcCalibration& cal,
                             const EnvelopeOptions& envelope) {
  if (cal.mvc_rms.size() != emg.channel_count()) {
    throw DomainError("calibration channels do not match the EMG channels");
  }
  for (const double m : cal.mvc_rms) {
    if (!(m > 0.0)) throw DomainError("MVC RMS must be positive");
  }
  const SampledSignal env = rms(emg, envelope.window, envelope.stride);
  std::vector<std::vector<double>> data(env.channel_count());
  for (std::size_t c = 0; c < env.channel_count(); ++c) {
    const auto values = env.channel(c);
    data[c].reserve(values.size());
    for (const double v : values) data[c].push_back(v / cal.mvc_rms[c]);
  }
  return SampledSignal(env.sample_rate(), env.start_time(), env.labels(),
                       std::move(data), "fraction");
}

PctMvc pct_mvc(const SampledSignal& emg, const MvcCalibration& cal,
               const Window& w, const EnvelopeOptions& envelope,
               std::span<const std::size_t> feedback) {
  const SampledSignal series = pct_mvc_series(slice(emg, w), cal, envelope);
  PctMvc result;
  for (std::size_t c = 0; c < series.channel_count(); ++c) {
    const auto values = series.channel(c);
    double sum = 0.0;
    for (const double v : values) sum += v;
    result.per_channel.push_back(sum / static_cast<double>(values.size()));
  }
  if (feedback.empty()) throw DomainError("no feedback channels selected");
  double pooled = 0.0;
  for (const std::size_t c : feedback) {
    if (c >= result.per_channel.size()) {
      throw DomainError("feedback channel index out of range");
    }
    pooled += result.per_channel[c];
  }
  result.pooled = pooled / static_cast<double>(feedback.size());
  return result;
}

std::vector<SampledSignal> simulate_mvc_recordings(
    std::span<const double> true_mvc_rms, std::uint64_t seed, int repetitions,
    double effort_duration, double rate) {
  if (repetitions < 1 || !(effort_duration > 0.0)) {
    throw DomainError("MVC protocol needs >= 1 repetition of positive length");
  }
  // Grasp onset is a 50 ms lag to full effort; a little drift in effort keeps
  // the two repetitions distinct.
  constexpr double kOnsetLag = 0.05;
  std::vector<SampledSignal> out;
  const auto n = static_cast<std::size_t>(std::round(effort_duration * rate)) + 1;
  for (int rep = 0; rep < repetitions; ++rep) {
    std::mt19937_64 rng(derive_seed(seed, 0x3FCu, static_cast<std::uint64_t>(rep)));
    std::uniform_real_distribution<double> peak(0.95, 1.0);
    const double top = peak(rng);
    std::vector<double> a(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / rate;
      a[k] = top * (1.0 - std::exp(-t / kOnsetLag));
    }
    const SampledSignal activation(rate, 0.0, {"activation"}, {std::move(a)},
                                   "fraction");
    out.push_back(synthesize_emg(activation, true_mvc_rms,
                                 derive_seed(seed, 0x3FDu, static_cast<std::uint64_t>(rep))));
  }
  return out;
}

}  // namespace myopass
