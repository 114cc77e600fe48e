#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace myopass {

/// Closed time interval [t_start, t_end] in seconds.
struct Window {
  double t_start = 0.0;
  double t_end = 0.0;

  double length() const { return t_end - t_start; }
};

/// Uniformly sampled multichannel time series. Sample k of every channel is
/// taken at start_time + k / sample_rate. Immutable after construction.
class SampledSignal {
 public:
  SampledSignal() = default;

  /// Throws DomainError if sample_rate <= 0, the label count does not match
  /// the channel count, or channels have unequal lengths.
  SampledSignal(double sample_rate, double start_time,
                std::vector<std::string> labels,
                std::vector<std::vector<double>> data, std::string unit = "");

  double sample_rate() const { return sample_rate_; }
  double start_time() const { return start_time_; }
  double dt() const { return 1.0 / sample_rate_; }
  const std::string& unit() const { return unit_; }
  const std::vector<std::string>& labels() const { return labels_; }

  std::size_t channel_count() const { return data_.size(); }
  /// Samples per channel.
  std::size_t size() const { return data_.empty() ? 0 : data_.front().size(); }
  bool empty() const { return size() == 0; }

  std::span<const double> channel(std::size_t index) const;
  double time_at(std::size_t k) const {
    return start_time_ + static_cast<double>(k) / sample_rate_;
  }
  /// Time of the last sample (equals start_time for a single sample).
  double end_time() const;
  Window span() const { return {start_time_, end_time()}; }

 private:
  double sample_rate_ = 1.0;
  double start_time_ = 0.0;
  std::vector<std::string> labels_;
  std::vector<std::vector<double>> data_;
  std::string unit_;
};

/// Index range [first, last] of the samples whose timestamps fall inside w.
/// Window edges within 1e-6 of a sample snap to it. Throws RangeError for a
/// degenerate window or one reaching outside the signal's span.
struct SampleRange {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t count() const { return last - first + 1; }
};
SampleRange sample_range(const SampledSignal& signal, const Window& w);

SampledSignal slice(const SampledSignal& signal, const Window& w);

/// Trapezoidal integral over w of sum_c a_c(t) * b_c(t) (a^T b with channels
/// paired by index). Throws AlignmentError if rates, start times, lengths or
/// channel counts differ.
double inner_product_integral(const SampledSignal& a, const SampledSignal& b,
                              const Window& w);

/// Trapezoidal integral over w of y^T y. Never negative.
double l2_norm_integral(const SampledSignal& y, const Window& w);

inline constexpr double kDefaultRmsWindow = 0.25;
inline constexpr double kDefaultRmsStride = 0.05;

/// Sliding-window RMS per channel. Windows hold round(window_len * rate)
/// samples and advance by round(stride * rate) samples; each output sample is
/// stamped at its window's centre. Throws RangeError if the window is longer
/// than the signal, DomainError for non-positive lengths.
SampledSignal rms(const SampledSignal& signal,
                  double window_len = kDefaultRmsWindow,
                  double stride = kDefaultRmsStride);

/// Linear-interpolation resampling onto `count` samples at `rate` starting at
/// `start_time`. Query times must lie inside the source span.
SampledSignal resample_linear(const SampledSignal& signal, double rate,
                              double start_time, std::size_t count);

/// Pointwise product of a single-channel signal with a unit vector, producing
/// one channel per vector component.
SampledSignal scale_by_direction(std::span<const double> values, double rate,
                                 double start_time, double dx, double dy,
                                 std::vector<std::string> labels,
                                 std::string unit);

/// Projection of a 2-channel signal onto the unit vector (dx, dy).
std::vector<double> project(const SampledSignal& xy, double dx, double dy);

// ---------------------------------------------------------------------------
// CSV tables: header row, one column per field, numbers written in a fixed
// locale-independent format so that equal values give byte-identical files.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
  /// Column by header name; throws IoError if absent.
  const std::vector<double>& column(const std::string& name) const;
};

/// Decimal text for `value` with `significant` significant digits.
std::string format_number(double value, int significant = 10);

void write_csv(const std::filesystem::path& path, const CsvTable& table,
               int significant = 10);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace myopass
