#include "myopass/signals.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "myopass/errors.hpp"
#include "myopass/kernels.hpp"

namespace myopass {

namespace {

constexpr double kSnapSamples = 1e-6;

void check_aligned(const SampledSignal& a, const SampledSignal& b) {
  if (a.sample_rate() != b.sample_rate()) {
    throw AlignmentError("signals have different sample rates");
  }
  if (a.channel_count() != b.channel_count()) {
    throw AlignmentError("signals have different channel counts");
  }
  if (a.size() != b.size()) {
    throw AlignmentError("signals have different lengths");
  }
  if (std::abs(a.start_time() - b.start_time()) * a.sample_rate() > 1e-6) {
    throw AlignmentError("signals have misaligned timestamps");
  }
}

}  // namespace

SampledSignal::SampledSignal(double sample_rate, double start_time,
                             std::vector<std::string> labels,
                             std::vector<std::vector<double>> data,
                             std::string unit)
    : sample_rate_(sample_rate),
      start_time_(start_time),
      labels_(std::move(labels)),
      data_(std::move(data)),
      unit_(std::move(unit)) {
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
    throw DomainError("sample rate must be positive");
  }
  if (labels_.size() != data_.size()) {
    throw DomainError("channel label count does not match channel count");
  }
  for (const auto& channel : data_) {
    if (channel.size() != data_.front().size()) {
      throw DomainError("channels must have identical lengths");
    }
  }
}

std::span<const double> SampledSignal::channel(std::size_t index) const {
  if (index >= data_.size()) throw DomainError("channel index out of range");
  return data_[index];
}

double SampledSignal::end_time() const {
  return size() == 0 ? start_time_ : time_at(size() - 1);
}

SampleRange sample_range(const SampledSignal& signal, const Window& w) {
  if (!(w.t_end > w.t_start)) {
    throw RangeError("window end must be after window start");
  }
  if (signal.empty()) throw RangeError("window applied to an empty signal");
  const double rate = signal.sample_rate();
  const double lo = (w.t_start - signal.start_time()) * rate;
  const double hi = (w.t_end - signal.start_time()) * rate;
  const double last_index = static_cast<double>(signal.size() - 1);
  if (lo < -kSnapSamples || hi > last_index + kSnapSamples) {
    throw RangeError("window lies outside the signal span");
  }
  const double first = std::max(0.0, std::ceil(lo - kSnapSamples));
  const double last = std::min(last_index, std::floor(hi + kSnapSamples));
  if (last < first) throw RangeError("window contains no samples");
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

SampledSignal slice(const SampledSignal& signal, const Window& w) {
  const SampleRange range = sample_range(signal, w);
  std::vector<std::vector<double>> data;
  data.reserve(signal.channel_count());
  for (std::size_t c = 0; c < signal.channel_count(); ++c) {
    const auto channel = signal.channel(c);
    data.emplace_back(channel.begin() + range.first,
                      channel.begin() + range.last + 1);
  }
  return SampledSignal(signal.sample_rate(), signal.time_at(range.first),
                       signal.labels(), std::move(data), signal.unit());
}

double inner_product_integral(const SampledSignal& a, const SampledSignal& b,
                              const Window& w) {
  check_aligned(a, b);
  const SampleRange range = sample_range(a, w);
  double total = 0.0;
  for (std::size_t c = 0; c < a.channel_count(); ++c) {
    total += kernels::trapz_dot(a.channel(c).subspan(range.first, range.count()),
                                b.channel(c).subspan(range.first, range.count()),
                                a.dt());
  }
  return total;
}

double l2_norm_integral(const SampledSignal& y, const Window& w) {
  const SampleRange range = sample_range(y, w);
  double total = 0.0;
  for (std::size_t c = 0; c < y.channel_count(); ++c) {
    total += kernels::trapz_squares(
        y.channel(c).subspan(range.first, range.count()), y.dt());
  }
  return total;
}

SampledSignal rms(const SampledSignal& signal, double window_len,
                  double stride) {
  if (!(window_len > 0.0) || !(stride > 0.0)) {
    throw DomainError("RMS window and stride must be positive");
  }
  const double rate = signal.sample_rate();
  const auto window_samples =
      static_cast<std::size_t>(std::max(1.0, std::round(window_len * rate)));
  const auto stride_samples =
      static_cast<std::size_t>(std::max(1.0, std::round(stride * rate)));
  if (window_samples > signal.size()) {
    throw RangeError("RMS window is longer than the signal");
  }
  const std::size_t outputs =
      (signal.size() - window_samples) / stride_samples + 1;
  std::vector<std::vector<double>> data(signal.channel_count());
  for (std::size_t c = 0; c < signal.channel_count(); ++c) {
    const auto channel = signal.channel(c);
    data[c].reserve(outputs);
    for (std::size_t k = 0; k < outputs; ++k) {
      const double energy =
          kernels::sum_squares(channel.subspan(k * stride_samples, window_samples));
      data[c].push_back(std::sqrt(energy / static_cast<double>(window_samples)));
    }
  }
  const double centre_offset =
      0.5 * static_cast<double>(window_samples - 1) / rate;
  return SampledSignal(rate / static_cast<double>(stride_samples),
                       signal.start_time() + centre_offset, signal.labels(),
                       std::move(data), signal.unit());
}

SampledSignal resample_linear(const SampledSignal& signal, double rate,
                              double start_time, std::size_t count) {
  if (!(rate > 0.0)) throw DomainError("resample rate must be positive");
  if (signal.size() < 2) throw RangeError("cannot resample fewer than 2 samples");
  const double last_index = static_cast<double>(signal.size() - 1);
  std::vector<std::vector<double>> data(signal.channel_count(),
                                        std::vector<double>(count));
  for (std::size_t k = 0; k < count; ++k) {
    const double t = start_time + static_cast<double>(k) / rate;
    double pos = (t - signal.start_time()) * signal.sample_rate();
    if (pos < -kSnapSamples || pos > last_index + kSnapSamples) {
      throw RangeError("resample query outside the signal span");
    }
    pos = std::clamp(pos, 0.0, last_index);
    const auto i0 = std::min(static_cast<std::size_t>(pos), signal.size() - 2);
    const double frac = pos - static_cast<double>(i0);
    for (std::size_t c = 0; c < signal.channel_count(); ++c) {
      const auto channel = signal.channel(c);
      data[c][k] = (1.0 - frac) * channel[i0] + frac * channel[i0 + 1];
    }
  }
  return SampledSignal(rate, start_time, signal.labels(), std::move(data),
                       signal.unit());
}

SampledSignal scale_by_direction(std::span<const double> values, double rate,
                                 double start_time, double dx, double dy,
                                 std::vector<std::string> labels,
                                 std::string unit) {
  std::vector<double> x(values.size());
  std::vector<double> y(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    x[k] = values[k] * dx;
    y[k] = values[k] * dy;
  }
  return SampledSignal(rate, start_time, std::move(labels),
                       {std::move(x), std::move(y)},
                       std::move(unit));
}

std::vector<double> project(const SampledSignal& xy, double dx, double dy) {
  if (xy.channel_count() != 2) {
    throw DomainError("projection needs a 2-channel signal");
  }
  const auto x = xy.channel(0);
  const auto y = xy.channel(1);
  std::vector<double> out(xy.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = x[k] * dx + y[k] * dy;
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<double>& CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IoError("CSV has no column '" + name + "'");
  return columns[static_cast<std::size_t>(it - header.begin())];
}

std::string format_number(double value, int significant) {
  if (value == 0.0) return "0";  // also folds -0
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                    std::chars_format::general, significant);
  return std::string(buffer, result.ptr);
}

void write_csv(const std::filesystem::path& path, const CsvTable& table,
               int significant) {
  if (table.header.size() != table.columns.size()) {
    throw IoError("CSV header does not match column count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  std::string line;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c) line += ',';
    line += table.header[c];
  }
  line += '\n';
  out << line;
  const std::size_t rows = table.rows();
  for (const auto& column : table.columns) {
    if (column.size() != rows) throw IoError("CSV columns differ in length");
  }
  std::string chunk;
  chunk.reserve(1 << 16);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) chunk += ',';
      chunk += format_number(table.columns[c][r], significant);
    }
    chunk += '\n';
    if (chunk.size() > (1 << 15)) {
      out << chunk;
      chunk.clear();
    }
  }
  out << chunk;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  CsvTable table;
  std::size_t pos = text.find('\n');
  if (pos == std::string::npos) throw IoError("CSV '" + path.string() + "' has no header");
  {
    std::string head = text.substr(0, pos);
    if (!head.empty() && head.back() == '\r') head.pop_back();
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = head.find(',', start);
      table.header.push_back(head.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  table.columns.resize(table.header.size());
  const char* p = text.data() + pos + 1;
  const char* end = text.data() + text.size();
  std::size_t row = 0;
  while (p < end) {
    if (*p == '\n' || *p == '\r') {
      ++p;
      continue;
    }
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      double value = 0.0;
      const auto result = std::from_chars(p, end, value);
      if (result.ec != std::errc()) {
        throw IoError("bad number in '" + path.string() + "' at data row " +
                      std::to_string(row + 1));
      }
      table.columns[c].push_back(value);
      p = result.ptr;
      const char expected = c + 1 < table.header.size() ? ',' : '\n';
      if (p < end && *p == '\r') ++p;
      if (p < end) {
        if (*p != expected) {
          throw IoError("malformed row " + std::to_string(row + 1) + " in '" +
                        path.string() + "'");
        }
        ++p;
      } else if (c + 1 < table.header.size()) {
        throw IoError("truncated row in '" + path.string() + "'");
      }
    }
    ++row;
  }
  return table;
}

}  // namespace myopass
