#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "myopass/errors.hpp"
#include "myopass/signals.hpp"

using namespace myopass;

namespace {

constexpr double kPi = std::numbers::pi;

SampledSignal make(double rate, double duration, const std::vector<double (*)(double)>& fns) {
  const auto n = static_cast<std::size_t>(std::llround(duration * rate)) + 1;
  std::vector<std::vector<double>> data;
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < fns.size(); ++c) {
    std::vector<double> ch(n);
    for (std::size_t k = 0; k < n; ++k) ch[k] = fns[c](static_cast<double>(k) / rate);
    data.push_back(ch);
    labels.push_back("c" + std::to_string(c));
  }
  return SampledSignal(rate, 0.0, labels, data);
}

double sine(double t) { return std::sin(2.0 * kPi * t); }
double cosine(double t) { return std::cos(2.0 * kPi * t); }
double zero(double) { return 0.0; }
double two(double) { return 2.0; }
double ramp(double t) { return 3.0 * t - 1.0; }

}  // namespace

TEST(SampledSignal, RejectsInvalidConstruction) {
  EXPECT_THROW(SampledSignal(0.0, 0.0, {"a"}, {{1.0}}), DomainError);
  EXPECT_THROW(SampledSignal(10.0, 0.0, {"a", "b"}, {{1.0}}), DomainError);
  EXPECT_THROW(SampledSignal(10.0, 0.0, {"a", "b"}, {{1.0}, {1.0, 2.0}}), DomainError);
}

TEST(SampledSignal, TimeOfSample) {
  const SampledSignal s(4.0, 1.5, {"a"}, {{0, 1, 2, 3, 4}});
  EXPECT_DOUBLE_EQ(s.time_at(0), 1.5);
  EXPECT_DOUBLE_EQ(s.time_at(3), 2.25);
  EXPECT_DOUBLE_EQ(s.end_time(), 2.5);
  EXPECT_EQ(s.size(), 5u);
}

TEST(Slice, LastFiveSecondsAtOneKilohertz) {
  const auto s = make(1000.0, 10.0, {sine});
  const auto last = slice(s, {5.0, 10.0});
  EXPECT_EQ(last.size(), 5001u);
  EXPECT_DOUBLE_EQ(last.start_time(), 5.0);
  EXPECT_DOUBLE_EQ(last.sample_rate(), 1000.0);
  EXPECT_EQ(last.channel(0)[0], s.channel(0)[5000]);
}

TEST(Slice, FullSpanIsIdentity) {
  const auto s = make(1000.0, 2.0, {sine, cosine});
  const auto same = slice(s, s.span());
  ASSERT_EQ(same.size(), s.size());
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_EQ(same.channel(c)[k], s.channel(c)[k]);
  }
}

TEST(Slice, ReversedOrOutsideWindowThrows) {
  const auto s = make(1000.0, 10.0, {sine});
  EXPECT_THROW(slice(s, {2.0, 1.0}), RangeError);
  EXPECT_THROW(slice(s, {9.0, 11.0}), RangeError);
  EXPECT_THROW(slice(s, {-1.0, 1.0}), RangeError);
}

TEST(Slice, NestedSlicesEqualInnerSlice) {
  const auto s = make(1000.0, 10.0, {sine});
  const auto outer = slice(s, {2.0, 8.0});
  const auto nested = slice(outer, {3.0, 4.5});
  const auto direct = slice(s, {3.0, 4.5});
  ASSERT_EQ(nested.size(), direct.size());
  EXPECT_DOUBLE_EQ(nested.start_time(), direct.start_time());
  for (std::size_t k = 0; k < direct.size(); ++k) {
    EXPECT_EQ(nested.channel(0)[k], direct.channel(0)[k]);
  }
}

TEST(InnerProduct, ZeroInput) {
  const auto a = make(1000.0, 1.0, {zero});
  const auto b = make(1000.0, 1.0, {sine});
  EXPECT_EQ(inner_product_integral(a, b, {0.0, 1.0}), 0.0);
}

TEST(InnerProduct, SineSquaredOverOnePeriod) {
  const auto s = make(1000.0, 1.0, {sine});
  EXPECT_NEAR(inner_product_integral(s, s, {0.0, 1.0}), 0.5, 1e-6);
}

TEST(InnerProduct, SpringDoesNoWorkOverPeriod) {
  // force = k x with x = sin(2 pi t), velocity = 2 pi cos(2 pi t).
  const auto x = make(1000.0, 1.0, {sine});
  const auto v = make(1000.0, 1.0, {cosine});
  std::vector<double> f(x.channel(0).begin(), x.channel(0).end());
  std::vector<double> vel(v.channel(0).begin(), v.channel(0).end());
  for (double& value : f) value *= 250.0;
  for (double& value : vel) value *= 2.0 * kPi;
  const SampledSignal force(1000.0, 0.0, {"f"}, {f});
  const SampledSignal velocity(1000.0, 0.0, {"v"}, {vel});
  EXPECT_NEAR(inner_product_integral(force, velocity, {0.0, 1.0}), 0.0, 1e-6);
}

TEST(InnerProduct, IsSymmetric) {
  const auto a = make(500.0, 3.0, {sine, ramp});
  const auto b = make(500.0, 3.0, {cosine, two});
  EXPECT_EQ(inner_product_integral(a, b, {0.5, 2.5}), inner_product_integral(b, a, {0.5, 2.5}));
}

TEST(InnerProduct, TrapezoidExactForPiecewiseLinear) {
  // (3t - 1) * 2 integrated over [0, 1] is 1.
  const auto a = make(100.0, 1.0, {ramp});
  const auto b = make(100.0, 1.0, {two});
  EXPECT_NEAR(inner_product_integral(a, b, {0.0, 1.0}), 1.0, 1e-14);
}

TEST(InnerProduct, MisalignedSignalsThrow) {
  const auto a = make(1000.0, 1.0, {sine});
  const auto b = make(500.0, 1.0, {sine});
  const auto c = make(1000.0, 2.0, {sine});
  const auto d = make(1000.0, 1.0, {sine, sine});
  EXPECT_THROW(inner_product_integral(a, b, {0.0, 1.0}), AlignmentError);
  EXPECT_THROW(inner_product_integral(a, c, {0.0, 1.0}), AlignmentError);
  EXPECT_THROW(inner_product_integral(a, d, {0.0, 1.0}), AlignmentError);
}

TEST(L2Norm, Examples) {
  EXPECT_EQ(l2_norm_integral(make(1000.0, 1.0, {zero}), {0.0, 1.0}), 0.0);
  EXPECT_NEAR(l2_norm_integral(make(1000.0, 1.0, {sine}), {0.0, 1.0}), 0.5, 1e-6);
  EXPECT_NEAR(l2_norm_integral(make(1000.0, 3.0, {two, two}), {0.0, 3.0}), 24.0, 1e-9);
}

TEST(L2Norm, PositiveUnlessIdenticallyZero) {
  std::vector<double> v(1001, 0.0);
  v[500] = 1e-8;
  const SampledSignal s(1000.0, 0.0, {"a"}, {v});
  EXPECT_GT(l2_norm_integral(s, {0.0, 1.0}), 0.0);
}

TEST(Rms, ConstantSignal) {
  const SampledSignal s(1000.0, 0.0, {"a"}, {std::vector<double>(2001, -3.0)});
  const auto r = rms(s, 0.25, 0.05);
  ASSERT_GT(r.size(), 0u);
  for (double value : r.channel(0)) EXPECT_NEAR(value, 3.0, 1e-12);
  EXPECT_NEAR(r.sample_rate(), 20.0, 1e-12);
}

TEST(Rms, SineOverFullPeriod) {
  const auto r = rms(make(1000.0, 3.0, {sine}), 1.0, 0.05);
  for (double value : r.channel(0)) EXPECT_NEAR(value, 1.0 / std::sqrt(2.0), 1e-3);
}

TEST(Rms, ZeroSignal) {
  const auto r = rms(make(1000.0, 1.0, {zero}), 0.25, 0.05);
  for (double value : r.channel(0)) EXPECT_EQ(value, 0.0);
}

TEST(Rms, WindowLongerThanSignalThrows) {
  EXPECT_THROW(rms(make(1000.0, 0.1, {sine}), 0.25, 0.05), RangeError);
  EXPECT_THROW(rms(make(1000.0, 1.0, {sine}), 0.0, 0.05), DomainError);
}

TEST(Rms, TimestampsAtWindowCentre) {
  const auto r = rms(make(1000.0, 2.0, {sine}), 0.25, 0.05);
  // First window spans samples 0..249, centre at 0.1245 s.
  EXPECT_NEAR(r.start_time(), 0.1245, 1e-12);
}

TEST(Resample, LinearSignalIsReproduced) {
  const auto s = make(2148.0, 1.0, {ramp});
  const auto r = resample_linear(s, 1000.0, 0.0, 1001);
  for (std::size_t k = 0; k < r.size(); ++k) {
    EXPECT_NEAR(r.channel(0)[k], 3.0 * r.time_at(k) - 1.0, 1e-12);
  }
  EXPECT_THROW(resample_linear(s, 1000.0, 0.0, 1100), RangeError);
}

TEST(ScaleByDirection, ProjectsBack) {
  const std::vector<double> v{1.0, -2.0, 0.5};
  const double d = std::sqrt(0.5);
  const auto xy = scale_by_direction(v, 10.0, 0.0, d, d, {"x", "y"}, "m/s");
  const auto back = project(xy, d, d);
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(back[k], v[k], 1e-15);
}

TEST(Csv, RoundTripAndFormatting) {
  const auto path = std::filesystem::temp_directory_path() / "myopass_signals_roundtrip.csv";
  CsvTable table;
  table.header = {"t", "value"};
  table.columns = {{0.0, 0.001, 0.002}, {1.0 / 3.0, -0.0, 12345.678}};
  write_csv(path, table, 17);
  const auto back = read_csv(path);
  ASSERT_EQ(back.header, table.header);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(back.columns[c][r], table.columns[c][r]);
  }
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(0.25), "0.25");
  EXPECT_THROW(back.column("missing"), IoError);
  std::filesystem::remove(path);
}

TEST(Csv, MissingFileThrows) {
  EXPECT_THROW(read_csv("/nonexistent/dir/file.csv"), IoError);
}
