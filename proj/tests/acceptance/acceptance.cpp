// End-to-end acceptance checks. Usage: acceptance <work-dir>
// Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <tuple>
#include <vector>

#include "myopass/biomech.hpp"
#include "myopass/errors.hpp"
#include "myopass/gmp.hpp"
#include "myopass/passivity.hpp"
#include "myopass/stabilizer.hpp"
#include "myopass/stats.hpp"
#include "myopass/study.hpp"

using namespace myopass;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << id << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

int run_all(const fs::path& out) {
  const std::string cmd = std::string(MYOPASS_CLI) + " all --out " + out.string() +
                          " > " + (out.string() + ".log") + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ActivationProfile protocol_profile(const StudyConfig& c, double target) {
  ActivationProfile p;
  p.target = target;
  p.tracking_noise = c.tracking_noise;
  p.rise_time = c.rise_time;
  p.noise_correlation = c.noise_correlation;
  return p;
}

PerturbationSpec protocol_spec(const StudyConfig& c, int direction, double frequency) {
  PerturbationSpec spec;
  spec.frequency = frequency;
  spec.amplitude = c.amplitude;
  spec.direction_index = direction;
  spec.duration = c.duration;
  spec.ramp_time = c.ramp_time;
  return spec;
}

// Pure Kelvin-Voigt limb: the damper does all net work over whole periods.
void ac1() {
  LimbParams limb;
  limb.maxwell_damping_base = 0.0;
  limb.maxwell_damping_gain = 0.0;
  const StudyConfig c;
  double worst = 0.0;
  double slowest = 0.0;
  for (double f : {1.0, 3.0}) {
    for (int d = 0; d < kDirections; ++d) {
      const auto start = Clock::now();
      ActivationProfile steady;
      steady.target = 0.0;
      steady.tracking_noise = 0.0;
      TrialOptions options;
      options.synthesize_emg = false;
      const auto trial = simulate_trial(limb, protocol_spec(c, d, f), steady, 11, options);
      const double xi = estimate_eop(trial, c.analysis_window_span()).xi;
      slowest = std::max(slowest, seconds_since(start));
      const double expected = limb.direction_gain[static_cast<std::size_t>(d)] *
                              limb.base_damping;
      worst = std::max(worst, std::fabs(xi - expected) / expected);
    }
  }
  report("AC1", worst <= 1e-3 && slowest < 1.0,
         "Kelvin-Voigt damping recovered, worst relative error " + fmt(worst, 3) +
             " over 16 trials, slowest trial " + fmt(slowest, 3) + " s");
}

// Closed-form EoP against the simulate + estimate pipeline for one default subject.
void ac2() {
  const StudyConfig c;
  const LimbParams limb;
  const auto start = Clock::now();
  double worst = 0.0;
  std::string worst_cell;
  int cells = 0;
  std::uint64_t seed = 100;
  for (double f : c.frequencies) {
    for (double a : {c.relaxed_target, c.stiff_target}) {
      for (int d = 0; d < kDirections; ++d) {
        const auto trial = simulate_trial(limb, protocol_spec(c, d, f), protocol_profile(c, a),
                                          ++seed);
        const double xi = estimate_eop(trial, c.analysis_window_span()).xi;
        const double expected = analytic_eop(limb, d, a, f);
        const double err = std::fabs(xi - expected) / expected;
        if (err > worst) {
          worst = err;
          worst_cell = fmt(f) + " Hz, a = " + fmt(a) + ", dir " + std::to_string(d);
        }
        ++cells;
      }
    }
  }
  const double elapsed = seconds_since(start);
  report("AC2", cells == 32 && worst <= 0.01 && elapsed < 30.0,
         std::to_string(cells) + " cells, worst relative error " + fmt(worst, 3) + " (" +
             worst_cell + "), " + fmt(elapsed, 3) + " s");
}

void ac3(const fs::path& run, double elapsed, int exit_code) {
  if (exit_code != 0) {
    report("AC3", false, "study run exited with " + std::to_string(exit_code));
    return;
  }
  const StudyConfig c;
  const auto estimates = read_eop_csv(run / "analysis" / "eop.csv", c.frequencies);
  std::map<std::tuple<int, int, ActivationLevel, FrequencyBand>, double> xi;
  std::set<int> subjects;
  for (const auto& e : estimates) {
    xi[{e.subject_id, e.direction_index, e.activation, e.band}] = e.xi;
    subjects.insert(e.subject_id);
  }
  auto at = [&](int s, int d, ActivationLevel a, FrequencyBand b) {
    const auto it = xi.find({s, d, a, b});
    return it == xi.end() ? std::nan("") : it->second;
  };

  int freq_ok = 0, freq_total = 0;
  bool stiff_ok = true;
  int stiff_min = kDirections;
  for (int s : subjects) {
    int stiff = 0;
    for (int d = 0; d < kDirections; ++d) {
      for (auto a : {ActivationLevel::kRelaxed, ActivationLevel::kStiff}) {
        ++freq_total;
        freq_ok += at(s, d, a, FrequencyBand::kLow) > at(s, d, a, FrequencyBand::kHigh);
      }
      stiff += at(s, d, ActivationLevel::kStiff, FrequencyBand::kLow) >
               at(s, d, ActivationLevel::kRelaxed, FrequencyBand::kLow);
    }
    stiff_min = std::min(stiff_min, stiff);
    stiff_ok = stiff_ok && stiff >= 7;
  }
  const bool a_ok = subjects.size() == 5 && freq_total == 80 && freq_ok == freq_total;

  const auto stats = compute_stats(estimates);
  bool c_ok = stats.contrasts.size() == 4;
  std::string c_detail;
  for (const auto& contrast : stats.contrasts) {
    c_ok = c_ok && contrast.result && contrast.result->n == 40 && contrast.p_value() < 0.05;
    c_detail += " " + contrast.name + " p=" + fmt(contrast.p_value(), 3);
  }

  bool slopes_ok = stats.trends.size() == 5;
  for (const auto& t : stats.trends) {
    slopes_ok = slopes_ok && t.low && t.high && t.low->slope > t.high->slope;
  }
  const bool d_ok = slopes_ok && stats.slope_contrast && stats.slope_contrast->result &&
                    stats.slope_contrast->p_value() < 0.05;

  report("AC3", a_ok && stiff_ok && c_ok && d_ok && elapsed < 300.0,
         "(a) 1 Hz > 3 Hz in " + std::to_string(freq_ok) + "/" + std::to_string(freq_total) +
             "; (b) stiff > relaxed in at least " + std::to_string(stiff_min) +
             "/8 directions per subject; (c)" + c_detail + "; (d) slopes " +
             (slopes_ok ? "low > high for every subject" : "not ordered") + ", p=" +
             fmt(stats.slope_contrast ? stats.slope_contrast->p_value() : 1.0, 3) + "; " +
             fmt(elapsed, 3) + " s");
}

// Independent sign-pattern enumeration.
double brute_force_two_sided(const std::vector<double>& d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::fabs(d[a]) < std::fabs(d[b]); });
  std::vector<int> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = static_cast<int>(r) + 1;
  int observed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0) observed += rank[i];
  }
  std::size_t le = 0, ge = 0;
  const std::size_t total = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < total; ++mask) {
    int w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) w += rank[i];
    }
    le += w <= observed;
    ge += w >= observed;
  }
  const double tail = static_cast<double>(std::min(le, ge)) / static_cast<double>(total);
  return std::min(1.0, 2.0 * tail);
}

void ac4() {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<std::size_t> size(5, 12);
  std::normal_distribution<double> gauss(0.4, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> d(size(rng));
    for (double& x : d) x = gauss(rng);
    const auto r = stats::wilcoxon_signed_rank(d);
    worst = std::max(worst, std::fabs(r.p_value - brute_force_two_sided(d)));
  }
  const std::vector<double> positive{1.0, 2.0, 3.0, 4.0, 5.0};
  const double p5 = stats::wilcoxon_signed_rank(positive).p_value;

  // The decimal sample {0.1, 0.5, 0.9} has D = 7/30, but the stored 0.9 lies
  // about 2.2e-17 above 9/10, which moves the exact statistic of the stored
  // values to the next double above 7/30. Check the correctly rounded
  // statistic of the stored inputs, its distance to 7/30, and a dyadic sample
  // whose statistic is exactly representable.
  const std::vector<double> decimal{0.1, 0.5, 0.9};
  const auto uniform = [](double v) { return std::clamp(v, 0.0, 1.0); };
  const double d = stats::ks_statistic(decimal, uniform);
  const long double exact_stored = std::max(
      {static_cast<long double>(1.0L / 3.0L) - 0.1L, 0.5L - 1.0L / 3.0L,
       static_cast<long double>(2.0L / 3.0L) - 0.5L, static_cast<long double>(0.9) - 2.0L / 3.0L,
       1.0L - static_cast<long double>(0.9), static_cast<long double>(0.1)});
  const double rounded = static_cast<double>(exact_stored);
  const double input_error = std::fabs(static_cast<long double>(0.9) - 0.9L);
  const bool ks_decimal = d == rounded && std::fabs(d - 7.0 / 30.0) <=
                                              input_error + 0.5 * (std::nextafter(d, 1.0) - d);
  const std::vector<double> dyadic{0.125, 0.5, 0.875};
  const bool ks_dyadic = stats::ks_statistic(dyadic, uniform) == 5.0 / 24.0;

  report("AC4", worst <= 1e-12 && p5 == 0.0625 && ks_decimal && ks_dyadic,
         "Wilcoxon exact vs enumeration max diff " + fmt(worst, 3) + " over 20 samples; n=5 p=" +
             fmt(p5, 17) + "; KS D{0.1,0.5,0.9}=" + fmt(d, 17) +
             " (7/30 up to the 2.2e-17 representation error of 0.9, equal to the correctly "
             "rounded statistic of the stored inputs); dyadic sample D=5/24 exactly " +
             (ks_dyadic ? "yes" : "no"));
}

void ac5(const fs::path& run) {
  const auto manifest = read_manifest(run / "manifest.json");
  const auto& c = manifest.config;
  std::size_t checked = 0, passive = 0;
  double min_total = 0.0;
  for (const auto& entry : manifest.subjects) {
    for (const auto& t : entry.trials) {
      TrialOptions options;
      options.rate = c.robot_rate;
      options.synthesize_emg = false;
      const auto record =
          simulate_trial(entry.subject.limb, protocol_spec(c, t.direction, t.frequency),
                         protocol_profile(c, t.activation_command), t.seed, options);
      const auto ledger = energy_ledger(record.force, record.velocity, record.initial_energy);
      const auto verdict = is_passive(ledger);
      ++checked;
      passive += verdict.passive;
      min_total = std::min(min_total, verdict.min_total);
    }
  }
  // A port pushing with -5 N s/m against a constant unit velocity.
  const std::vector<double> v(101, 1.0);
  std::vector<double> f(101, -5.0);
  const SampledSignal velocity(1000.0, 0.0, {"v"}, {v});
  const SampledSignal force(1000.0, 0.0, {"f"}, {f});
  const auto verdict = is_passive(energy_ledger(force, velocity));
  const bool first_step = !verdict.passive && verdict.first_violation_time &&
                          std::fabs(*verdict.first_violation_time - 0.001) < 1e-12;
  report("AC5", checked == manifest.trial_count() && checked > 0 && passive == checked &&
                    first_step,
         std::to_string(passive) + "/" + std::to_string(checked) +
             " trials passive, min E_S + E(0) = " + fmt(min_total, 3) +
             " J; negative damper flagged at t = " +
             fmt(verdict.first_violation_time.value_or(-1.0), 6) + " s");
}

void ac6(const fs::path& run) {
  const auto map = read_map(run / "analysis" / "maps" / "median.json");
  const Scenario base = StudyConfig{}.scenario.to_scenario();

  const double budget = map_budget(base, map);
  const double sop = base.field.nominal_sop(base.perturbation.frequency);
  const auto with = run_interconnection(base, &map);
  const bool a_ok = sop < budget && with.bounded && with.injected_dissipation == 0.0;

  const auto without = run_interconnection(base, nullptr);
  const bool b_ok = without.bounded && without.injected_dissipation > 0.0 &&
                    without.min_observed >= -kPassivityTolerance;

  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> sops(1.0, 25.0);
  std::uniform_real_distribution<double> freqs(1.0, 3.0);
  std::uniform_real_distribution<double> acts(0.05, 0.4);
  std::uniform_int_distribution<int> dirs(0, kDirections - 1);
  int c_ok = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    Scenario s = base;
    s.seed = 1000 + k;
    if (k % 4 == 3) {
      s.field = ForceFieldSpec::delayed_spring(100.0 + 50.0 * static_cast<double>(k), 0.02);
    } else {
      s.field = ForceFieldSpec::negative_damping(sops(rng));
    }
    s.perturbation.frequency = freqs(rng);
    s.perturbation.direction_index = dirs(rng);
    s.activation.target = acts(rng);
    const auto m = run_interconnection(s, &map);
    const auto n = run_interconnection(s, nullptr);
    c_ok += m.bounded && n.bounded && m.injected_dissipation <= n.injected_dissipation;
  }

  double worst = 0.0;
  for (double shortage : {2.0, 5.0, 12.0, 30.0}) {
    Scenario s = base;
    s.field = ForceFieldSpec::negative_damping(shortage);
    PlainTdpaController plain(s.velocity_deadband);
    const auto reference = run_interconnection_with(s, plain);
    const auto budgeted = run_interconnection(s, 0.0);
    worst = std::max(worst,
                     std::fabs(reference.injected_dissipation - budgeted.injected_dissipation));
  }
  const bool d_ok = worst <= 1e-9;

  report("AC6", a_ok && b_ok && c_ok == 20 && d_ok,
         "(a) SoP " + fmt(sop) + " < budget " + fmt(budget) + ", injected " +
             fmt(with.injected_dissipation) + " J; (b) without map injected " +
             fmt(without.injected_dissipation) + " J, min W " + fmt(without.min_observed, 3) +
             " J; (c) with-map <= without-map in " + std::to_string(c_ok) +
             "/20; (d) plain TDPA max diff " + fmt(worst, 3) + " J");
}

void ac7(const fs::path& a, const fs::path& b, int code_a, int code_b) {
  std::size_t compared = 0;
  std::vector<std::string> mismatched;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext != ".csv" && ext != ".json") continue;
    const auto rel = fs::relative(entry.path(), a);
    ++compared;
    if (!fs::exists(b / rel) || slurp(entry.path()) != slurp(b / rel)) {
      mismatched.push_back(rel.string());
    }
  }
  std::size_t in_b = 0;
  for (const auto& entry : fs::recursive_directory_iterator(b)) {
    const auto ext = entry.path().extension();
    in_b += entry.is_regular_file() && (ext == ".csv" || ext == ".json");
  }
  report("AC7", code_a == 0 && code_b == 0 && compared > 0 && mismatched.empty() &&
                    in_b == compared,
         std::to_string(compared) + " CSV/JSON files compared, " +
             std::to_string(mismatched.size()) + " differ" +
             (mismatched.empty() ? "" : " (first " + mismatched.front() + ")"));
}

void ac8(const fs::path& run) {
  const auto map = read_map(run / "analysis" / "maps" / "median.json");
  int nodes = 0, exact = 0;
  for (const auto& [key, cell] : map.cells()) {
    ++nodes;
    exact += lookup(map, key.direction, cell.mean_pct_mvc, map.frequency_of(key.band)) == cell.xi;
  }
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<int> dirs(0, kDirections - 1);
  std::uniform_real_distribution<double> pct(0.0, 1.0);
  std::uniform_real_distribution<double> freq(map.frequencies().front(),
                                              map.frequencies().back());
  int inside = 0;
  for (int q = 0; q < 1000; ++q) {
    const int d = dirs(rng);
    const double value = lookup(map, d, pct(rng), freq(rng));
    double lo = INFINITY, hi = -INFINITY;
    for (auto a : {ActivationLevel::kRelaxed, ActivationLevel::kStiff}) {
      for (auto b : map.bands()) {
        const double xi = map.find({d, a, b})->xi;
        lo = std::min(lo, xi);
        hi = std::max(hi, xi);
      }
    }
    inside += value >= lo && value <= hi;
  }
  report("AC8", nodes == 32 && exact == nodes && inside == 1000,
         std::to_string(exact) + "/" + std::to_string(nodes) + " node queries exact, " +
             std::to_string(inside) + "/1000 random queries inside their node hull");
}

template <class F>
void guarded(const char* id, F&& check) {
  try {
    check();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "myopass_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path run_a = work / "run_a";
  const fs::path run_b = work / "run_b";

  guarded("AC1", ac1);
  guarded("AC2", ac2);

  const auto start = Clock::now();
  const int code_a = run_all(run_a);
  const double elapsed = seconds_since(start);
  const int code_b = run_all(run_b);

  guarded("AC3", [&] { ac3(run_a, elapsed, code_a); });
  guarded("AC4", ac4);
  guarded("AC5", [&] { ac5(run_a); });
  guarded("AC6", [&] { ac6(run_a); });
  guarded("AC7", [&] { ac7(run_a, run_b, code_a, code_b); });
  guarded("AC8", [&] { ac8(run_a); });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
