#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "myopass/biomech.hpp"
#include "myopass/gmp.hpp"
#include "myopass/passivity.hpp"
#include "myopass/stabilizer.hpp"
#include "myopass/stats.hpp"

namespace myopass {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kFormatSchemaVersion = 1;

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitAnalysis = 4,
  kExitRefused = 5,
};

struct ScenarioConfig {
  std::string field = "negative-damping";  // or "delayed-spring"
  double sop = 5.0;                        // N s/m, negative-damping field
  double spring_gain = 0.0;                // N/m, delayed-spring field
  double delay = 0.0;                      // s
  double frequency = 1.0;                  // Hz
  double amplitude = 0.02;                 // m
  int direction = 0;
  double activation = 0.4;
  double duration = 10.0;
  double rate = 1000.0;
  double safety_factor = 0.8;
  double servo_stiffness = 20000.0;
  double servo_damping = 40.0;
  std::uint64_t seed = 7;
  std::string limb_file;  // optional subject parameter file

  Scenario to_scenario() const;
};

struct StudyConfig {
  // cohort
  int subjects = 5;
  double jitter = 0.2;
  std::uint64_t seed = 2024;
  // protocol
  std::vector<double> frequencies{1.0, 3.0};
  double duration = 10.0;
  double analysis_window = 5.0;
  double amplitude = 0.02;
  double ramp_time = 1.0;
  double relaxed_target = 0.05;
  double stiff_target = 0.40;
  double tracking_noise = 0.03;
  double rise_time = 0.3;
  double noise_correlation = 0.05;
  // rates
  double robot_rate = 1000.0;
  double emg_rate = kDefaultEmgRate;
  // emg
  double rms_window = kDefaultRmsWindow;
  double rms_stride = kDefaultRmsStride;
  std::vector<std::size_t> feedback_channels{kDefaultFeedbackChannels.begin(),
                                             kDefaultFeedbackChannels.end()};
  int mvc_repetitions = 2;
  double mvc_duration = 3.0;
  // analysis
  bool project_on_axis = false;
  double max_missing_fraction = 0.10;
  // stats
  stats::Sidedness contrast_sidedness = stats::Sidedness::kTwoSided;
  /// Five subjects cannot reach p < 0.05 two-sided, hence the default.
  stats::Sidedness slope_sidedness = stats::Sidedness::kGreater;
  // output
  std::filesystem::path out_dir = "out";
  int jobs = 1;

  ScenarioConfig scenario;

  /// Throws ConfigError describing the first invalid value.
  void validate() const;
  Window analysis_window_span() const {
    return {duration - analysis_window, duration};
  }
  std::vector<TestCondition> tests() const;
};

/// Reads the sectioned key=value format. Unknown sections or keys are
/// rejected with ConfigError.
StudyConfig load_config(const std::filesystem::path& path);
StudyConfig parse_config(const std::string& text);
/// Canonical key=value text of every setting.
std::string render_config(const StudyConfig& config);
nlohmann::json config_to_json(const StudyConfig& config);

/// Subject parameter files use the same format ([limb] and [emg] sections).
void write_subject_file(const std::filesystem::path& path, const Subject& subject);
Subject read_subject_file(const std::filesystem::path& path);

struct TrialEntry {
  TestCondition test;
  int direction = 0;
  double frequency = 0.0;
  double activation_command = 0.0;
  std::uint64_t seed = 0;
  std::string trial_csv;  // relative to the manifest directory
  std::string emg_csv;
};

struct SubjectEntry {
  Subject subject;
  std::string params_file;
  MvcCalibration calibration;
  std::vector<std::string> mvc_recordings;
  std::vector<TestCondition> test_order;
  std::vector<TrialEntry> trials;
};

struct RunManifest {
  StudyConfig config;
  std::vector<SubjectEntry> subjects;

  std::size_t trial_count() const;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

/// Trial files: robot-rate table t,fx,fy,vx,vy,emg1..emg4 (EMG linearly
/// resampled to the robot grid) and the EMG companion t,emg1..emg4 at its
/// own rate.
void write_trial_files(const std::filesystem::path& trial_csv,
                       const std::filesystem::path& emg_csv, const TrialRecord& trial);
TrialRecord read_trial_files(const std::filesystem::path& trial_csv,
                             const std::filesystem::path& emg_csv, double robot_rate,
                             double emg_rate);

/// EoP rows: subject,direction,activation,frequency,xi,pct_mvc,numerator,denominator.
void write_eop_csv(const std::filesystem::path& path,
                   const std::vector<EopEstimate>& estimates);
std::vector<EopEstimate> read_eop_csv(const std::filesystem::path& path,
                                      const std::vector<double>& frequencies);

/// Runs `task(i)` for i in [0, count) on `jobs` worker threads; rethrows the
/// first failure after all workers stop.
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& task);

/// Activation command that puts the displayed pooled %MVC on `target_pct`.
double activation_command(double target_pct, const Subject& subject,
                          const MvcCalibration& cal,
                          const std::vector<std::size_t>& feedback);

/// Stage 1 (two MVC grasps) then stage 2 (tests in per-subject random order,
/// eight directions each) for every subject; writes trials and the manifest
/// under config.out_dir.
RunManifest cmd_simulate(const StudyConfig& config);

struct AnalysisResult {
  std::vector<EopEstimate> estimates;
  std::vector<GmpMap> subject_maps;
  std::optional<GmpMap> median;
  std::size_t missing_trials = 0;
  std::vector<std::string> warnings;
};

/// Estimates EoP on the analysis window of every trial and writes
/// analysis/eop.csv, analysis/maps/*.json and analysis/spider/*.csv. Throws
/// AnalysisError (after writing) when more than max_missing_fraction of the
/// trials are missing.
AnalysisResult cmd_analyze(const std::filesystem::path& manifest_path,
                           int jobs = 1);

struct ContrastResult {
  std::string name;
  std::string group_a;
  std::string group_b;
  stats::Sidedness sidedness = stats::Sidedness::kTwoSided;
  std::optional<stats::TestResult> result;
  std::string status = "ok";  // "ok", "degenerate:" or "insufficient:" message
  double p_value() const { return result ? result->p_value : 1.0; }
  std::string mark() const { return result ? result->mark : ""; }
};

struct GroupSummary {
  std::string code;
  std::vector<double> values;
  std::optional<stats::TestResult> normality;
  std::string normality_status = "ok";
  stats::BoxSummary box;
};

struct SubjectTrend {
  int subject = 0;
  std::optional<TrendLine> low;
  std::optional<TrendLine> high;
};

struct StatsReport {
  std::vector<GroupSummary> groups;
  std::vector<ContrastResult> contrasts;
  std::vector<SubjectTrend> trends;
  std::optional<ContrastResult> slope_contrast;
};

/// Statistics over a set of estimates (no file IO).
StatsReport compute_stats(const std::vector<EopEstimate>& estimates,
                          stats::Sidedness contrasts = stats::Sidedness::kTwoSided,
                          stats::Sidedness slopes = stats::Sidedness::kGreater);
/// Reads analysis/eop.csv under `out_dir`, writes stats/report.json,
/// stats/report.csv, stats/box.csv and stats/trends.csv.
StatsReport cmd_stats(const std::filesystem::path& out_dir,
                      const std::vector<double>& frequencies,
                      stats::Sidedness contrasts = stats::Sidedness::kTwoSided,
                      stats::Sidedness slopes = stats::Sidedness::kGreater);

struct StabilizeReport {
  InterconnectionResult without_map;
  std::optional<InterconnectionResult> with_map;
  std::optional<DissipationSavings> savings;
};

/// Runs the configured scenario without a map and, when `map_path` is
/// given, with the map budget; writes stabilize/*.csv and summary.json.
/// Throws OutOfRangeError when the scenario frequency is outside the map.
StabilizeReport cmd_stabilize(const StudyConfig& config,
                              const std::optional<std::filesystem::path>& map_path);

/// simulate, analyze, stats, then stabilize against the cohort median map.
void cmd_all(const StudyConfig& config);

}  // namespace myopass
