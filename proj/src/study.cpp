#include "myopass/study.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "myopass/errors.hpp"
#include "myopass/seeding.hpp"

namespace myopass {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kCsvDigits = 10;
constexpr int kEopDigits = 12;

// Seed streams.
constexpr std::uint64_t kStreamCohort = 0x5C0u;
constexpr std::uint64_t kStreamMvc = 0x5C1u;
constexpr std::uint64_t kStreamOrder = 0x5C2u;
constexpr std::uint64_t kStreamTrial = 0x5C3u;

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("'" + key + "': expected a number, got '" + text + "'");
  }
  return value;
}

long long parse_integer(const std::string& key, const std::string& text) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("'" + key + "': expected an integer, got '" + text + "'");
  }
  return value;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("'" + key + "': expected a non-negative integer, got '" + text + "'");
  }
  return value;
}

stats::Sidedness parse_sidedness_key(const std::string& key, const std::string& text) {
  try {
    return stats::parse_sidedness(text);
  } catch (const DomainError&) {
    throw ConfigError("'" + key + "': expected two-sided, greater or less, got '" + text + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("'" + key + "': expected true or false, got '" + text + "'");
}

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) items.push_back(trim(item));
  return items;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& text) {
  std::vector<double> values;
  for (const auto& item : split_list(text)) values.push_back(parse_double(key, item));
  return values;
}

// Shortest text that reads back to the same double.
std::string num(double value) {
  if (value == 0.0) return "0";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::string join_doubles(const std::vector<double>& values) {
  std::string text;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text += ',';
    text += num(values[i]);
  }
  return text;
}


struct Field {
  const char* section;
  const char* key;
  std::function<void(StudyConfig&, const std::string&)> set;
  std::function<std::string(const StudyConfig&)> get;
};

std::string full_key(const char* section, const char* key) {
  return std::string(section) + "." + key;
}

#define MYOPASS_DOUBLE(section, key, member)                                        \
  Field {                                                                         \
    section, key,                                                                 \
        [](StudyConfig& c, const std::string& v) {                                \
          c.member = parse_double(full_key(section, key), v);                     \
        },                                                                        \
        [](const StudyConfig& c) { return num(c.member); }                        \
  }

#define MYOPASS_INT(section, key, member)                                           \
  Field {                                                                         \
    section, key,                                                                 \
        [](StudyConfig& c, const std::string& v) {                                \
          c.member = static_cast<int>(parse_integer(full_key(section, key), v));  \
        },                                                                        \
        [](const StudyConfig& c) { return std::to_string(c.member); }             \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      MYOPASS_INT("cohort", "subjects", subjects),
      MYOPASS_DOUBLE("cohort", "jitter", jitter),
      Field{"cohort", "seed",
            [](StudyConfig& c, const std::string& v) { c.seed = parse_unsigned("cohort.seed", v); },
            [](const StudyConfig& c) { return std::to_string(c.seed); }},
      Field{"protocol", "frequencies",
            [](StudyConfig& c, const std::string& v) {
              c.frequencies = parse_double_list("protocol.frequencies", v);
            },
            [](const StudyConfig& c) { return join_doubles(c.frequencies); }},
      MYOPASS_DOUBLE("protocol", "duration", duration),
      MYOPASS_DOUBLE("protocol", "analysis_window", analysis_window),
      MYOPASS_DOUBLE("protocol", "amplitude", amplitude),
      MYOPASS_DOUBLE("protocol", "ramp_time", ramp_time),
      MYOPASS_DOUBLE("protocol", "relaxed_target", relaxed_target),
      MYOPASS_DOUBLE("protocol", "stiff_target", stiff_target),
      MYOPASS_DOUBLE("protocol", "tracking_noise", tracking_noise),
      MYOPASS_DOUBLE("protocol", "rise_time", rise_time),
      MYOPASS_DOUBLE("protocol", "noise_correlation", noise_correlation),
      MYOPASS_DOUBLE("rates", "robot", robot_rate),
      MYOPASS_DOUBLE("rates", "emg", emg_rate),
      MYOPASS_DOUBLE("emg", "rms_window", rms_window),
      MYOPASS_DOUBLE("emg", "rms_stride", rms_stride),
      Field{"emg", "feedback_channels",
            [](StudyConfig& c, const std::string& v) {
              c.feedback_channels.clear();
              for (const auto& item : split_list(v)) {
                c.feedback_channels.push_back(static_cast<std::size_t>(
                    parse_unsigned("emg.feedback_channels", item)));
              }
            },
            [](const StudyConfig& c) {
              std::string text;
              for (std::size_t i = 0; i < c.feedback_channels.size(); ++i) {
                if (i) text += ',';
                text += std::to_string(c.feedback_channels[i]);
              }
              return text;
            }},
      MYOPASS_INT("emg", "mvc_repetitions", mvc_repetitions),
      MYOPASS_DOUBLE("emg", "mvc_duration", mvc_duration),
      Field{"analysis", "project_on_axis",
            [](StudyConfig& c, const std::string& v) {
              c.project_on_axis = parse_bool("analysis.project_on_axis", v);
            },
            [](const StudyConfig& c) { return std::string(c.project_on_axis ? "true" : "false"); }},
      MYOPASS_DOUBLE("analysis", "max_missing_fraction", max_missing_fraction),
      Field{"stats", "contrast_sidedness",
            [](StudyConfig& c, const std::string& v) {
              c.contrast_sidedness = parse_sidedness_key("stats.contrast_sidedness", v);
            },
            [](const StudyConfig& c) { return std::string(stats::to_string(c.contrast_sidedness)); }},
      Field{"stats", "slope_sidedness",
            [](StudyConfig& c, const std::string& v) {
              c.slope_sidedness = parse_sidedness_key("stats.slope_sidedness", v);
            },
            [](const StudyConfig& c) { return std::string(stats::to_string(c.slope_sidedness)); }},
      Field{"output", "dir",
            [](StudyConfig& c, const std::string& v) { c.out_dir = v; },
            [](const StudyConfig& c) { return c.out_dir.generic_string(); }},
      MYOPASS_INT("output", "jobs", jobs),
      Field{"scenario", "field",
            [](StudyConfig& c, const std::string& v) { c.scenario.field = v; },
            [](const StudyConfig& c) { return c.scenario.field; }},
      MYOPASS_DOUBLE("scenario", "sop", scenario.sop),
      MYOPASS_DOUBLE("scenario", "spring_gain", scenario.spring_gain),
      MYOPASS_DOUBLE("scenario", "delay", scenario.delay),
      MYOPASS_DOUBLE("scenario", "frequency", scenario.frequency),
      MYOPASS_DOUBLE("scenario", "amplitude", scenario.amplitude),
      MYOPASS_INT("scenario", "direction", scenario.direction),
      MYOPASS_DOUBLE("scenario", "activation", scenario.activation),
      MYOPASS_DOUBLE("scenario", "duration", scenario.duration),
      MYOPASS_DOUBLE("scenario", "rate", scenario.rate),
      MYOPASS_DOUBLE("scenario", "safety_factor", scenario.safety_factor),
      MYOPASS_DOUBLE("scenario", "servo_stiffness", scenario.servo_stiffness),
      MYOPASS_DOUBLE("scenario", "servo_damping", scenario.servo_damping),
      Field{"scenario", "seed",
            [](StudyConfig& c, const std::string& v) {
              c.scenario.seed = parse_unsigned("scenario.seed", v);
            },
            [](const StudyConfig& c) { return std::to_string(c.scenario.seed); }},
      Field{"scenario", "limb_file",
            [](StudyConfig& c, const std::string& v) { c.scenario.limb_file = v; },
            [](const StudyConfig& c) { return c.scenario.limb_file; }},
  };
  return table;
}

#undef MYOPASS_DOUBLE
#undef MYOPASS_INT

boost::property_tree::ptree parse_ini(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  return tree;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_json(const fs::path& path, const json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string subject_tag(int id) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "subject_%02d", id);
  return buffer;
}

std::string text_csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char ch : text) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + "\"";
}

void write_text_csv(const fs::path& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
  std::string text;
  auto append_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) text += ',';
      text += text_csv_field(row[i]);
    }
    text += '\n';
  };
  append_row(header);
  for (const auto& row : rows) append_row(row);
  write_text(path, text);
}

json number_or_null(double value) {
  return std::isfinite(value) ? json(value) : json(nullptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

Scenario ScenarioConfig::to_scenario() const {
  Scenario s;
  if (!limb_file.empty()) s.limb = read_subject_file(limb_file).limb;
  if (field == "negative-damping") {
    s.field = ForceFieldSpec::negative_damping(sop);
  } else if (field == "delayed-spring") {
    s.field = ForceFieldSpec::delayed_spring(spring_gain, delay);
  } else {
    throw ConfigError("scenario.field must be negative-damping or delayed-spring, got '" +
                      field + "'");
  }
  s.perturbation.frequency = frequency;
  s.perturbation.amplitude = amplitude;
  s.perturbation.direction_index = direction;
  s.perturbation.duration = duration;
  s.activation.target = activation;
  s.servo = {servo_stiffness, servo_damping};
  s.rate = rate;
  s.safety_factor = safety_factor;
  s.seed = seed;
  return s;
}

void StudyConfig::validate() const {
  require(subjects >= 1, "cohort.subjects must be at least 1");
  require(jitter >= 0.0 && jitter < 1.0, "cohort.jitter must lie in [0, 1)");
  require(frequencies.size() == 1 || frequencies.size() == 2,
          "protocol.frequencies must list one or two values");
  for (double f : frequencies) require(f > 0.0, "protocol.frequencies must be positive");
  require(frequencies.size() == 1 || frequencies[0] < frequencies[1],
          "protocol.frequencies must be strictly increasing");
  require(duration > 0.0, "protocol.duration must be positive");
  require(analysis_window > 0.0 && analysis_window <= duration,
          "protocol.analysis_window must lie in (0, duration]");
  require(amplitude > 0.0, "protocol.amplitude must be positive");
  require(ramp_time >= 0.0 && ramp_time < duration, "protocol.ramp_time must lie in [0, duration)");
  require(relaxed_target > 0.0 && relaxed_target <= 1.0,
          "protocol.relaxed_target must lie in (0, 1]");
  require(stiff_target > 0.0 && stiff_target <= 1.0, "protocol.stiff_target must lie in (0, 1]");
  require(tracking_noise >= 0.0, "protocol.tracking_noise must be non-negative");
  require(rise_time > 0.0, "protocol.rise_time must be positive");
  require(noise_correlation > 0.0, "protocol.noise_correlation must be positive");
  require(robot_rate > 0.0 && emg_rate > 0.0, "rates must be positive");
  for (double f : frequencies) {
    require(robot_rate >= 20.0 * f, "rates.robot must be at least 20 samples per period");
  }
  require(rms_window > 0.0 && rms_stride > 0.0, "emg.rms_window and emg.rms_stride must be positive");
  require(rms_window <= analysis_window && rms_window < mvc_duration,
          "emg.rms_window must fit inside the analysis window and the MVC effort");
  require(!feedback_channels.empty(), "emg.feedback_channels must not be empty");
  for (std::size_t c : feedback_channels) {
    require(c < kEmgChannels, "emg.feedback_channels entries must be below " +
                                  std::to_string(kEmgChannels));
  }
  require(mvc_repetitions >= 1, "emg.mvc_repetitions must be at least 1");
  require(mvc_duration > 0.0, "emg.mvc_duration must be positive");
  require(max_missing_fraction >= 0.0 && max_missing_fraction <= 1.0,
          "analysis.max_missing_fraction must lie in [0, 1]");
  require(jobs >= 1, "output.jobs must be at least 1");

  const auto& s = scenario;
  require(s.field == "negative-damping" || s.field == "delayed-spring",
          "scenario.field must be negative-damping or delayed-spring");
  require(s.spring_gain >= 0.0 && s.delay >= 0.0,
          "scenario.spring_gain and scenario.delay must be non-negative");
  require(s.frequency > 0.0 && s.amplitude > 0.0 && s.duration > 0.0,
          "scenario frequency, amplitude and duration must be positive");
  require(s.direction >= 0 && s.direction < kDirections, "scenario.direction must lie in 0..7");
  require(s.activation >= 0.0 && s.activation <= 1.0, "scenario.activation must lie in [0, 1]");
  require(s.rate >= 1000.0, "scenario.rate must be at least 1000 Hz");
  require(s.safety_factor >= 0.0 && s.safety_factor <= 1.0,
          "scenario.safety_factor must lie in [0, 1]");
  require(s.servo_stiffness > 0.0 && s.servo_damping >= 0.0,
          "scenario servo gains must be positive");
}

std::vector<TestCondition> StudyConfig::tests() const {
  std::vector<TestCondition> list;
  for (std::size_t b = 0; b < frequencies.size(); ++b) {
    for (auto level : {ActivationLevel::kRelaxed, ActivationLevel::kStiff}) {
      list.push_back({b == 0 ? FrequencyBand::kLow : FrequencyBand::kHigh, level});
    }
  }
  return list;
}

StudyConfig parse_config(const std::string& text) {
  const auto tree = parse_ini(text);
  StudyConfig config;
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      throw ConfigError("key '" + section + "' must belong to a section");
    }
    for (const auto& [key, value] : entries) {
      const auto field = std::find_if(fields().begin(), fields().end(), [&](const Field& f) {
        return section == f.section && key == f.key;
      });
      if (field == fields().end()) {
        throw ConfigError("unknown config key '" + section + "." + key + "'");
      }
      field->set(config, trim(value.data()));
    }
  }
  config.validate();
  return config;
}

StudyConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string render_config(const StudyConfig& config) {
  std::string text;
  std::string section;
  for (const auto& field : fields()) {
    if (section != field.section) {
      if (!section.empty()) text += '\n';
      section = field.section;
      text += "[" + section + "]\n";
    }
    text += std::string(field.key) + " = " + field.get(config) + "\n";
  }
  return text;
}

json config_to_json(const StudyConfig& config) {
  // Output location and worker count do not influence results, so they are
  // left out of the snapshot.
  json doc = json::object();
  for (const auto& field : fields()) {
    if (std::string(field.section) == "output") continue;
    doc[field.section][field.key] = field.get(config);
  }
  return doc;
}

namespace {

StudyConfig config_from_json(const json& doc) {
  std::string text;
  for (const auto& [section, entries] : doc.items()) {
    text += "[" + section + "]\n";
    for (const auto& [key, value] : entries.items()) {
      text += key + " = " + value.get<std::string>() + "\n";
    }
  }
  return parse_config(text);
}

}  // namespace

// ---------------------------------------------------------------------------
// Subject files

void write_subject_file(const fs::path& path, const Subject& subject) {
  const auto& limb = subject.limb;
  std::string text = "[subject]\nid = " + std::to_string(subject.id) + "\n\n[limb]\n";
  text += "mass = " + num(limb.mass) + "\n";
  text += "base_damping = " + num(limb.base_damping) + "\n";
  text += "stiffness = " + num(limb.stiffness) + "\n";
  text += "maxwell_stiffness = " + num(limb.maxwell_stiffness) + "\n";
  text += "maxwell_damping_base = " + num(limb.maxwell_damping_base) + "\n";
  text += "maxwell_damping_gain = " + num(limb.maxwell_damping_gain) + "\n";
  text += "direction_gain = " +
          join_doubles({limb.direction_gain.begin(), limb.direction_gain.end()}) + "\n";
  text += "\n[emg]\nmvc_rms = " +
          join_doubles({subject.emg_mvc_rms.begin(), subject.emg_mvc_rms.end()}) + "\n";
  write_text(path, text);
}

Subject read_subject_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read subject file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const auto tree = parse_ini(buffer.str());
  auto get = [&](const std::string& key) {
    const auto value = tree.get_optional<std::string>(key);
    if (!value) throw ConfigError("subject file lacks '" + key + "'");
    return trim(*value);
  };
  auto fixed_list = [&](const std::string& key, auto& target) {
    const auto values = parse_double_list(key, get(key));
    if (values.size() != target.size()) {
      throw ConfigError("'" + key + "' needs " + std::to_string(target.size()) + " values");
    }
    std::copy(values.begin(), values.end(), target.begin());
  };
  Subject s;
  s.id = static_cast<int>(parse_integer("subject.id", get("subject.id")));
  s.limb.mass = parse_double("limb.mass", get("limb.mass"));
  s.limb.base_damping = parse_double("limb.base_damping", get("limb.base_damping"));
  s.limb.stiffness = parse_double("limb.stiffness", get("limb.stiffness"));
  s.limb.maxwell_stiffness = parse_double("limb.maxwell_stiffness", get("limb.maxwell_stiffness"));
  s.limb.maxwell_damping_base =
      parse_double("limb.maxwell_damping_base", get("limb.maxwell_damping_base"));
  s.limb.maxwell_damping_gain =
      parse_double("limb.maxwell_damping_gain", get("limb.maxwell_damping_gain"));
  fixed_list("limb.direction_gain", s.limb.direction_gain);
  fixed_list("emg.mvc_rms", s.emg_mvc_rms);
  try {
    s.limb.validate();
  } catch (const DomainError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Manifest

std::size_t RunManifest::trial_count() const {
  std::size_t n = 0;
  for (const auto& s : subjects) n += s.trials.size();
  return n;
}

namespace {

json limb_to_json(const LimbParams& limb) {
  return {{"mass", limb.mass},
          {"base_damping", limb.base_damping},
          {"stiffness", limb.stiffness},
          {"maxwell_stiffness", limb.maxwell_stiffness},
          {"maxwell_damping_base", limb.maxwell_damping_base},
          {"maxwell_damping_gain", limb.maxwell_damping_gain},
          {"direction_gain", limb.direction_gain}};
}

LimbParams limb_from_json(const json& doc) {
  LimbParams limb;
  limb.mass = doc.at("mass").get<double>();
  limb.base_damping = doc.at("base_damping").get<double>();
  limb.stiffness = doc.at("stiffness").get<double>();
  limb.maxwell_stiffness = doc.at("maxwell_stiffness").get<double>();
  limb.maxwell_damping_base = doc.at("maxwell_damping_base").get<double>();
  limb.maxwell_damping_gain = doc.at("maxwell_damping_gain").get<double>();
  limb.direction_gain = doc.at("direction_gain").get<std::array<double, kDirections>>();
  return limb;
}

}  // namespace

void write_manifest(const fs::path& path, const RunManifest& manifest) {
  const fs::path root = path.parent_path();
  json subjects = json::array();
  for (const auto& entry : manifest.subjects) {
    // Checked here so a manifest never points at a file that was not written.
    auto check = [&](const std::string& relative) {
      if (!fs::exists(root / relative)) {
        throw IoError("manifest entry '" + relative + "' does not exist");
      }
      return relative;
    };
    json trials = json::array();
    for (const auto& t : entry.trials) {
      trials.push_back({{"test", test_code(t.test)},
                        {"direction", t.direction},
                        {"activation", std::string(to_string(t.test.activation))},
                        {"band", std::string(to_string(t.test.band))},
                        {"frequency", t.frequency},
                        {"activation_command", t.activation_command},
                        {"seed", t.seed},
                        {"trial_csv", check(t.trial_csv)},
                        {"emg_csv", check(t.emg_csv)}});
    }
    json order = json::array();
    for (const auto& test : entry.test_order) order.push_back(test_code(test));
    json recordings = json::array();
    for (const auto& r : entry.mvc_recordings) recordings.push_back(check(r));
    subjects.push_back(
        {{"id", entry.subject.id},
         {"params_file", check(entry.params_file)},
         {"limb", limb_to_json(entry.subject.limb)},
         {"emg_mvc_true", entry.subject.emg_mvc_rms},
         {"mvc",
          {{"mvc_rms", entry.calibration.mvc_rms},
           {"repetitions", entry.calibration.repetitions},
           {"effort_duration", entry.calibration.effort_duration},
           {"recordings", recordings}}},
         {"test_order", order},
         {"trials", trials}});
  }
  json doc = {{"toolkit", {{"name", "myopass"}, {"version", kToolkitVersion}}},
              {"format_schema", kFormatSchemaVersion},
              {"seed", manifest.config.seed},
              {"config", config_to_json(manifest.config)},
              {"subjects", subjects}};
  write_json(path, doc);
}

RunManifest read_manifest(const fs::path& path) {
  const json doc = read_json(path);
  try {
    if (doc.at("format_schema").get<int>() != kFormatSchemaVersion) {
      throw IoError("unsupported manifest schema in '" + path.string() + "'");
    }
    RunManifest manifest;
    manifest.config = config_from_json(doc.at("config"));
    manifest.config.out_dir = path.parent_path();
    for (const auto& s : doc.at("subjects")) {
      SubjectEntry entry;
      entry.subject.id = s.at("id").get<int>();
      entry.subject.limb = limb_from_json(s.at("limb"));
      entry.subject.emg_mvc_rms = s.at("emg_mvc_true").get<std::array<double, kEmgChannels>>();
      entry.params_file = s.at("params_file").get<std::string>();
      const auto& mvc = s.at("mvc");
      entry.calibration.mvc_rms = mvc.at("mvc_rms").get<std::vector<double>>();
      entry.calibration.repetitions = mvc.at("repetitions").get<int>();
      entry.calibration.effort_duration = mvc.at("effort_duration").get<double>();
      entry.mvc_recordings = mvc.at("recordings").get<std::vector<std::string>>();
      for (const auto& code : s.at("test_order")) {
        entry.test_order.push_back(parse_test_code(code.get<std::string>()));
      }
      for (const auto& t : s.at("trials")) {
        TrialEntry trial;
        trial.test = parse_test_code(t.at("test").get<std::string>());
        trial.direction = t.at("direction").get<int>();
        trial.frequency = t.at("frequency").get<double>();
        trial.activation_command = t.at("activation_command").get<double>();
        trial.seed = t.at("seed").get<std::uint64_t>();
        trial.trial_csv = t.at("trial_csv").get<std::string>();
        trial.emg_csv = t.at("emg_csv").get<std::string>();
        entry.trials.push_back(trial);
      }
      manifest.subjects.push_back(std::move(entry));
    }
    return manifest;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest '" + path.string() + "': " + e.what());
  } catch (const DomainError& e) {
    throw IoError("malformed manifest '" + path.string() + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Trial files

void write_trial_files(const fs::path& trial_csv, const fs::path& emg_csv,
                       const TrialRecord& trial) {
  const std::size_t n = trial.force.size();
  CsvTable robot;
  robot.header = {"t", "fx", "fy", "vx", "vy"};
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = trial.force.time_at(k);
  robot.columns.push_back(t);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto ch = trial.force.channel(c);
    robot.columns.emplace_back(ch.begin(), ch.end());
  }
  for (std::size_t c = 0; c < 2; ++c) {
    const auto ch = trial.velocity.channel(c);
    robot.columns.emplace_back(ch.begin(), ch.end());
  }
  if (!trial.emg.empty()) {
    const auto on_grid = resample_linear(trial.emg, trial.force.sample_rate(),
                                         trial.force.start_time(), n);
    for (std::size_t c = 0; c < on_grid.channel_count(); ++c) {
      robot.header.push_back(on_grid.labels()[c]);
      const auto ch = on_grid.channel(c);
      robot.columns.emplace_back(ch.begin(), ch.end());
    }
  }
  write_csv(trial_csv, robot, kCsvDigits);

  CsvTable emg;
  emg.header = {"t"};
  std::vector<double> te(trial.emg.size());
  for (std::size_t k = 0; k < te.size(); ++k) te[k] = trial.emg.time_at(k);
  emg.columns.push_back(te);
  for (std::size_t c = 0; c < trial.emg.channel_count(); ++c) {
    emg.header.push_back(trial.emg.labels()[c]);
    const auto ch = trial.emg.channel(c);
    emg.columns.emplace_back(ch.begin(), ch.end());
  }
  write_csv(emg_csv, emg, kCsvDigits);
}

TrialRecord read_trial_files(const fs::path& trial_csv, const fs::path& emg_csv,
                             double robot_rate, double emg_rate) {
  const CsvTable robot = read_csv(trial_csv);
  const CsvTable emg = read_csv(emg_csv);
  if (robot.rows() < 2) throw IoError("'" + trial_csv.string() + "' holds too few samples");
  const double start = robot.column("t").front();
  TrialRecord trial;
  trial.force = SampledSignal(robot_rate, start, {"fx", "fy"},
                              {robot.column("fx"), robot.column("fy")}, "N");
  trial.velocity = SampledSignal(robot_rate, start, {"vx", "vy"},
                                 {robot.column("vx"), robot.column("vy")}, "m/s");
  std::vector<std::string> labels;
  std::vector<std::vector<double>> data;
  for (std::size_t c = 0; c < emg.header.size(); ++c) {
    if (emg.header[c] == "t") continue;
    labels.push_back(emg.header[c]);
    data.push_back(emg.columns[c]);
  }
  if (!data.empty() && emg.rows() > 0) {
    trial.emg = SampledSignal(emg_rate, emg.column("t").front(), std::move(labels),
                              std::move(data), "mV");
  }
  return trial;
}

void write_eop_csv(const fs::path& path, const std::vector<EopEstimate>& estimates) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : estimates) {
    rows.push_back({std::to_string(e.subject_id), std::to_string(e.direction_index),
                    std::string(to_string(e.activation)), format_number(e.frequency, kEopDigits),
                    format_number(e.xi, kEopDigits), format_number(e.mean_pct_mvc, kEopDigits),
                    format_number(e.numerator, kEopDigits),
                    format_number(e.denominator, kEopDigits)});
  }
  write_text_csv(path,
                 {"subject", "direction", "activation", "frequency", "xi", "pct_mvc",
                  "numerator", "denominator"},
                 rows);
}

std::vector<EopEstimate> read_eop_csv(const fs::path& path,
                                      const std::vector<double>& frequencies) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) ||
      line != "subject,direction,activation,frequency,xi,pct_mvc,numerator,denominator") {
    throw IoError("'" + path.string() + "' is not an EoP table");
  }
  std::vector<EopEstimate> estimates;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto items = split_list(line);
    if (items.size() != 8) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 8 fields");
    }
    try {
      EopEstimate e;
      e.subject_id = static_cast<int>(parse_integer("subject", items[0]));
      e.direction_index = static_cast<int>(parse_integer("direction", items[1]));
      e.activation = parse_activation(items[2]);
      e.frequency = parse_double("frequency", items[3]);
      e.xi = parse_double("xi", items[4]);
      e.mean_pct_mvc = parse_double("pct_mvc", items[5]);
      e.numerator = parse_double("numerator", items[6]);
      e.denominator = parse_double("denominator", items[7]);
      const auto band = std::find_if(frequencies.begin(), frequencies.end(), [&](double f) {
        return std::fabs(f - e.frequency) <= 1e-9 * f;
      });
      if (band == frequencies.end()) {
        throw IoError("frequency " + items[3] + " Hz is not on the protocol grid");
      }
      e.band = band == frequencies.begin() ? FrequencyBand::kLow : FrequencyBand::kHigh;
      estimates.push_back(e);
    } catch (const Error& err) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + err.what());
    }
  }
  return estimates;
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& thread : pool) thread.join();
  if (error) std::rethrow_exception(error);
}

double activation_command(double target_pct, const Subject& subject,
                          const MvcCalibration& cal,
                          const std::vector<std::size_t>& feedback) {
  double ratio = 0.0;
  for (std::size_t c : feedback) ratio += subject.emg_mvc_rms.at(c) / cal.mvc_rms.at(c);
  ratio /= static_cast<double>(feedback.size());
  return std::clamp(target_pct / ratio, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// simulate

RunManifest cmd_simulate(const StudyConfig& config) {
  config.validate();
  const fs::path root = config.out_dir;
  make_dirs(root / "subjects");
  make_dirs(root / "mvc");
  make_dirs(root / "trials");

  RunManifest manifest;
  manifest.config = config;
  const auto cohort =
      make_cohort(config.subjects, config.jitter, derive_seed(config.seed, kStreamCohort));
  const auto tests = config.tests();
  const EnvelopeOptions envelope{config.rms_window, config.rms_stride};

  // Stage 1: calibration grasps, and the per-subject test order.
  for (const auto& subject : cohort) {
    SubjectEntry entry;
    entry.subject = subject;
    const std::string tag = subject_tag(subject.id);
    entry.params_file = "subjects/" + tag + ".ini";
    write_subject_file(root / entry.params_file, subject);

    const auto recordings = simulate_mvc_recordings(
        subject.emg_mvc_rms,
        derive_seed(config.seed, kStreamMvc, static_cast<std::uint64_t>(subject.id)),
        config.mvc_repetitions, config.mvc_duration, config.emg_rate);
    entry.calibration = estimate_mvc(recordings, envelope);
    for (std::size_t r = 0; r < recordings.size(); ++r) {
      const std::string rel = "mvc/" + tag + "_rep" + std::to_string(r + 1) + ".csv";
      CsvTable table;
      table.header = {"t"};
      std::vector<double> t(recordings[r].size());
      for (std::size_t k = 0; k < t.size(); ++k) t[k] = recordings[r].time_at(k);
      table.columns.push_back(t);
      for (std::size_t c = 0; c < recordings[r].channel_count(); ++c) {
        table.header.push_back(recordings[r].labels()[c]);
        const auto ch = recordings[r].channel(c);
        table.columns.emplace_back(ch.begin(), ch.end());
      }
      write_csv(root / rel, table, kCsvDigits);
      entry.mvc_recordings.push_back(rel);
    }

    entry.test_order = tests;
    std::mt19937_64 rng(
        derive_seed(config.seed, kStreamOrder, static_cast<std::uint64_t>(subject.id)));
    std::shuffle(entry.test_order.begin(), entry.test_order.end(), rng);

    make_dirs(root / "trials" / tag);
    for (const auto& test : entry.test_order) {
      const double target =
          test.activation == ActivationLevel::kStiff ? config.stiff_target : config.relaxed_target;
      const auto canonical = static_cast<std::uint64_t>(
          std::find(tests.begin(), tests.end(), test) - tests.begin());
      for (int d = 0; d < kDirections; ++d) {
        TrialEntry trial;
        trial.test = test;
        trial.direction = d;
        trial.frequency = config.frequencies[test.band == FrequencyBand::kLow ? 0 : 1];
        trial.activation_command =
            activation_command(target, subject, entry.calibration, config.feedback_channels);
        trial.seed = derive_seed(config.seed, kStreamTrial,
                                 static_cast<std::uint64_t>(subject.id) * 1000 + canonical * 10 +
                                     static_cast<std::uint64_t>(d));
        const std::string stem =
            "trials/" + tag + "/" + test_code(test) + "_dir" + std::to_string(d);
        trial.trial_csv = stem + ".csv";
        trial.emg_csv = stem + "_emg.csv";
        entry.trials.push_back(trial);
      }
    }
    manifest.subjects.push_back(std::move(entry));
  }

  // Stage 2: every trial is independent and writes its own files.
  std::vector<std::pair<std::size_t, std::size_t>> jobs_list;
  for (std::size_t s = 0; s < manifest.subjects.size(); ++s) {
    for (std::size_t t = 0; t < manifest.subjects[s].trials.size(); ++t) {
      jobs_list.emplace_back(s, t);
    }
  }
  parallel_for(jobs_list.size(), config.jobs, [&](std::size_t i) {
    const auto& entry = manifest.subjects[jobs_list[i].first];
    const auto& trial = entry.trials[jobs_list[i].second];
    PerturbationSpec spec;
    spec.frequency = trial.frequency;
    spec.amplitude = config.amplitude;
    spec.direction_index = trial.direction;
    spec.duration = config.duration;
    spec.ramp_time = config.ramp_time;
    ActivationProfile profile;
    profile.target = trial.activation_command;
    profile.tracking_noise = config.tracking_noise;
    profile.rise_time = config.rise_time;
    profile.noise_correlation = config.noise_correlation;
    TrialOptions options;
    options.rate = config.robot_rate;
    options.emg_rate = config.emg_rate;
    options.emg_mvc_rms = entry.subject.emg_mvc_rms;
    options.activation_label = trial.test.activation;
    options.band_label = trial.test.band;
    options.subject_id = entry.subject.id;
    const auto record = simulate_trial(entry.subject.limb, spec, profile, trial.seed, options);
    write_trial_files(root / trial.trial_csv, root / trial.emg_csv, record);
  });

  write_manifest(root / "manifest.json", manifest);
  return manifest;
}

// ---------------------------------------------------------------------------
// analyze

AnalysisResult cmd_analyze(const fs::path& manifest_path, int jobs) {
  const RunManifest manifest = read_manifest(manifest_path);
  const StudyConfig& config = manifest.config;
  const fs::path root = manifest_path.parent_path();
  const fs::path out = root / "analysis";
  make_dirs(out / "maps");
  make_dirs(out / "spider");

  EopOptions options;
  options.project_on_axis = config.project_on_axis;
  options.envelope = {config.rms_window, config.rms_stride};
  options.feedback_channels = config.feedback_channels;
  const Window window = config.analysis_window_span();

  struct Slot {
    const SubjectEntry* subject;
    const TrialEntry* trial;
    std::optional<EopEstimate> estimate;
  };
  std::vector<Slot> slots;
  for (const auto& s : manifest.subjects) {
    for (const auto& t : s.trials) slots.push_back({&s, &t, std::nullopt});
  }

  AnalysisResult result;
  std::vector<char> missing(slots.size(), 0);
  parallel_for(slots.size(), jobs, [&](std::size_t i) {
    auto& slot = slots[i];
    const fs::path trial_csv = root / slot.trial->trial_csv;
    const fs::path emg_csv = root / slot.trial->emg_csv;
    if (!fs::exists(trial_csv) || !fs::exists(emg_csv)) {
      missing[i] = 1;
      return;
    }
    TrialRecord record =
        read_trial_files(trial_csv, emg_csv, config.robot_rate, config.emg_rate);
    record.subject_id = slot.subject->subject.id;
    record.condition = {slot.trial->direction, slot.trial->test.activation,
                        slot.trial->test.band};
    record.spec.frequency = slot.trial->frequency;
    record.spec.amplitude = config.amplitude;
    record.spec.direction_index = slot.trial->direction;
    record.spec.duration = config.duration;
    record.spec.ramp_time = config.ramp_time;
    slot.estimate = estimate_eop(record, window, slot.subject->calibration, options);
  });

  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (missing[i]) {
      ++result.missing_trials;
      result.warnings.push_back("missing trial " + slots[i].trial->trial_csv + " (" +
                                subject_tag(slots[i].subject->subject.id) + " " +
                                test_code(slots[i].trial->test) + " direction " +
                                std::to_string(slots[i].trial->direction) + ")");
    } else {
      result.estimates.push_back(*slots[i].estimate);
    }
  }
  std::sort(result.estimates.begin(), result.estimates.end(),
            [](const EopEstimate& a, const EopEstimate& b) {
              return std::tuple(a.subject_id, a.band, a.activation, a.direction_index) <
                     std::tuple(b.subject_id, b.band, b.activation, b.direction_index);
            });
  write_eop_csv(out / "eop.csv", result.estimates);

  std::vector<GmpMap> complete;
  for (const auto& s : manifest.subjects) {
    std::vector<EopEstimate> own;
    for (const auto& e : result.estimates) {
      if (e.subject_id == s.subject.id) own.push_back(e);
    }
    const std::string tag = subject_tag(s.subject.id);
    GmpMap map = build_map(own, tag, config.frequencies);
    if (!map.complete()) {
      result.warnings.push_back("partial map for " + tag + ": " +
                                std::to_string(map.missing_cells().size()) + " of " +
                                std::to_string(map.expected_cells()) + " cells missing");
    } else {
      complete.push_back(map);
    }
    write_map(out / "maps" / (tag + ".json"), map);
    write_csv(out / "spider" / (tag + ".csv"), spider_table(map), kEopDigits);
    result.subject_maps.push_back(std::move(map));
  }
  if (!complete.empty()) {
    result.median = median_map(complete, "median");
    write_map(out / "maps" / "median.json", *result.median);
    write_csv(out / "spider" / "median.csv", spider_table(*result.median), kEopDigits);
  } else {
    result.warnings.push_back("no complete subject map, median map not written");
  }

  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  const double fraction = slots.empty() ? 0.0
                                        : static_cast<double>(result.missing_trials) /
                                              static_cast<double>(slots.size());
  if (fraction > config.max_missing_fraction) {
    throw AnalysisError(std::to_string(result.missing_trials) + " of " +
                        std::to_string(slots.size()) + " trials are missing");
  }
  return result;
}

// ---------------------------------------------------------------------------
// stats

namespace {

using PairKey = std::pair<int, int>;  // (subject, direction)

std::map<PairKey, double> group_values(const std::vector<EopEstimate>& estimates,
                                       const TestCondition& test) {
  std::map<PairKey, double> values;
  for (const auto& e : estimates) {
    if (e.band == test.band && e.activation == test.activation) {
      values[{e.subject_id, e.direction_index}] = e.xi;
    }
  }
  return values;
}

ContrastResult paired_contrast(const std::string& name, const std::string& a,
                               const std::string& b, const std::vector<double>& x,
                               const std::vector<double>& y, stats::Sidedness side) {
  ContrastResult contrast;
  contrast.name = name;
  contrast.group_a = a;
  contrast.group_b = b;
  contrast.sidedness = side;
  try {
    contrast.result = stats::wilcoxon_signed_rank(x, y, side);
  } catch (const DegenerateError& e) {
    contrast.status = std::string("degenerate: ") + e.what();
  } catch (const DomainError& e) {
    contrast.status = std::string("insufficient: ") + e.what();
  }
  return contrast;
}

json test_to_json(const std::optional<stats::TestResult>& result, const std::string& status) {
  json doc = {{"status", status}};
  if (result) {
    doc["statistic"] = result->statistic;
    doc["p_value"] = result->p_value;
    doc["method"] = std::string(stats::to_string(result->method));
    doc["mark"] = result->mark;
    doc["n"] = result->n;
  } else {
    doc["p_value"] = 1.0;
    doc["mark"] = "";
  }
  return doc;
}

json contrast_to_json(const ContrastResult& c) {
  json doc = test_to_json(c.result, c.status);
  doc["name"] = c.name;
  doc["group_a"] = c.group_a;
  doc["group_b"] = c.group_b;
  doc["sidedness"] = std::string(stats::to_string(c.sidedness));
  return doc;
}

std::vector<std::string> contrast_row(const ContrastResult& c) {
  return {c.name,
          c.group_a,
          c.group_b,
          std::string(stats::to_string(c.sidedness)),
          c.result ? format_number(c.result->statistic, kEopDigits) : "nan",
          format_number(c.p_value(), kEopDigits),
          c.result ? std::string(stats::to_string(c.result->method)) : "",
          c.mark(),
          c.result ? std::to_string(c.result->n) : "0",
          c.status};
}

}  // namespace

StatsReport compute_stats(const std::vector<EopEstimate>& estimates,
                          stats::Sidedness contrasts, stats::Sidedness slopes) {
  StatsReport report;
  std::vector<TestCondition> tests;
  bool has_high = false;
  for (const auto& e : estimates) has_high = has_high || e.band == FrequencyBand::kHigh;
  for (auto band : {FrequencyBand::kLow, FrequencyBand::kHigh}) {
    if (band == FrequencyBand::kHigh && !has_high) continue;
    for (auto level : {ActivationLevel::kRelaxed, ActivationLevel::kStiff}) {
      tests.push_back({band, level});
    }
  }

  std::map<std::string, std::map<PairKey, double>> groups;
  for (const auto& test : tests) {
    const std::string code = test_code(test);
    groups[code] = group_values(estimates, test);
    GroupSummary summary;
    summary.code = code;
    for (const auto& [key, xi] : groups[code]) summary.values.push_back(xi);
    if (!summary.values.empty()) summary.box = stats::box_summary(summary.values);
    try {
      summary.normality = stats::ks_normality(summary.values);
    } catch (const DegenerateError& e) {
      summary.normality_status = std::string("degenerate: ") + e.what();
    } catch (const DomainError& e) {
      summary.normality_status = std::string("insufficient: ") + e.what();
    }
    report.groups.push_back(std::move(summary));
  }

  auto contrast = [&](const std::string& name, const std::string& a, const std::string& b) {
    if (!groups.count(a) || !groups.count(b)) return;
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& [key, xa] : groups[a]) {
      const auto other = groups[b].find(key);
      if (other == groups[b].end()) continue;
      x.push_back(xa);
      y.push_back(other->second);
    }
    report.contrasts.push_back(
        paired_contrast(name, a, b, x, y, contrasts));
  };
  contrast("frequency_relaxed", "LR", "HR");
  contrast("frequency_stiff", "LS", "HS");
  contrast("activation_low", "LS", "LR");
  contrast("activation_high", "HS", "HR");

  std::vector<int> subjects;
  for (const auto& e : estimates) subjects.push_back(e.subject_id);
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  std::vector<double> low_slopes;
  std::vector<double> high_slopes;
  for (int id : subjects) {
    std::vector<EopEstimate> own;
    for (const auto& e : estimates) {
      if (e.subject_id == id) own.push_back(e);
    }
    SubjectTrend trend;
    trend.subject = id;
    try {
      trend.low = fit_trend(own, FrequencyBand::kLow);
    } catch (const SingularFitError&) {
    }
    if (has_high) {
      try {
        trend.high = fit_trend(own, FrequencyBand::kHigh);
      } catch (const SingularFitError&) {
      }
    }
    if (trend.low && trend.high) {
      low_slopes.push_back(trend.low->slope);
      high_slopes.push_back(trend.high->slope);
    }
    report.trends.push_back(trend);
  }
  if (has_high) {
    report.slope_contrast = paired_contrast("slope_low_vs_high", "low", "high", low_slopes,
                                            high_slopes, slopes);
  }
  return report;
}

StatsReport cmd_stats(const fs::path& out_dir, const std::vector<double>& frequencies,
                      stats::Sidedness contrast_side, stats::Sidedness slope_side) {
  const auto estimates = read_eop_csv(out_dir / "analysis" / "eop.csv", frequencies);
  int subject_count = 0;
  {
    std::vector<int> ids;
    for (const auto& e : estimates) ids.push_back(e.subject_id);
    std::sort(ids.begin(), ids.end());
    subject_count = static_cast<int>(std::unique(ids.begin(), ids.end()) - ids.begin());
  }
  if (subject_count < 2) throw AnalysisError("statistics need at least two subjects");
  const StatsReport report = compute_stats(estimates, contrast_side, slope_side);
  const fs::path out = out_dir / "stats";
  make_dirs(out);

  json groups = json::object();
  std::vector<std::vector<std::string>> box_rows;
  for (const auto& g : report.groups) {
    json box = {{"median", g.box.median},
                {"q1", g.box.q1},
                {"q3", g.box.q3},
                {"whisker_low", g.box.whisker_low},
                {"whisker_high", g.box.whisker_high},
                {"outliers", g.box.outliers}};
    groups[g.code] = {{"n", g.values.size()},
                      {"normality", test_to_json(g.normality, g.normality_status)},
                      {"box", box}};
    box_rows.push_back({g.code, std::to_string(g.values.size()),
                        format_number(g.box.median, kEopDigits),
                        format_number(g.box.q1, kEopDigits), format_number(g.box.q3, kEopDigits),
                        format_number(g.box.whisker_low, kEopDigits),
                        format_number(g.box.whisker_high, kEopDigits),
                        std::to_string(g.box.outliers.size())});
  }

  json contrasts = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& g : report.groups) {
    rows.push_back({"ks_normality", g.code, "",
                    std::string(stats::to_string(stats::Sidedness::kTwoSided)),
                    g.normality ? format_number(g.normality->statistic, kEopDigits) : "nan",
                    format_number(g.normality ? g.normality->p_value : 1.0, kEopDigits),
                    g.normality ? std::string(stats::to_string(g.normality->method)) : "",
                    g.normality ? g.normality->mark : "",
                    std::to_string(g.values.size()), g.normality_status});
  }
  for (const auto& c : report.contrasts) {
    contrasts.push_back(contrast_to_json(c));
    rows.push_back(contrast_row(c));
  }

  json trends = json::array();
  std::vector<std::vector<std::string>> trend_rows;
  for (const auto& t : report.trends) {
    for (const auto* line : {&t.low, &t.high}) {
      if (!*line) continue;
      const auto& fit = **line;
      trends.push_back({{"subject", t.subject},
                        {"band", std::string(to_string(fit.band))},
                        {"slope", fit.slope},
                        {"intercept", fit.intercept},
                        {"residual_sum_squares", fit.residual_sum_squares},
                        {"points", fit.points}});
      trend_rows.push_back({std::to_string(t.subject), std::string(to_string(fit.band)),
                            format_number(fit.slope, kEopDigits),
                            format_number(fit.intercept, kEopDigits),
                            format_number(fit.residual_sum_squares, kEopDigits),
                            std::to_string(fit.points)});
    }
  }

  json doc = {{"toolkit", {{"name", "myopass"}, {"version", kToolkitVersion}}},
              {"format_schema", kFormatSchemaVersion},
              {"groups", groups},
              {"contrasts", contrasts},
              {"trends", trends}};
  if (report.slope_contrast) {
    doc["slope_test"] = contrast_to_json(*report.slope_contrast);
    rows.push_back(contrast_row(*report.slope_contrast));
  }
  write_json(out / "report.json", doc);
  write_text_csv(out / "report.csv",
                 {"test", "group_a", "group_b", "sidedness", "statistic", "p_value", "method",
                  "mark", "n", "status"},
                 rows);
  write_text_csv(out / "box.csv",
                 {"group", "n", "median", "q1", "q3", "whisker_low", "whisker_high", "outliers"},
                 box_rows);
  write_text_csv(out / "trends.csv",
                 {"subject", "band", "slope", "intercept", "residual_sum_squares", "points"},
                 trend_rows);
  return report;
}

// ---------------------------------------------------------------------------
// stabilize

namespace {

void write_run(const fs::path& dir, const std::string& suffix, const InterconnectionResult& r) {
  CsvTable trajectory;
  trajectory.header = {"t", "position", "velocity", "field_force", "limb_force", "damping"};
  trajectory.columns = {r.time, r.position, r.velocity, r.field_force, r.limb_force, r.damping};
  write_csv(dir / ("trajectory_" + suffix + ".csv"), trajectory, kCsvDigits);

  CsvTable ledger;
  ledger.header = {"t", "field", "budget", "injected", "limb", "observed"};
  ledger.columns = {r.field_ledger.time,         r.field_ledger.energy,
                    r.budget_ledger.energy,      r.injected_ledger.energy,
                    r.limb_ledger.energy,        r.observed_ledger.energy};
  write_csv(dir / ("ledger_" + suffix + ".csv"), ledger, kCsvDigits);
}

json run_to_json(const InterconnectionResult& r) {
  return {{"verdict", r.bounded ? "bounded" : "unbounded"},
          {"injected_joules", r.injected_dissipation},
          {"eop_budget", r.eop_budget},
          {"nominal_sop", r.nominal_sop},
          {"min_observed", r.min_observed},
          {"max_speed", r.max_speed},
          {"ledger_passive", r.min_observed >= -kPassivityTolerance}};
}

}  // namespace

StabilizeReport cmd_stabilize(const StudyConfig& config,
                              const std::optional<fs::path>& map_path) {
  config.validate();
  const Scenario scenario = config.scenario.to_scenario();
  std::optional<GmpMap> map;
  if (map_path) map = read_map(*map_path);
  // Refuse before anything runs or is written.
  if (map) (void)map_budget(scenario, *map);

  const fs::path out = config.out_dir / "stabilize";
  make_dirs(out);
  StabilizeReport report{run_interconnection(scenario, nullptr), std::nullopt, std::nullopt};
  write_run(out, "nomap", report.without_map);
  json summary = {{"toolkit", {{"name", "myopass"}, {"version", kToolkitVersion}}},
                  {"format_schema", kFormatSchemaVersion},
                  {"scenario", config_to_json(config)["scenario"]},
                  {"without_map", run_to_json(report.without_map)}};
  if (map) {
    report.with_map = run_interconnection(scenario, &*map);
    write_run(out, "map", *report.with_map);
    summary["with_map"] = run_to_json(*report.with_map);
    try {
      report.savings = dissipation_savings(*report.with_map, report.without_map);
      summary["savings"] = {{"ratio", number_or_null(report.savings->ratio)},
                            {"joules_saved", report.savings->joules_saved},
                            {"fraction_saved", number_or_null(report.savings->fraction_saved)}};
    } catch (const InvalidComparisonError& e) {
      summary["savings"] = {{"status", std::string("invalid: ") + e.what()}};
    }
  }
  write_json(out / "summary.json", summary);
  return report;
}

void cmd_all(const StudyConfig& config) {
  cmd_simulate(config);
  cmd_analyze(config.out_dir / "manifest.json", config.jobs);
  cmd_stats(config.out_dir, config.frequencies, config.contrast_sidedness,
            config.slope_sidedness);
  const fs::path median = config.out_dir / "analysis" / "maps" / "median.json";
  std::optional<fs::path> map;
  if (fs::exists(median)) map = median;
  cmd_stabilize(config, map);
}

}  // namespace myopass
