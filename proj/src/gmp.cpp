#include "myopass/gmp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "myopass/errors.hpp"

namespace myopass {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kFrequencyTolerance = 1e-9;

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double lerp_clamped(double a, double b, double t) {
  const double value = (1.0 - t) * a + t * b;
  return std::clamp(value, std::min(a, b), std::max(a, b));
}

const EopEstimate& require_cell(const GmpMap& map, const CellKey& key) {
  const EopEstimate* cell = map.find(key);
  if (cell == nullptr) {
    throw DomainError("map '" + map.subject() + "' has no cell for direction " +
                      std::to_string(key.direction) + " " +
                      std::string(to_string(key.activation)) + " " +
                      std::string(to_string(key.band)));
  }
  return *cell;
}

// Activation-axis interpolation inside one frequency row.
double row_value(const GmpMap& map, int direction, FrequencyBand band, double pct) {
  const EopEstimate& relaxed =
      require_cell(map, {direction, ActivationLevel::kRelaxed, band});
  const EopEstimate& stiff = require_cell(map, {direction, ActivationLevel::kStiff, band});
  double p0 = relaxed.mean_pct_mvc, x0 = relaxed.xi;
  double p1 = stiff.mean_pct_mvc, x1 = stiff.xi;
  if (p1 < p0) {
    std::swap(p0, p1);
    std::swap(x0, x1);
  }
  if (p1 == p0) return 0.5 * x0 + 0.5 * x1;
  if (pct <= p0) return x0;
  if (pct >= p1) return x1;
  return lerp_clamped(x0, x1, (pct - p0) / (p1 - p0));
}

}  // namespace

GmpMap::GmpMap(std::string subject, std::vector<double> frequencies)
    : subject_(std::move(subject)), frequencies_(std::move(frequencies)) {
  if (frequencies_.empty() || frequencies_.size() > 2) {
    throw DomainError("a map grid has one or two frequencies");
  }
  for (const double f : frequencies_) {
    if (!(f > 0.0)) throw DomainError("map frequencies must be positive");
  }
  if (frequencies_.size() == 2 && !(frequencies_[0] < frequencies_[1])) {
    throw DomainError("map frequencies must be strictly increasing");
  }
}

double GmpMap::frequency_of(FrequencyBand band) const {
  const std::size_t index = band == FrequencyBand::kLow ? 0 : 1;
  if (index >= frequencies_.size()) {
    throw DomainError("map has no high-frequency band");
  }
  return frequencies_[index];
}

std::vector<FrequencyBand> GmpMap::bands() const {
  std::vector<FrequencyBand> out{FrequencyBand::kLow};
  if (frequencies_.size() == 2) out.push_back(FrequencyBand::kHigh);
  return out;
}

const EopEstimate* GmpMap::find(const CellKey& key) const {
  const auto it = cells_.find(key);
  return it == cells_.end() ? nullptr : &it->second;
}

std::size_t GmpMap::expected_cells() const {
  return static_cast<std::size_t>(kDirections) * 2 * frequencies_.size();
}

std::vector<CellKey> GmpMap::missing_cells() const {
  std::vector<CellKey> missing;
  for (const FrequencyBand band : bands()) {
    for (int d = 0; d < kDirections; ++d) {
      for (const ActivationLevel level :
           {ActivationLevel::kRelaxed, ActivationLevel::kStiff}) {
        const CellKey key{d, level, band};
        if (!cells_.contains(key)) missing.push_back(key);
      }
    }
  }
  return missing;
}

void GmpMap::insert(const EopEstimate& estimate) {
  if (estimate.direction_index < 0 || estimate.direction_index >= kDirections) {
    throw DomainError("estimate direction outside 0..7");
  }
  if (estimate.band == FrequencyBand::kHigh && frequencies_.size() < 2) {
    throw DomainError("high-frequency estimate for a single-frequency grid");
  }
  const CellKey key{estimate.direction_index, estimate.activation, estimate.band};
  if (!cells_.emplace(key, estimate).second) {
    throw ConflictError("duplicate map cell: direction " +
                        std::to_string(key.direction) + " " +
                        std::string(to_string(key.activation)) + " " +
                        std::string(to_string(key.band)));
  }
}

GmpMap build_map(std::span<const EopEstimate> estimates, const std::string& subject,
                 std::vector<double> frequencies) {
  GmpMap map(subject, std::move(frequencies));
  for (const EopEstimate& estimate : estimates) map.insert(estimate);
  return map;
}

GmpMap median_map(std::span<const GmpMap> maps, const std::string& subject) {
  if (maps.empty()) throw DomainError("median map needs at least one map");
  const GmpMap& first = maps.front();
  for (const GmpMap& map : maps) {
    if (!map.complete()) {
      throw DomainError("map '" + map.subject() + "' is incomplete");
    }
    if (map.frequencies() != first.frequencies()) {
      throw DomainError("maps use different frequency grids");
    }
  }
  GmpMap result(subject, first.frequencies());
  for (const auto& [key, cell] : first.cells()) {
    std::vector<double> xi;
    std::vector<double> pct;
    for (const GmpMap& map : maps) {
      const EopEstimate* other = map.find(key);
      xi.push_back(other->xi);
      pct.push_back(other->mean_pct_mvc);
    }
    EopEstimate merged = cell;
    merged.xi = median_of(std::move(xi));
    merged.mean_pct_mvc = median_of(std::move(pct));
    merged.numerator = kNaN;
    merged.denominator = kNaN;
    merged.subject_id = 0;
    result.insert(merged);
  }
  return result;
}

double lookup(const GmpMap& map, int direction_index, double pct_mvc,
              double frequency) {
  if (direction_index < 0 || direction_index >= kDirections) {
    throw DomainError("direction index must be in 0..7");
  }
  if (!(pct_mvc >= 0.0 && pct_mvc <= 1.0)) {
    throw DomainError("%MVC query must lie in [0, 1]");
  }
  const auto& grid = map.frequencies();
  if (grid.empty()) throw DomainError("map has no frequency grid");
  const double lo = grid.front();
  const double hi = grid.back();
  if (!(frequency >= lo - kFrequencyTolerance && frequency <= hi + kFrequencyTolerance)) {
    throw OutOfRangeError("frequency " + std::to_string(frequency) +
                          " Hz lies outside the map grid [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "] Hz");
  }
  const double low_row = row_value(map, direction_index, FrequencyBand::kLow, pct_mvc);
  if (grid.size() == 1) return low_row;
  const double high_row =
      row_value(map, direction_index, FrequencyBand::kHigh, pct_mvc);
  if (frequency <= lo) return low_row;
  if (frequency >= hi) return high_row;
  return lerp_clamped(low_row, high_row, (frequency - lo) / (hi - lo));
}

TrendLine fit_trend(std::span<const EopEstimate> estimates, FrequencyBand band) {
  std::vector<double> x;
  std::vector<double> y;
  for (const EopEstimate& e : estimates) {
    if (e.band != band) continue;
    x.push_back(e.mean_pct_mvc);
    y.push_back(e.xi);
  }
  if (x.size() < 2) throw SingularFitError("trend fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) {
    throw SingularFitError("all %MVC values are identical; slope is undefined");
  }
  TrendLine line;
  line.band = band;
  line.points = x.size();
  line.slope = sxy / sxx;
  line.intercept = my - line.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (line.intercept + line.slope * x[i]);
    line.residual_sum_squares += r * r;
  }
  return line;
}

nlohmann::json map_to_json(const GmpMap& map) {
  nlohmann::json doc;
  doc["subject"] = map.subject();
  doc["grid"] = {{"frequencies", map.frequencies()}, {"directions", kDirections}};
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, cell] : map.cells()) {
    cells.push_back({{"dir", key.direction},
                     {"activation", std::string(to_string(key.activation))},
                     {"frequency", map.frequency_of(key.band)},
                     {"xi", cell.xi},
                     {"pct_mvc", cell.mean_pct_mvc}});
  }
  doc["cells"] = std::move(cells);
  return doc;
}

GmpMap map_from_json(const nlohmann::json& doc) {
  try {
    const auto& grid = doc.at("grid");
    if (grid.at("directions").get<int>() != kDirections) {
      throw DomainError("map grid must have 8 directions");
    }
    GmpMap map(doc.at("subject").get<std::string>(),
               grid.at("frequencies").get<std::vector<double>>());
    for (const auto& cell : doc.at("cells")) {
      const double f = cell.at("frequency").get<double>();
      EopEstimate e;
      e.direction_index = cell.at("dir").get<int>();
      e.activation = parse_activation(cell.at("activation").get<std::string>());
      if (std::abs(f - map.frequencies().front()) <= kFrequencyTolerance) {
        e.band = FrequencyBand::kLow;
      } else if (map.frequencies().size() == 2 &&
                 std::abs(f - map.frequencies().back()) <= kFrequencyTolerance) {
        e.band = FrequencyBand::kHigh;
      } else {
        throw DomainError("cell frequency is not on the map grid");
      }
      e.frequency = f;
      e.xi = cell.at("xi").get<double>();
      e.mean_pct_mvc = cell.at("pct_mvc").is_null() ? kNaN
                                                    : cell.at("pct_mvc").get<double>();
      e.numerator = kNaN;
      e.denominator = kNaN;
      e.window = {kNaN, kNaN};
      map.insert(e);
    }
    return map;
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(std::string("malformed map document: ") + ex.what());
  }
}

void write_map(const std::filesystem::path& path, const GmpMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << map_to_json(map).dump(2) << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

GmpMap read_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open map '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw IoError("map '" + path.string() + "' is not valid JSON: " + ex.what());
  }
  return map_from_json(doc);
}

CsvTable spider_table(const GmpMap& map) {
  CsvTable table;
  table.header = {"direction_deg", "xi_LR", "xi_LS", "xi_HR", "xi_HS"};
  table.columns.assign(5, {});
  const TestCondition order[] = {
      {FrequencyBand::kLow, ActivationLevel::kRelaxed},
      {FrequencyBand::kLow, ActivationLevel::kStiff},
      {FrequencyBand::kHigh, ActivationLevel::kRelaxed},
      {FrequencyBand::kHigh, ActivationLevel::kStiff}};
  for (int d = 0; d < kDirections; ++d) {
    table.columns[0].push_back(45.0 * d);
    for (std::size_t i = 0; i < 4; ++i) {
      const EopEstimate* cell = map.find({d, order[i].activation, order[i].band});
      table.columns[i + 1].push_back(cell ? cell->xi : kNaN);
    }
  }
  return table;
}

}  // namespace myopass
