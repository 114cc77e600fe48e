#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "myopass/condition.hpp"
#include "myopass/passivity.hpp"

namespace myopass {

/// Geometric MyoPassivity map: EoP per (direction, activation level,
/// frequency band). Band kLow is frequencies()[0], kHigh is frequencies()[1].
class GmpMap {
 public:
  GmpMap() = default;
  /// `frequencies` holds one or two strictly increasing values in Hz.
  GmpMap(std::string subject, std::vector<double> frequencies);

  const std::string& subject() const { return subject_; }
  const std::vector<double>& frequencies() const { return frequencies_; }
  double frequency_of(FrequencyBand band) const;
  std::vector<FrequencyBand> bands() const;

  const std::map<CellKey, EopEstimate>& cells() const { return cells_; }
  /// nullptr when the cell was not measured.
  const EopEstimate* find(const CellKey& key) const;
  std::size_t expected_cells() const;
  std::vector<CellKey> missing_cells() const;
  bool complete() const { return missing_cells().empty(); }

  /// Throws ConflictError if the key is already present, DomainError if the
  /// key lies outside the grid.
  void insert(const EopEstimate& estimate);

 private:
  std::string subject_;
  std::vector<double> frequencies_;
  std::map<CellKey, EopEstimate> cells_;
};

/// One map from per-cell estimates; the frequency grid defaults to 1 and 3 Hz.
GmpMap build_map(std::span<const EopEstimate> estimates, const std::string& subject,
                 std::vector<double> frequencies = {1.0, 3.0});

/// Per-cell median of xi and of mean %MVC. All maps must be complete and
/// share one grid (DomainError otherwise).
GmpMap median_map(std::span<const GmpMap> maps, const std::string& subject = "median");

/// Predicted EoP for a direction spoke at (pct_mvc, frequency). Within each
/// frequency row the two activation nodes (placed at their measured %MVC)
/// are interpolated linearly and clamped at the ends; rows are then
/// interpolated linearly in Hz. Throws OutOfRangeError outside the frequency
/// grid, DomainError for an invalid direction, pct outside [0, 1] or a
/// missing cell.
double lookup(const GmpMap& map, int direction_index, double pct_mvc,
              double frequency);

struct TrendLine {
  double slope = 0.0;      // EoP per unit %MVC fraction
  double intercept = 0.0;  // N s/m
  FrequencyBand band = FrequencyBand::kLow;
  double residual_sum_squares = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of xi on mean %MVC over the estimates in `band`.
/// Throws SingularFitError with fewer than two distinct %MVC values.
TrendLine fit_trend(std::span<const EopEstimate> estimates, FrequencyBand band);

nlohmann::json map_to_json(const GmpMap& map);
/// numerator/denominator/window are not persisted and come back as NaN.
GmpMap map_from_json(const nlohmann::json& doc);
void write_map(const std::filesystem::path& path, const GmpMap& map);
GmpMap read_map(const std::filesystem::path& path);

/// Spoke table for spider plots: direction_deg, xi_LR, xi_LS, xi_HR, xi_HS.
CsvTable spider_table(const GmpMap& map);

}  // namespace myopass
