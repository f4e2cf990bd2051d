#pragma once

// CSV and SVG emission. Numbers are written in shortest round-trip form so
// identical inputs give byte-identical files.

#include "mld/density.hpp"
#include "mld/designs.hpp"
#include "mld/simulator.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mld {

/// Shortest decimal that parses back to the same double; "NA" for NaN.
std::string format_number(double value);
std::string format_number(std::optional<double> value);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

inline constexpr std::string_view kSamplesHeader = "replicate,level,design,variance,estimable";
inline constexpr std::string_view kSummaryHeader = "design,level,mean_var,sd_var,se_diff,power,non_estimable_frac";
inline constexpr std::string_view kDensityHeader = "level,design,variance,density";
inline constexpr std::string_view kClosedFormHeader =
    "design,level,expected_information,anticipated_variance,se_diff,inflation";
inline constexpr std::string_view kValidateHeader =
    "design,level,datasets,non_estimable,analytic_var,empirical_var,rel_diff,estimate_mean,true_value,mean_z,pass";

std::string samples_csv(DesignKind design, Level level, const LevelResult& result);
/// A point mass is written as a single row with density "inf".
std::string density_csv(DesignKind design, Level level, const Density& density);
std::string summary_row(DesignKind design, Level level, const LevelResult& result);

struct DensityCurve {
    std::string label;
    Density density;
};

struct DensityPanel {
    std::string title;
    std::vector<DensityCurve> curves;
};

/// One panel per entry, one polyline per non-degenerate curve and a vertical
/// marker per point mass. Throws std::invalid_argument on empty input.
std::string render_density_svg(const std::vector<DensityPanel>& panels);
void emit_density_svg(const std::vector<DensityPanel>& panels, const std::filesystem::path& path);

}  // namespace mld
