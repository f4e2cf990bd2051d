#pragma once

// Monte Carlo distribution of the anticipated treatment variance, and a
// data-generating cross-check of that variance through GLS fits.

#include "mld/density.hpp"
#include "mld/designs.hpp"
#include "mld/random.hpp"
#include "mld/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mld {

struct AssignmentPolicy {
    enum class Kind { Balanced, WithReplacement, SingleCourse };
    Kind kind{Kind::WithReplacement};
    int c{2};

    static AssignmentPolicy balanced(int c) { return {Kind::Balanced, c}; }
    static AssignmentPolicy with_replacement(int c) { return {Kind::WithReplacement, c}; }
    static AssignmentPolicy single_course() { return {Kind::SingleCourse, 1}; }

    /// Throws DivisibilityError / std::invalid_argument for an unusable (m, n).
    void validate(int m, int n) const;

    bool operator==(const AssignmentPolicy&) const = default;
};

/// "balanced", "with_replacement" or "single_course".
std::string_view to_string(AssignmentPolicy::Kind kind);
std::optional<AssignmentPolicy::Kind> policy_from_string(std::string_view name);

SchoolAssignment draw_assignment(const AssignmentPolicy& policy, int m, int n, Rng& rng);

enum class Level { Teacher, Student };
std::string_view to_string(Level level);

struct SimulationConfig {
    StudyLayout layout;
    TeacherVarianceComponents<double> teacher_vc;
    StudentVarianceComponents<double> student_vc;
    DesignKind design{DesignKind::RandomizeSchools};
    AssignmentPolicy policy{};
    double q{0.0};
    int replicates{10000};
    std::uint64_t seed{0};
    /// Hypothesized experimental-minus-control difference; power is reported only when set.
    std::optional<double> effect_size_diff;
    double alpha{0.05};
    /// Worker cap; results do not depend on it. 0 means one worker per hardware thread.
    unsigned threads{1};
    bool student_level{true};
    int density_grid{256};

    void validate() const;
};

struct LevelResult {
    /// Anticipated variance per replicate; nullopt marks a non-estimable realization.
    std::vector<std::optional<double>> by_replicate;
    /// Estimable variances in replicate order.
    std::vector<double> samples;
    int non_estimable{0};
    double mean{0.0};
    double sd{0.0};
    Density density;
    std::optional<double> power;
};

struct SimulationResult {
    LevelResult teacher;
    LevelResult student;

    const LevelResult& at(Level level) const { return level == Level::Teacher ? teacher : student; }
};

SimulationResult simulate_anticipated_variance(const SimulationConfig& config);

/// Per-level summary used by simulate; exposed for reuse on externally produced samples.
LevelResult summarize_level(std::vector<std::optional<double>> by_replicate, const SimulationConfig& config);

struct EstimatorValidation {
    Level level{Level::Teacher};
    int datasets{0};
    int non_estimable{0};
    /// Mean over datasets of the analytic anticipated variance of the realized design.
    double analytic_variance{0.0};
    /// Sample variance of the GLS treatment coefficient.
    double empirical_variance{0.0};
    double relative_difference{0.0};
    double estimate_mean{0.0};
    double true_value{0.0};
    /// (estimate_mean - true_value) / standard error of the mean.
    double mean_z{0.0};
    bool passed{false};
};

inline constexpr double kValidationRelativeTolerance = 0.10;
inline constexpr double kValidationMeanZ = 3.0;

/// Draws config.replicates synthetic data sets (fresh D, R, C and responses each),
/// fits GLS, and compares the coefficient spread with the anticipated variance.
std::vector<EstimatorValidation> validate_estimator(const SimulationConfig& config);

}  // namespace mld
