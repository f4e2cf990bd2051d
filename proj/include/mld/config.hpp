#pragma once

#include "mld/designs.hpp"
#include "mld/simulator.hpp"
#include "mld/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mld {

class ConfigError : public std::invalid_argument {
public:
    enum class Kind { MissingField, BadValue, UnknownKey };

    ConfigError(Kind kind, std::string field, const std::string& reason = {});

    Kind kind() const { return kind_; }
    const std::string& field() const { return field_; }

private:
    Kind kind_;
    std::string field_;
};

enum class RunMode { ClosedForm, Simulate, Compare, Validate };

/// "closed-form", "simulate", "compare" or "validate".
std::string_view to_string(RunMode mode);
std::optional<RunMode> mode_from_string(std::string_view name);

struct RunConfig {
    StudyLayout layout;
    TeacherVarianceComponents<double> teacher_vc;
    StudentVarianceComponents<double> student_vc;
    std::vector<DesignKind> designs;
    AssignmentPolicy policy{AssignmentPolicy::with_replacement(2)};
    double q{0.0};
    int replicates{10000};
    std::uint64_t seed{0};
    double alpha{0.05};
    std::optional<double> effect_size_diff;
    RunMode mode{RunMode::Simulate};
    std::string out_dir{"out"};
    /// Worker cap from the environment; never serialized and never affects results.
    unsigned threads{1};

    /// Field-level checks; throws ConfigError::BadValue naming the field.
    void validate() const;

    SimulationConfig simulation(DesignKind design) const;

    bool operator==(const RunConfig& other) const;
};

/// Strict parse: unknown keys are rejected; alpha, replicates, q, mode, out_dir
/// and assignment have defaults, everything else is required.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(std::string_view json_text);
std::string serialize_config(const RunConfig& config);

}  // namespace mld
