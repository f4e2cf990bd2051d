#include "mld/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

namespace mld {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string describe(ConfigError::Kind kind, const std::string& field, const std::string& reason) {
    switch (kind) {
        case ConfigError::Kind::MissingField: return "MissingField(\"" + field + "\")";
        case ConfigError::Kind::UnknownKey: return "UnknownKey(\"" + field + "\")";
        case ConfigError::Kind::BadValue: return "BadValue(\"" + field + "\"): " + reason;
    }
    return field;
}

[[noreturn]] void bad_value(const std::string& field, const std::string& reason) {
    throw ConfigError(ConfigError::Kind::BadValue, field, reason);
}

std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ConfigError(ConfigError::Kind::UnknownKey, join(prefix, key));
}

const json& require(const json& obj, const std::string& key, const std::string& prefix) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(ConfigError::Kind::MissingField, join(prefix, key));
    return *it;
}

const json& require_object(const json& obj, const std::string& key, const std::string& prefix) {
    const json& value = require(obj, key, prefix);
    if (!value.is_object()) bad_value(join(prefix, key), "expected an object");
    return value;
}

double as_number(const json& value, const std::string& field) {
    if (!value.is_number()) bad_value(field, "expected a number");
    const double v = value.get<double>();
    if (!std::isfinite(v)) bad_value(field, "must be finite");
    return v;
}

long long as_integer(const json& value, const std::string& field) {
    if (!value.is_number_integer()) bad_value(field, "expected an integer");
    if (value.is_number_unsigned() && value.get<std::uint64_t>() > static_cast<std::uint64_t>(INT32_MAX))
        bad_value(field, "integer out of range");
    return value.get<long long>();
}

int as_count(const json& value, const std::string& field) {
    const long long v = as_integer(value, field);
    if (v < INT32_MIN || v > INT32_MAX) bad_value(field, "integer out of range");
    return static_cast<int>(v);
}

std::vector<int> per_school(const json& value, const std::string& field, int schools) {
    if (value.is_array()) {
        if (static_cast<int>(value.size()) != schools)
            bad_value(field, "list length " + std::to_string(value.size()) + " differs from schools = " +
                                 std::to_string(schools));
        std::vector<int> out;
        for (std::size_t i = 0; i < value.size(); ++i)
            out.push_back(as_count(value[i], field + "[" + std::to_string(i) + "]"));
        return out;
    }
    return std::vector<int>(schools, as_count(value, field));
}

}  // namespace

ConfigError::ConfigError(Kind kind, std::string field, const std::string& reason)
    : std::invalid_argument(describe(kind, field, reason)), kind_(kind), field_(std::move(field)) {}

std::string_view to_string(RunMode mode) {
    switch (mode) {
        case RunMode::ClosedForm: return "closed-form";
        case RunMode::Simulate: return "simulate";
        case RunMode::Compare: return "compare";
        case RunMode::Validate: return "validate";
    }
    return "unknown";
}

std::optional<RunMode> mode_from_string(std::string_view name) {
    for (auto mode : {RunMode::ClosedForm, RunMode::Simulate, RunMode::Compare, RunMode::Validate})
        if (to_string(mode) == name) return mode;
    return std::nullopt;
}

void RunConfig::validate() const {
    if (layout.schools() < 2) bad_value("schools", "at least two schools are required");
    if (layout.teachers.size() != layout.students.size())
        bad_value("students_per_school", "length differs from teachers_per_school");
    for (int m : layout.teachers)
        if (m < 1) bad_value("teachers_per_school", "every school needs at least one teacher");
    for (int n : layout.students)
        if (n < 1) bad_value("students_per_school", "every school needs at least one student");
    if (!(teacher_vc.sigma_v2 >= 0.0) || !std::isfinite(teacher_vc.sigma_v2))
        bad_value("teacher_vc.sigma_v2", "must be finite and >= 0");
    if (!(teacher_vc.sigma_eps2 > 0.0) || !std::isfinite(teacher_vc.sigma_eps2))
        bad_value("teacher_vc.sigma_eps2", "must be finite and > 0");
    if (!(student_vc.sigma_s2 >= 0.0) || !std::isfinite(student_vc.sigma_s2))
        bad_value("student_vc.sigma_s2", "must be finite and >= 0");
    if (!(student_vc.sigma_t2 >= 0.0) || !std::isfinite(student_vc.sigma_t2))
        bad_value("student_vc.sigma_t2", "must be finite and >= 0");
    if (!(student_vc.sigma_eta2 > 0.0) || !std::isfinite(student_vc.sigma_eta2))
        bad_value("student_vc.sigma_eta2", "must be finite and > 0");
    if (designs.empty()) bad_value("designs", "at least one design is required");
    if (std::set<DesignKind>(designs.begin(), designs.end()).size() != designs.size())
        bad_value("designs", "designs must not repeat");
    if (policy.c < 1) bad_value("assignment.c", "must be >= 1");
    if (policy.kind == AssignmentPolicy::Kind::SingleCourse && policy.c != 1)
        bad_value("assignment.c", "single_course requires c = 1");
    if (!(q >= 0.0 && q <= 1.0)) bad_value("q", "must lie in [0, 1]");
    for (DesignKind d : designs)
        if (d == DesignKind::CompletelyRandomized && q > 0.5) bad_value("q", "must lie in [0, 1/2] when crd is listed");
    if (replicates < 1) bad_value("replicates", "must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) bad_value("alpha", "must lie in (0, 1)");
    if (effect_size_diff && !std::isfinite(*effect_size_diff)) bad_value("effect_size_diff", "must be finite");
    if (out_dir.empty()) bad_value("out_dir", "must not be empty");
}

SimulationConfig RunConfig::simulation(DesignKind design) const {
    SimulationConfig sim;
    sim.layout = layout;
    sim.teacher_vc = teacher_vc;
    sim.student_vc = student_vc;
    sim.design = design;
    sim.policy = policy;
    sim.q = q;
    sim.replicates = replicates;
    sim.seed = seed;
    sim.effect_size_diff = effect_size_diff;
    sim.alpha = alpha;
    sim.threads = threads;
    return sim;
}

bool RunConfig::operator==(const RunConfig& other) const {
    return layout == other.layout && teacher_vc == other.teacher_vc && student_vc == other.student_vc &&
           designs == other.designs && policy == other.policy && q == other.q && replicates == other.replicates &&
           seed == other.seed && alpha == other.alpha && effect_size_diff == other.effect_size_diff &&
           mode == other.mode && out_dir == other.out_dir;
}

RunConfig parse_config_text(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        bad_value("<document>", std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) bad_value("<document>", "top level must be an object");
    reject_unknown(root,
                   {"schools", "teachers_per_school", "students_per_school", "teacher_vc", "student_vc", "designs",
                    "assignment", "q", "replicates", "seed", "alpha", "effect_size_diff", "mode", "out_dir"},
                   "");

    RunConfig cfg;
    const int schools = as_count(require(root, "schools", ""), "schools");
    if (schools < 2) bad_value("schools", "at least two schools are required");
    cfg.layout.teachers = per_school(require(root, "teachers_per_school", ""), "teachers_per_school", schools);
    cfg.layout.students = per_school(require(root, "students_per_school", ""), "students_per_school", schools);

    const json& tvc = require_object(root, "teacher_vc", "");
    reject_unknown(tvc, {"sigma_v2", "sigma_eps2"}, "teacher_vc");
    cfg.teacher_vc.sigma_v2 = as_number(require(tvc, "sigma_v2", "teacher_vc"), "teacher_vc.sigma_v2");
    cfg.teacher_vc.sigma_eps2 = as_number(require(tvc, "sigma_eps2", "teacher_vc"), "teacher_vc.sigma_eps2");

    const json& svc = require_object(root, "student_vc", "");
    reject_unknown(svc, {"sigma_s2", "sigma_t2", "sigma_eta2"}, "student_vc");
    cfg.student_vc.sigma_s2 = as_number(require(svc, "sigma_s2", "student_vc"), "student_vc.sigma_s2");
    cfg.student_vc.sigma_t2 = as_number(require(svc, "sigma_t2", "student_vc"), "student_vc.sigma_t2");
    cfg.student_vc.sigma_eta2 = as_number(require(svc, "sigma_eta2", "student_vc"), "student_vc.sigma_eta2");

    const json& designs = require(root, "designs", "");
    if (!designs.is_array()) bad_value("designs", "expected a list");
    for (const auto& d : designs) {
        if (!d.is_string()) bad_value("designs", "entries must be strings");
        const auto kind = design_from_string(d.get<std::string>());
        if (!kind) bad_value("designs", "unknown design \"" + d.get<std::string>() + "\"");
        cfg.designs.push_back(*kind);
    }

    if (root.contains("assignment")) {
        const json& asg = require_object(root, "assignment", "");
        reject_unknown(asg, {"policy", "c"}, "assignment");
        const json& policy = require(asg, "policy", "assignment");
        if (!policy.is_string()) bad_value("assignment.policy", "expected a string");
        const auto kind = policy_from_string(policy.get<std::string>());
        if (!kind) bad_value("assignment.policy", "unknown policy \"" + policy.get<std::string>() + "\"");
        cfg.policy.kind = *kind;
        if (asg.contains("c")) cfg.policy.c = as_count(asg["c"], "assignment.c");
        else if (*kind == AssignmentPolicy::Kind::SingleCourse) cfg.policy.c = 1;
        else throw ConfigError(ConfigError::Kind::MissingField, "assignment.c");
    }

    if (root.contains("q")) cfg.q = as_number(root["q"], "q");
    if (root.contains("replicates")) cfg.replicates = as_count(root["replicates"], "replicates");

    const json& seed = require(root, "seed", "");
    if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() && seed.get<long long>() < 0))
        bad_value("seed", "expected a nonnegative integer");
    cfg.seed = seed.get<std::uint64_t>();

    if (root.contains("alpha")) cfg.alpha = as_number(root["alpha"], "alpha");
    if (root.contains("effect_size_diff")) cfg.effect_size_diff = as_number(root["effect_size_diff"], "effect_size_diff");
    if (root.contains("mode")) {
        if (!root["mode"].is_string()) bad_value("mode", "expected a string");
        const auto mode = mode_from_string(root["mode"].get<std::string>());
        if (!mode) bad_value("mode", "unknown mode \"" + root["mode"].get<std::string>() + "\"");
        cfg.mode = *mode;
    }
    if (root.contains("out_dir")) {
        if (!root["out_dir"].is_string()) bad_value("out_dir", "expected a string");
        cfg.out_dir = root["out_dir"].get<std::string>();
    }

    cfg.validate();
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) bad_value("config", "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::string serialize_config(const RunConfig& config) {
    ordered_json out;
    out["schools"] = config.layout.schools();
    auto per_school_value = [](const std::vector<int>& v) -> ordered_json {
        if (!v.empty() && std::all_of(v.begin(), v.end(), [&](int x) { return x == v.front(); })) return v.front();
        return v;
    };
    out["teachers_per_school"] = per_school_value(config.layout.teachers);
    out["students_per_school"] = per_school_value(config.layout.students);
    out["teacher_vc"] = {{"sigma_v2", config.teacher_vc.sigma_v2}, {"sigma_eps2", config.teacher_vc.sigma_eps2}};
    out["student_vc"] = {{"sigma_s2", config.student_vc.sigma_s2},
                         {"sigma_t2", config.student_vc.sigma_t2},
                         {"sigma_eta2", config.student_vc.sigma_eta2}};
    ordered_json designs = ordered_json::array();
    for (DesignKind d : config.designs) designs.push_back(std::string(to_string(d)));
    out["designs"] = designs;
    out["assignment"] = {{"policy", std::string(to_string(config.policy.kind))}, {"c", config.policy.c}};
    out["q"] = config.q;
    out["replicates"] = config.replicates;
    out["seed"] = config.seed;
    out["alpha"] = config.alpha;
    if (config.effect_size_diff) out["effect_size_diff"] = *config.effect_size_diff;
    out["mode"] = std::string(to_string(config.mode));
    out["out_dir"] = config.out_dir;
    return out.dump(2);
}

}  // namespace mld
