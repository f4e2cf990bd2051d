#include "mld/run.hpp"

#include "mld/closed_forms.hpp"
#include "mld/errors.hpp"
#include "mld/report.hpp"
#include "mld/simulator.hpp"

#include <cmath>
#include <filesystem>
#include <ostream>
#include <string>

namespace mld {

namespace {

namespace fs = std::filesystem;

struct ClosedFormRow {
    std::optional<double> information;
    std::optional<double> inflation;
};

std::string closed_form_line(DesignKind design, Level level, const ClosedFormRow& row) {
    std::optional<double> variance;
    if (row.information && row.inflation && *row.information > 0.0) variance = *row.inflation / *row.information;
    std::optional<double> se;
    if (variance) se = 2.0 * std::sqrt(*variance);
    std::string line;
    line += to_string(design);
    line += ',';
    line += to_string(level);
    line += ',' + format_number(row.information) + ',' + format_number(variance) + ',' + format_number(se) + ',' +
            format_number(row.inflation) + '\n';
    return line;
}

ClosedFormRow teacher_closed_form(const RunConfig& config, DesignKind design) {
    ClosedFormRow row;
    row.information = expected_teacher_information(design, config.layout, config.teacher_vc);
    const double q = effective_contamination(design, config.q);
    if (q == 0.0) {
        row.inflation = 1.0;
    } else if (design == DesignKind::RandomizeWithinSchools && q < 1.0) {
        row.inflation = teacher_inflation_design2(q, config.layout.teachers.front(), config.teacher_vc);
    }
    return row;
}

ClosedFormRow student_closed_form(const RunConfig& config, DesignKind design) {
    ClosedFormRow row;
    if (!config.layout.is_homogeneous()) return row;
    const BalancedSpec spec{config.layout.teachers.front(), config.layout.students.front(),
                            config.policy.kind == AssignmentPolicy::Kind::SingleCourse ? 1 : config.policy.c,
                            config.layout.schools()};
    try {
        spec.validate();
    } catch (const std::invalid_argument&) {
        return row;
    }
    row.information = balanced_student_information(design, spec, config.student_vc);
    const double q = effective_contamination(design, config.q);
    if (q == 0.0) {
        row.inflation = 1.0;
    } else if (design == DesignKind::RandomizeWithinSchools && q < 1.0 && spec.c < spec.m) {
        row.inflation = student_inflation_design2(q, spec, config.student_vc);
    }
    return row;
}

void write_closed_forms(const RunConfig& config, std::ostream& log) {
    std::string csv(kClosedFormHeader);
    csv += '\n';
    for (DesignKind design : config.designs) {
        csv += closed_form_line(design, Level::Teacher, teacher_closed_form(config, design));
        csv += closed_form_line(design, Level::Student, student_closed_form(config, design));
    }
    write_file_atomic(fs::path(config.out_dir) / "closed_forms.csv", csv);
    log << "wrote " << (fs::path(config.out_dir) / "closed_forms.csv").string() << '\n';
}

void write_simulation(const RunConfig& config, std::ostream& log) {
    const fs::path out(config.out_dir);
    std::string summary(kSummaryHeader);
    summary += '\n';
    std::vector<DensityPanel> panels{{"Teacher model", {}}, {"Student model", {}}};

    for (DesignKind design : config.designs) {
        const SimulationResult result = simulate_anticipated_variance(config.simulation(design));
        for (Level level : {Level::Teacher, Level::Student}) {
            const LevelResult& lr = result.at(level);
            const std::string stem = std::string(to_string(design)) + "_" + std::string(to_string(level));
            write_file_atomic(out / ("samples_" + stem + ".csv"), samples_csv(design, level, lr));
            write_file_atomic(out / ("density_" + stem + ".csv"), density_csv(design, level, lr.density));
            summary += summary_row(design, level, lr);
            if (!lr.density.empty())
                panels[level == Level::Teacher ? 0 : 1].curves.push_back({std::string(to_string(design)), lr.density});
        }
        log << to_string(design) << ": teacher mean " << format_number(result.teacher.mean) << ", student mean "
            << format_number(result.student.mean) << '\n';
    }
    write_file_atomic(out / "summary.csv", summary);
    std::erase_if(panels, [](const DensityPanel& p) { return p.curves.empty(); });
    if (!panels.empty()) emit_density_svg(panels, out / "density.svg");
    log << "wrote simulation outputs to " << out.string() << '\n';
}

bool write_validation(const RunConfig& config, std::ostream& log) {
    std::string csv(kValidateHeader);
    csv += '\n';
    bool all_passed = true;
    for (DesignKind design : config.designs) {
        for (const EstimatorValidation& v : validate_estimator(config.simulation(design))) {
            csv += std::string(to_string(design)) + ',' + std::string(to_string(v.level)) + ',' +
                   std::to_string(v.datasets) + ',' + std::to_string(v.non_estimable) + ',' +
                   format_number(v.analytic_variance) + ',' + format_number(v.empirical_variance) + ',' +
                   format_number(v.relative_difference) + ',' + format_number(v.estimate_mean) + ',' +
                   format_number(v.true_value) + ',' + format_number(v.mean_z) + ',' + (v.passed ? "pass" : "fail") +
                   '\n';
            all_passed = all_passed && v.passed;
            log << to_string(design) << '/' << to_string(v.level) << ": analytic " << format_number(v.analytic_variance)
                << " empirical " << format_number(v.empirical_variance) << (v.passed ? " pass" : " FAIL") << '\n';
        }
    }
    write_file_atomic(fs::path(config.out_dir) / "validate.csv", csv);
    return all_passed;
}

}  // namespace

int run(const RunConfig& config, std::ostream& log) {
    try {
        config.validate();
        for (DesignKind design : config.designs) config.simulation(design).validate();
        fs::create_directories(config.out_dir);
        switch (config.mode) {
            case RunMode::ClosedForm: write_closed_forms(config, log); break;
            case RunMode::Simulate: write_simulation(config, log); break;
            case RunMode::Compare:
                write_simulation(config, log);
                if (config.layout.has_uniform_teachers()) write_closed_forms(config, log);
                break;
            case RunMode::Validate:
                if (!write_validation(config, log)) return kExitValidationFailure;
                break;
        }
    } catch (const ConfigError& e) {
        log << "configuration error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        log << "configuration error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const fs::filesystem_error& e) {
        log << "output error: " << e.what() << '\n';
        return kExitConfigError;
    }
    return kExitSuccess;
}

}  // namespace mld
