#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mld/config.hpp"
#include "mld/report.hpp"
#include "mld/run.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

using namespace mld;
namespace fs = std::filesystem;

namespace {

const char* kFigure1 = R"({
  "schools": 16,
  "teachers_per_school": 8,
  "students_per_school": 200,
  "teacher_vc": {"sigma_v2": 1.6, "sigma_eps2": 14.4},
  "student_vc": {"sigma_s2": 1.6, "sigma_t2": 14.4, "sigma_eta2": 14.4},
  "designs": ["randomize_schools", "within_schools", "crd"],
  "seed": 7
})";

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mld_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::string with(const std::string& base, const std::string& extra) {
    std::string out = base;
    out.insert(out.rfind('}'), ",\n  " + extra + "\n");
    return out;
}

ConfigError::Kind error_kind(const std::string& text, std::string* field = nullptr) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        if (field) *field = e.field();
        return e.kind();
    }
    FAIL("expected ConfigError");
    return ConfigError::Kind::BadValue;
}

RunConfig small_config(const fs::path& out) {
    RunConfig config = parse_config_text(kFigure1);
    config.layout = StudyLayout::homogeneous(4, 4, 12);
    config.replicates = 60;
    config.out_dir = out.string();
    return config;
}

int count_of(const std::string& haystack, const std::string& needle) {
    int n = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("parse_config: figure configuration and defaults") {
    const RunConfig c = parse_config_text(kFigure1);
    CHECK(c.layout == StudyLayout::homogeneous(16, 8, 200));
    CHECK(c.teacher_vc.sigma_v2 == 1.6);
    CHECK(c.teacher_vc.sigma_eps2 == 14.4);
    CHECK(c.student_vc.sigma_t2 == 14.4);
    CHECK(c.designs.size() == 3);
    CHECK(c.seed == 7);
    CHECK(c.alpha == 0.05);
    CHECK(c.replicates == 10000);
    CHECK(c.policy == AssignmentPolicy::with_replacement(2));
    CHECK(c.q == 0.0);
    CHECK_FALSE(c.effect_size_diff.has_value());
    CHECK(c.mode == RunMode::Simulate);
}

TEST_CASE("parse_config: per-school lists") {
    std::string text = kFigure1;
    text.replace(text.find("\"schools\": 16"), 13, "\"schools\": 2");
    text.replace(text.find("\"teachers_per_school\": 8"), 24, "\"teachers_per_school\": [4, 6]");
    text.replace(text.find("\"students_per_school\": 200"), 26, "\"students_per_school\": [30, 40]");
    const RunConfig c = parse_config_text(text);
    CHECK(c.layout.teachers == std::vector<int>{4, 6});
    CHECK(c.layout.students == std::vector<int>{30, 40});
    CHECK(parse_config_text(serialize_config(c)) == c);

    std::string bad = text;
    bad.replace(bad.find("[4, 6]"), 6, "[4, 6, 8]");
    std::string field;
    CHECK(error_kind(bad, &field) == ConfigError::Kind::BadValue);
    CHECK(field == "teachers_per_school");
}

TEST_CASE("parse_config: errors name the field") {
    std::string no_seed = kFigure1;
    no_seed.replace(no_seed.find(",\n  \"seed\": 7"), 13, "");
    std::string field;
    CHECK(error_kind(no_seed, &field) == ConfigError::Kind::MissingField);
    CHECK(field == "seed");
    try {
        parse_config_text(no_seed);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()) == "MissingField(\"seed\")");
    }

    CHECK(error_kind(with(kFigure1, "\"colour\": 1"), &field) == ConfigError::Kind::UnknownKey);
    CHECK(field == "colour");
    std::string nested = kFigure1;
    nested.replace(nested.find("\"sigma_eps2\": 14.4}"), 19, "\"sigma_eps2\": 14.4, \"rho\": 0.1}");
    CHECK(error_kind(nested, &field) == ConfigError::Kind::UnknownKey);
    CHECK(field == "teacher_vc.rho");

    CHECK(error_kind(with(kFigure1, "\"replicates\": 0"), &field) == ConfigError::Kind::BadValue);
    CHECK(field == "replicates");
    CHECK(error_kind(with(kFigure1, "\"alpha\": 1.5"), &field) == ConfigError::Kind::BadValue);
    CHECK(field == "alpha");
    CHECK(error_kind(with(kFigure1, "\"q\": 0.7"), &field) == ConfigError::Kind::BadValue);
    CHECK(field == "q");
    CHECK(error_kind(with(kFigure1, "\"mode\": \"plot\""), &field) == ConfigError::Kind::BadValue);
    CHECK(field == "mode");
    CHECK(error_kind(with(kFigure1, "\"assignment\": {\"policy\": \"balanced\"}"), &field) ==
          ConfigError::Kind::MissingField);
    CHECK(field == "assignment.c");
    CHECK(error_kind(with(kFigure1, "\"assignment\": {\"policy\": \"lottery\", \"c\": 2}"), &field) ==
          ConfigError::Kind::BadValue);
    CHECK(field == "assignment.policy");
    CHECK(error_kind(with(kFigure1, "\"replicates\": 2.5"), &field) == ConfigError::Kind::BadValue);
    CHECK(field == "replicates");

    std::string bad_design = kFigure1;
    bad_design.replace(bad_design.find("\"crd\""), 5, "\"design4\"");
    CHECK(error_kind(bad_design, &field) == ConfigError::Kind::BadValue);
    CHECK(field == "designs");

    std::string negative = kFigure1;
    negative.replace(negative.find("\"sigma_v2\": 1.6"), 15, "\"sigma_v2\": -1");
    CHECK(error_kind(negative, &field) == ConfigError::Kind::BadValue);
    CHECK(field == "teacher_vc.sigma_v2");

    CHECK(error_kind("{ not json", &field) == ConfigError::Kind::BadValue);
    CHECK(error_kind("[1, 2]", &field) == ConfigError::Kind::BadValue);
    CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("parse_config: single course needs no c") {
    const RunConfig c = parse_config_text(with(kFigure1, "\"assignment\": {\"policy\": \"single_course\"}"));
    CHECK(c.policy == AssignmentPolicy::single_course());
}

TEST_CASE("serialize_config round trip") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 30.0);
    for (int t = 0; t < 50; ++t) {
        RunConfig c = parse_config_text(kFigure1);
        c.teacher_vc = {u(gen), 0.01 + u(gen)};
        c.student_vc = {u(gen), u(gen), 0.01 + u(gen)};
        c.q = u(gen) / 60.0;
        c.alpha = 0.001 + u(gen) / 31.0;
        c.seed = gen();
        c.replicates = 1 + t;
        c.policy = t % 2 ? AssignmentPolicy::balanced(1 + t % 4) : AssignmentPolicy::with_replacement(3);
        if (t % 3) c.effect_size_diff = u(gen) - 15.0;
        c.mode = static_cast<RunMode>(t % 4);
        c.out_dir = "dir" + std::to_string(t);
        const RunConfig back = parse_config_text(serialize_config(c));
        CHECK(back == c);
    }
}

TEST_CASE("parse_config reads the bundled figure configuration") {
    const RunConfig c = parse_config(fs::path(MLD_TEST_DATA_DIR) / "figure1_left.json");
    CHECK(c.layout == StudyLayout::homogeneous(16, 8, 200));
    CHECK(c.teacher_vc == TeacherVarianceComponents<double>{1.6, 14.4});
}

TEST_CASE("format_number") {
    CHECK(format_number(0.2125) == "0.2125");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(std::nan("")) == "NA");
    CHECK(format_number(std::optional<double>{}) == "NA");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int t = 0; t < 1000; ++t) {
        const double v = u(gen) * std::pow(10.0, t % 30 - 15);
        const std::string s = format_number(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == v);
    }
}

TEST_CASE("write_file_atomic") {
    const fs::path dir = scratch("atomic");
    write_file_atomic(dir / "nested" / "a.txt", "first");
    write_file_atomic(dir / "nested" / "a.txt", "second");
    CHECK(slurp(dir / "nested" / "a.txt") == "second");
    CHECK_FALSE(fs::exists(dir / "nested" / "a.txt.tmp"));
    fs::remove_all(dir);
}

TEST_CASE("CSV emitters") {
    LevelResult lr;
    lr.by_replicate = {0.5, std::nullopt, 0.25};
    lr.samples = {0.5, 0.25};
    lr.non_estimable = 1;
    lr.mean = 0.375;
    lr.sd = 0.1767766952966369;
    CHECK(samples_csv(DesignKind::CompletelyRandomized, Level::Student, lr) ==
          "replicate,level,design,variance,estimable\n0,student,crd,0.5,1\n1,student,crd,NA,0\n2,student,crd,0.25,1\n");
    CHECK(summary_row(DesignKind::CompletelyRandomized, Level::Student, lr) ==
          "crd,student,0.375,0.1767766952966369," + format_number(2.0 * std::sqrt(0.375)) + ",NA," +
              format_number(1.0 / 3.0) + "\n");

    Density mass;
    mass.point_mass = true;
    mass.point = 0.2125;
    CHECK(density_csv(DesignKind::RandomizeSchools, Level::Teacher, mass) ==
          "level,design,variance,density\nteacher,randomize_schools,0.2125,inf\n");
    Density grid;
    grid.x = {1.0, 2.0};
    grid.y = {0.5, 0.25};
    CHECK(density_csv(DesignKind::RandomizeWithinSchools, Level::Teacher, grid) ==
          "level,design,variance,density\nteacher,within_schools,1,0.5\nteacher,within_schools,2,0.25\n");
}

TEST_CASE("density SVG") {
    auto curve = [](double centre) {
        Density d;
        for (int k = 0; k < 20; ++k) {
            d.x.push_back(centre + 0.01 * k);
            d.y.push_back(1.0 + k % 5);
        }
        return d;
    };
    const std::string svg = render_density_svg(
        {{"Student model", {{"randomize_schools", curve(0.1)}, {"within_schools", curve(0.2)}, {"crd", curve(0.3)}}}});
    CHECK(count_of(svg, "<polyline class=\"density-curve\"") == 3);
    CHECK(svg.find("data-label=\"randomize_schools\"") != std::string::npos);
    CHECK(svg.find("data-label=\"within_schools\"") != std::string::npos);
    CHECK(svg.find("data-label=\"crd\"") != std::string::npos);
    CHECK(count_of(svg, "class=\"legend\"") == 3);
    CHECK(svg.find(">anticipated variance<") != std::string::npos);
    CHECK(svg.find(">density<") != std::string::npos);
    CHECK(svg.rfind("<svg", 100) != std::string::npos);

    Density mass;
    mass.point_mass = true;
    mass.point = 0.2125;
    const std::string marker = render_density_svg({{"Teacher model", {{"randomize_schools", mass}}}});
    CHECK(count_of(marker, "class=\"point-mass\"") == 1);
    CHECK(marker.find("data-value=\"0.2125\"") != std::string::npos);
    CHECK(count_of(marker, "<polyline") == 0);

    const fs::path dir = scratch("svg");
    CHECK_THROWS_AS(emit_density_svg({}, dir / "density.svg"), std::invalid_argument);
    CHECK_THROWS_AS(emit_density_svg({{"Teacher model", {}}}, dir / "density.svg"), std::invalid_argument);
    CHECK_FALSE(fs::exists(dir / "density.svg"));
    emit_density_svg({{"Teacher model", {{"randomize_schools", mass}}}}, dir / "density.svg");
    CHECK(slurp(dir / "density.svg") == marker);
    fs::remove_all(dir);
}

TEST_CASE("run: closed-form mode") {
    const fs::path dir = scratch("closed");
    RunConfig config = parse_config_text(kFigure1);
    config.designs = {DesignKind::RandomizeWithinSchools, DesignKind::RandomizeSchools};
    config.q = 0.5;
    config.policy = AssignmentPolicy::balanced(2);
    config.mode = RunMode::ClosedForm;
    config.out_dir = dir.string();
    std::ostringstream log;
    REQUIRE(run(config, log) == kExitSuccess);
    const auto rows = read_csv(dir / "closed_forms.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"design", "level", "expected_information", "anticipated_variance",
                                              "se_diff", "inflation"});
    CHECK(rows[1][0] == "within_schools");
    CHECK(rows[1][1] == "teacher");
    CHECK(std::stod(rows[1][5]) == doctest::Approx(1.53125).epsilon(1e-12));
    CHECK(std::stod(rows[1][3]) == doctest::Approx(0.1125 * 1.53125).epsilon(1e-12));
    CHECK(rows[2][1] == "student");
    CHECK(std::stod(rows[2][5]) == doctest::Approx(1.51082).epsilon(1e-5));
    CHECK(rows[3][0] == "randomize_schools");
    CHECK(rows[3][5] == "1");
    CHECK(std::stod(rows[3][4]) == doctest::Approx(0.922).epsilon(5e-4));
    fs::remove_all(dir);
}

TEST_CASE("run: compare mode on the figure layout") {
    const fs::path dir = scratch("compare");
    RunConfig config = parse_config_text(kFigure1);
    config.replicates = 100;
    config.mode = RunMode::Compare;
    config.out_dir = dir.string();
    std::ostringstream log;
    REQUIRE(run(config, log) == kExitSuccess);
    for (const char* name : {"summary.csv", "density.svg", "closed_forms.csv", "samples_crd_teacher.csv",
                             "density_within_schools_student.csv", "samples_randomize_schools_student.csv"})
        CHECK(fs::exists(dir / name));

    const auto rows = read_csv(dir / "summary.csv");
    REQUIRE(rows.size() == 7);
    CHECK(rows[0] == std::vector<std::string>{"design", "level", "mean_var", "sd_var", "se_diff", "power",
                                              "non_estimable_frac"});
    std::map<std::string, double> teacher;
    for (std::size_t r = 1; r < rows.size(); ++r)
        if (rows[r][1] == "teacher") teacher[rows[r][0]] = std::stod(rows[r][2]);
    REQUIRE(teacher.size() == 3);
    CHECK(teacher["within_schools"] < teacher["crd"]);
    CHECK(teacher["crd"] < teacher["randomize_schools"]);
    CHECK(rows[1][5] == "NA");

    const std::string svg = slurp(dir / "density.svg");
    CHECK(count_of(svg, "class=\"point-mass\"") == 2);  // designs 1 and 2 at the teacher level
    CHECK(count_of(svg, "<polyline class=\"density-curve\"") == 4);

    const std::string first = slurp(dir / "summary.csv");
    config.threads = 3;
    REQUIRE(run(config, log) == kExitSuccess);
    CHECK(slurp(dir / "summary.csv") == first);
    fs::remove_all(dir);
}

TEST_CASE("run: simulate on a heterogeneous layout") {
    const fs::path dir = scratch("hetero");
    RunConfig config = small_config(dir);
    config.layout = StudyLayout({4, 6, 2}, {12, 18, 10});
    config.designs = {DesignKind::RandomizeWithinSchools, DesignKind::CompletelyRandomized};
    config.mode = RunMode::Compare;
    std::ostringstream log;
    REQUIRE(run(config, log) == kExitSuccess);
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK_FALSE(fs::exists(dir / "closed_forms.csv"));
    fs::remove_all(dir);
}

TEST_CASE("run: configuration errors exit with 1") {
    const fs::path dir = scratch("errors");
    std::ostringstream log;
    RunConfig config = small_config(dir);
    config.replicates = 0;
    CHECK(run(config, log) == kExitConfigError);
    CHECK(log.str().find("BadValue(\"replicates\")") != std::string::npos);

    config = small_config(dir);
    config.layout = StudyLayout::homogeneous(4, 3, 12);
    config.designs = {DesignKind::RandomizeWithinSchools};
    log.str("");
    CHECK(run(config, log) == kExitConfigError);
    CHECK(log.str().find("within_schools") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "summary.csv"));
    fs::remove_all(dir);
}

TEST_CASE("run: validate mode") {
    const fs::path dir = scratch("validate");
    RunConfig config = small_config(dir);
    config.designs = {DesignKind::RandomizeWithinSchools};
    config.mode = RunMode::Validate;
    config.replicates = 3;
    std::ostringstream log;
    // three datasets cannot pin the variance to 10%
    CHECK(run(config, log) == kExitValidationFailure);
    const auto rows = read_csv(dir / "validate.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].size() == 11);
    CHECK(rows[0][0] == "design");
    CHECK(rows[1][1] == "teacher");
    CHECK(rows[2][1] == "student");

    config.replicates = 1500;
    config.threads = 0;
    CHECK(run(config, log) == kExitSuccess);
    for (const auto& row : read_csv(dir / "validate.csv"))
        if (row[0] != "design") CHECK(row.back() == "pass");
    fs::remove_all(dir);
}
