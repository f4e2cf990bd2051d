#include "mld/simulator.hpp"

#include "mld/errors.hpp"
#include "mld/model_core.hpp"
#include "mld/power.hpp"
#include "mld/responses.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mld {

std::string_view to_string(AssignmentPolicy::Kind kind) {
    switch (kind) {
        case AssignmentPolicy::Kind::Balanced: return "balanced";
        case AssignmentPolicy::Kind::WithReplacement: return "with_replacement";
        case AssignmentPolicy::Kind::SingleCourse: return "single_course";
    }
    return "unknown";
}

std::optional<AssignmentPolicy::Kind> policy_from_string(std::string_view name) {
    for (auto kind : {AssignmentPolicy::Kind::Balanced, AssignmentPolicy::Kind::WithReplacement,
                      AssignmentPolicy::Kind::SingleCourse})
        if (to_string(kind) == name) return kind;
    return std::nullopt;
}

std::string_view to_string(Level level) { return level == Level::Teacher ? "teacher" : "student"; }

void AssignmentPolicy::validate(int m, int n) const {
    if (m < 1 || n < 1) throw std::invalid_argument("assignment needs at least one teacher and one student");
    switch (kind) {
        case Kind::Balanced:
            if (c < 1 || c > m)
                throw std::invalid_argument("balanced assignment needs 1 <= c <= m (c=" + std::to_string(c) +
                                            ", m=" + std::to_string(m) + ")");
            if ((static_cast<long long>(n) * c) % m != 0)
                throw DivisibilityError("balanced assignment needs n*c divisible by m (n=" + std::to_string(n) +
                                        ", c=" + std::to_string(c) + ", m=" + std::to_string(m) + ")");
            break;
        case Kind::WithReplacement:
            if (c < 1) throw std::invalid_argument("with_replacement assignment needs c >= 1");
            break;
        case Kind::SingleCourse:
            if (n % m != 0)
                throw DivisibilityError("single_course assignment needs n divisible by m (n=" + std::to_string(n) +
                                        ", m=" + std::to_string(m) + ")");
            break;
    }
}

namespace {

// C(m, c), saturating once it exceeds `cap`.
long long binomial_capped(int m, int c, long long cap) {
    long long value = 1;
    for (int k = 1; k <= c; ++k) {
        value = value * (m - c + k) / k;
        if (value > cap) return cap + 1;
    }
    return value;
}

// Visits every c-subset of {0..m-1} in lexicographic order.
template <typename Fn>
void for_each_subset(int m, int c, Fn&& fn) {
    std::vector<int> idx(c);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        fn(idx);
        int k = c - 1;
        while (k >= 0 && idx[k] == m - c + k) --k;
        if (k < 0) return;
        ++idx[k];
        for (int j = k + 1; j < c; ++j) idx[j] = idx[j - 1] + 1;
    }
}

// Complete cycles through all c-subsets, then a cyclic fill for the remaining students.
SchoolAssignment balanced_pattern(int m, int n, int c) {
    SchoolAssignment d = SchoolAssignment::Zero(n, m);
    const long long subsets = binomial_capped(m, c, n);
    int row = 0;
    if (subsets <= n) {
        const long long cycles = n / subsets;
        for (long long cycle = 0; cycle < cycles; ++cycle)
            for_each_subset(m, c, [&](const std::vector<int>& idx) {
                for (int j : idx) d(row, j) = 1;
                ++row;
            });
    }
    for (int k = 0; row < n; ++row, ++k)
        for (int j = 0; j < c; ++j) d(row, static_cast<int>((static_cast<long long>(k) * c + j) % m)) = 1;
    return d;
}

}  // namespace

SchoolAssignment draw_assignment(const AssignmentPolicy& policy, int m, int n, Rng& rng) {
    policy.validate(m, n);
    switch (policy.kind) {
        case AssignmentPolicy::Kind::Balanced: {
            const SchoolAssignment pattern = balanced_pattern(m, n, policy.c);
            std::vector<int> students(n), teachers(m);
            std::iota(students.begin(), students.end(), 0);
            std::iota(teachers.begin(), teachers.end(), 0);
            std::shuffle(students.begin(), students.end(), rng.engine());
            std::shuffle(teachers.begin(), teachers.end(), rng.engine());
            SchoolAssignment d(n, m);
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < m; ++j) d(students[k], teachers[j]) = pattern(k, j);
            return d;
        }
        case AssignmentPolicy::Kind::WithReplacement: {
            SchoolAssignment d = SchoolAssignment::Zero(n, m);
            for (int k = 0; k < n; ++k)
                for (int course = 0; course < policy.c; ++course) ++d(k, rng.uniform_index(m));
            return d;
        }
        case AssignmentPolicy::Kind::SingleCourse: {
            std::vector<int> teacher_of(n);
            for (int k = 0; k < n; ++k) teacher_of[k] = k % m;
            std::shuffle(teacher_of.begin(), teacher_of.end(), rng.engine());
            SchoolAssignment d = SchoolAssignment::Zero(n, m);
            for (int k = 0; k < n; ++k) d(k, teacher_of[k]) = 1;
            return d;
        }
    }
    return {};
}

void SimulationConfig::validate() const {
    layout.validate();
    teacher_vc.validate();
    student_vc.validate();
    if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (density_grid < 2) throw std::invalid_argument("density grid needs at least two points");
    if (effect_size_diff && !std::isfinite(*effect_size_diff))
        throw std::invalid_argument("effect_size_diff must be finite");
    check_parity(design, layout);
    check_contamination(design, q);
    if (student_level)
        for (int i = 0; i < layout.schools(); ++i) policy.validate(layout.teachers[i], layout.students[i]);
}

namespace {

struct Realization {
    AssignmentMatrix d;
    TreatmentAssignment assignment;
    std::vector<Eigen::MatrixXd> x;
};

Realization draw_realization(const SimulationConfig& config, std::uint64_t replicate, double q) {
    Realization out;
    if (config.student_level) {
        Rng rng = Rng::substream(config.seed, replicate, StreamPurpose::Assignment);
        out.d.reserve(config.layout.schools());
        for (int i = 0; i < config.layout.schools(); ++i)
            out.d.push_back(draw_assignment(config.policy, config.layout.teachers[i], config.layout.students[i], rng));
    }
    Rng rand_rng = Rng::substream(config.seed, replicate, StreamPurpose::Randomization);
    out.assignment = draw_randomization(config.design, config.layout, rand_rng);
    if (q > 0.0) {
        Rng cont_rng = Rng::substream(config.seed, replicate, StreamPurpose::Contamination);
        out.assignment.c = draw_contamination(out.assignment, q, cont_rng);
    }
    out.x = design_matrices<double>(out.assignment);
    return out;
}

}  // namespace

LevelResult summarize_level(std::vector<std::optional<double>> by_replicate, const SimulationConfig& config) {
    LevelResult out;
    out.by_replicate = std::move(by_replicate);
    for (const auto& v : out.by_replicate) {
        if (v) out.samples.push_back(*v);
        else ++out.non_estimable;
    }
    if (out.samples.empty()) return out;

    const double n = static_cast<double>(out.samples.size());
    const bool constant = std::all_of(out.samples.begin(), out.samples.end(),
                                      [&](double v) { return v == out.samples.front(); });
    if (constant) {
        out.mean = out.samples.front();
        out.sd = 0.0;
    } else {
        out.mean = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : out.samples) ss += (v - out.mean) * (v - out.mean);
        out.sd = out.samples.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    out.density = kde_density(out.samples, config.density_grid);
    if (config.effect_size_diff) {
        std::vector<double> se(out.samples.size());
        std::transform(out.samples.begin(), out.samples.end(), se.begin(),
                       [](double v) { return 2.0 * std::sqrt(v); });
        out.power = empirical_power(se, *config.effect_size_diff, config.alpha);
    }
    return out;
}

SimulationResult simulate_anticipated_variance(const SimulationConfig& config) {
    config.validate();
    const double q = effective_contamination(config.design, config.q);
    const auto reps = static_cast<std::size_t>(config.replicates);
    std::vector<std::optional<double>> teacher(reps), student(reps);

    detail::parallel_for(reps, config.threads, [&](std::size_t r) {
        const Realization real = draw_realization(config, r, q);
        teacher[r] = try_treatment_variance<double>(teacher_information(real.x, config.teacher_vc).entries);
        if (config.student_level)
            student[r] = try_treatment_variance<double>(student_information(real.x, real.d, config.student_vc).entries);
    });

    SimulationResult result;
    result.teacher = summarize_level(std::move(teacher), config);
    if (config.student_level) result.student = summarize_level(std::move(student), config);
    return result;
}

std::vector<EstimatorValidation> validate_estimator(const SimulationConfig& config) {
    config.validate();
    const double q = effective_contamination(config.design, config.q);
    const auto datasets = static_cast<std::size_t>(config.replicates);
    const Eigen::Index p = q > 0.0 ? 3 : 2;

    Eigen::VectorXd coefficients = Eigen::VectorXd::Zero(p);
    coefficients(0) = 1.0;
    coefficients(1) = config.effect_size_diff ? *config.effect_size_diff / 2.0 : 0.5;

    struct Draw {
        std::optional<double> variance;
        double estimate{0.0};
    };
    std::vector<Draw> teacher(datasets), student(datasets);

    detail::parallel_for(datasets, config.threads, [&](std::size_t r) {
        const Realization real = draw_realization(config, r, q);
        Rng rng = Rng::substream(config.seed, r, StreamPurpose::Responses);
        try {
            const auto t = generate_teacher_responses(real.x, config.teacher_vc, coefficients, rng);
            const GlsFit fit = gls_estimate(t, real.x, config.teacher_vc);
            teacher[r] = {fit.covariance(1, 1), fit.coefficients(1)};
        } catch (const NonEstimable&) {
        }
        if (!config.student_level) return;
        try {
            const auto y = generate_student_responses(real.x, real.d, config.student_vc, coefficients, rng);
            const GlsFit fit = gls_estimate(y, real.x, real.d, config.student_vc);
            student[r] = {fit.covariance(1, 1), fit.coefficients(1)};
        } catch (const NonEstimable&) {
        }
    });

    auto summarize = [&](Level level, const std::vector<Draw>& draws) {
        EstimatorValidation v;
        v.level = level;
        v.true_value = coefficients(1);
        std::vector<double> estimates;
        double variance_sum = 0.0;
        for (const auto& d : draws) {
            if (!d.variance) {
                ++v.non_estimable;
                continue;
            }
            estimates.push_back(d.estimate);
            variance_sum += *d.variance;
        }
        v.datasets = static_cast<int>(estimates.size());
        if (estimates.size() < 2) return v;
        const double n = static_cast<double>(estimates.size());
        v.analytic_variance = variance_sum / n;
        v.estimate_mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / n;
        double ss = 0.0;
        for (double e : estimates) ss += (e - v.estimate_mean) * (e - v.estimate_mean);
        v.empirical_variance = ss / (n - 1.0);
        v.relative_difference = (v.empirical_variance - v.analytic_variance) / v.analytic_variance;
        v.mean_z = (v.estimate_mean - v.true_value) / std::sqrt(v.empirical_variance / n);
        v.passed = std::abs(v.relative_difference) <= kValidationRelativeTolerance &&
                   std::abs(v.mean_z) <= kValidationMeanZ;
        return v;
    };

    std::vector<EstimatorValidation> out{summarize(Level::Teacher, teacher)};
    if (config.student_level) out.push_back(summarize(Level::Student, student));
    return out;
}

}  // namespace mld
