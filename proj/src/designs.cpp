#include "mld/designs.hpp"

#include "mld/errors.hpp"
#include "mld/model_core.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace mld {

std::string_view to_string(DesignKind kind) {
    switch (kind) {
        case DesignKind::RandomizeSchools: return "randomize_schools";
        case DesignKind::RandomizeWithinSchools: return "within_schools";
        case DesignKind::CompletelyRandomized: return "crd";
    }
    return "unknown";
}

std::optional<DesignKind> design_from_string(std::string_view name) {
    for (DesignKind kind : kAllDesigns)
        if (to_string(kind) == name) return kind;
    return std::nullopt;
}

void check_parity(DesignKind kind, const StudyLayout& layout) {
    layout.validate();
    switch (kind) {
        case DesignKind::RandomizeSchools:
            if (layout.schools() % 2 != 0)
                throw ParityError("randomize_schools requires an even number of schools, got " +
                                  std::to_string(layout.schools()));
            break;
        case DesignKind::RandomizeWithinSchools:
            for (int i = 0; i < layout.schools(); ++i)
                if (layout.teachers[i] % 2 != 0)
                    throw ParityError("within_schools requires an even teacher count in every school; school " +
                                      std::to_string(i) + " has " + std::to_string(layout.teachers[i]));
            break;
        case DesignKind::CompletelyRandomized:
            if (layout.total_teachers() % 2 != 0)
                throw ParityError("crd requires an even total teacher count, got " +
                                  std::to_string(layout.total_teachers()));
            break;
    }
}

namespace {

Eigen::VectorXi half_and_half(int size) {
    Eigen::VectorXi v(size);
    for (int j = 0; j < size; ++j) v(j) = j < size / 2 ? 1 : -1;
    return v;
}

void shuffle(Eigen::VectorXi& v, Rng& rng) { std::shuffle(v.data(), v.data() + v.size(), rng.engine()); }

void require_uniform_teachers(DesignKind kind, const StudyLayout& layout) {
    if (!layout.has_uniform_teachers())
        throw UnsupportedLayout(std::string(to_string(kind)) +
                                " closed forms require the same teacher count in every school");
}

}  // namespace

TreatmentAssignment draw_randomization(DesignKind kind, const StudyLayout& layout, Rng& rng) {
    check_parity(kind, layout);
    const int a = layout.schools();
    TreatmentAssignment out;
    out.r.reserve(a);
    switch (kind) {
        case DesignKind::RandomizeSchools: {
            Eigen::VectorXi arm = half_and_half(a);
            shuffle(arm, rng);
            for (int i = 0; i < a; ++i) out.r.push_back(Eigen::VectorXi::Constant(layout.teachers[i], arm(i)));
            break;
        }
        case DesignKind::RandomizeWithinSchools:
            for (int i = 0; i < a; ++i) {
                Eigen::VectorXi r = half_and_half(layout.teachers[i]);
                shuffle(r, rng);
                out.r.push_back(std::move(r));
            }
            break;
        case DesignKind::CompletelyRandomized: {
            Eigen::VectorXi pooled = half_and_half(layout.total_teachers());
            shuffle(pooled, rng);
            int offset = 0;
            for (int i = 0; i < a; ++i) {
                out.r.push_back(pooled.segment(offset, layout.teachers[i]));
                offset += layout.teachers[i];
            }
            break;
        }
    }
    return out;
}

RandomizationMoments randomization_moments(DesignKind kind, const StudyLayout& layout) {
    check_parity(kind, layout);
    if (kind != DesignKind::RandomizeWithinSchools) require_uniform_teachers(kind, layout);
    RandomizationMoments moments;
    const int a = layout.schools();
    for (int i = 0; i < a; ++i) {
        const double m = layout.teachers[i];
        moments.mean.push_back(Eigen::VectorXd::Zero(layout.teachers[i]));
        switch (kind) {
            case DesignKind::RandomizeSchools: moments.cov.push_back({0.0, 1.0}); break;
            case DesignKind::RandomizeWithinSchools:
                if (m < 2) throw ParityError("within_schools needs at least two teachers per school");
                moments.cov.push_back({m / (m - 1.0), -1.0 / (m - 1.0)});
                break;
            case DesignKind::CompletelyRandomized: {
                const double total = m * a;
                moments.cov.push_back({total / (total - 1.0), -1.0 / (total - 1.0)});
                break;
            }
        }
    }
    return moments;
}

double expected_teacher_information(DesignKind kind, const StudyLayout& layout,
                                    const TeacherVarianceComponents<double>& vc) {
    vc.validate();
    check_parity(kind, layout);
    require_uniform_teachers(kind, layout);
    const double m = layout.teachers.front();
    const double a = layout.schools();
    const double cluster = vc.sigma_eps2 + vc.sigma_v2 * m;
    switch (kind) {
        case DesignKind::RandomizeSchools: return m * a / cluster;
        case DesignKind::RandomizeWithinSchools: return m * a / vc.sigma_eps2;
        case DesignKind::CompletelyRandomized:
            return m * a / cluster * (1.0 + (m - 1.0) * m * a / (m * a - 1.0) * vc.sigma_v2 / vc.sigma_eps2);
    }
    return 0.0;
}

double expected_student_information_given_D(DesignKind kind, const AssignmentMatrix& d,
                                            const StudentVarianceComponents<double>& vc) {
    vc.validate();
    std::vector<int> teachers, students;
    for (const auto& di : d) {
        teachers.push_back(static_cast<int>(di.cols()));
        students.push_back(static_cast<int>(di.rows()));
    }
    const StudyLayout layout(teachers, students);
    const RandomizationMoments moments = randomization_moments(kind, layout);
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Eigen::MatrixXd g = student_teacher_gram(d[i], vc);
        total += moments.cov[i].k_identity * g.trace() + moments.cov[i].k_ones * g.sum();
    }
    return total;
}

void check_contamination(DesignKind kind, double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("contamination q must lie in [0, 1]");
    if (kind == DesignKind::CompletelyRandomized && q > 0.5)
        throw std::invalid_argument("contamination q must lie in [0, 1/2] for crd");
}

double effective_contamination(DesignKind kind, double q) {
    check_contamination(kind, q);
    return kind == DesignKind::RandomizeSchools ? 0.0 : q;
}

std::vector<Eigen::VectorXi> draw_contamination(const TreatmentAssignment& r, double q, Rng& rng) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("contamination q must lie in [0, 1]");
    std::vector<Eigen::VectorXi> c;
    c.reserve(r.r.size());
    for (const auto& ri : r.r) {
        const double m = static_cast<double>(ri.size());
        double p = (ri.sum() + m) * q / m;
        const bool has_control = (ri.array() == -1).any();
        if (p > 1.0 + 1e-12 && has_control)
            throw std::invalid_argument("contamination probability exceeds 1; q is out of range for this design");
        p = std::min(p, 1.0);  // only reached by all-treated schools, where Z is unused
        Eigen::VectorXi ci = Eigen::VectorXi::Zero(ri.size());
        for (Eigen::Index j = 0; j < ri.size(); ++j) {
            const bool z = rng.bernoulli(p);  // drawn for every teacher to keep streams aligned
            if (z && ri(j) == -1) ci(j) = 1;
        }
        c.push_back(std::move(ci));
    }
    return c;
}

std::vector<Eigen::VectorXd> expected_contamination(DesignKind kind, const StudyLayout& layout, double q) {
    const double effective = effective_contamination(kind, q);
    const RandomizationMoments moments = randomization_moments(kind, layout);
    std::vector<Eigen::VectorXd> out;
    for (int i = 0; i < layout.schools(); ++i) {
        const double m = layout.teachers[i];
        const double cov_row_sum = moments.cov[i].k_identity + m * moments.cov[i].k_ones;
        out.push_back(Eigen::VectorXd::Constant(layout.teachers[i], effective / (2.0 * m) * (m - cov_row_sum)));
    }
    return out;
}

ContaminatedMoments contaminated_expected_moment_matrix(const Eigen::MatrixXd& g, DesignKind kind, double q) {
    if (kind != DesignKind::RandomizeWithinSchools)
        throw UnsupportedLayout("closed-form contaminated moments exist only for within_schools");
    if (g.rows() != g.cols() || g.rows() < 2) throw DimensionError("G must be square with at least two rows");
    if (!g.isApprox(g.transpose(), 1e-12)) throw std::invalid_argument("G must be symmetric");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("contamination q must lie in [0, 1]");
    if (q == 1.0) throw DegenerateContamination("q = 1 makes contamination collinear with treatment");

    const int m = static_cast<int>(g.rows());
    const Eigen::MatrixXd cov = CovarianceCoefficients{m / (m - 1.0), -1.0 / (m - 1.0)}.matrix(m);
    const double tr_ones = g.sum();
    const double tr_cov = (g * cov).trace();
    const double tr = g.trace();

    Eigen::Matrix3d e;
    e << tr_ones, 0.0, q / 2 * tr_ones,
         0.0, tr_cov, -q / 2 * tr_cov,
         q / 2 * tr_ones, -q / 2 * tr_cov, q * q / 4 * (tr_ones + tr_cov) + q * (1 - q) / 2 * tr;

    if (!(tr_cov > 0.0)) throw NonEstimable("tr[G Cov(R)] is zero; treatment carries no information");
    const double entry = (1.0 / tr_cov) * (1.0 + q / (2.0 * (1.0 - q)) * tr_cov / tr);
    return {e, entry};
}

}  // namespace mld
