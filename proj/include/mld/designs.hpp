#pragma once

// The three randomization designs: realizations, first two moments of the
// treatment indicators, expected information, and control-group contamination.

#include "mld/random.hpp"
#include "mld/types.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mld {

enum class DesignKind {
    RandomizeSchools,        // design 1
    RandomizeWithinSchools,  // design 2
    CompletelyRandomized,    // design 3
};

inline constexpr DesignKind kAllDesigns[] = {DesignKind::RandomizeSchools, DesignKind::RandomizeWithinSchools,
                                             DesignKind::CompletelyRandomized};

/// "randomize_schools", "within_schools" or "crd".
std::string_view to_string(DesignKind kind);
std::optional<DesignKind> design_from_string(std::string_view name);

/// Throws ParityError when the design cannot split the layout into equal arms.
void check_parity(DesignKind kind, const StudyLayout& layout);

TreatmentAssignment draw_randomization(DesignKind kind, const StudyLayout& layout, Rng& rng);

/// Cov(R_i) = k_identity * I + k_ones * J.
struct CovarianceCoefficients {
    double k_identity;
    double k_ones;

    Eigen::MatrixXd matrix(int m) const {
        Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(m, m, k_ones);
        cov.diagonal().array() += k_identity;
        return cov;
    }
};

struct RandomizationMoments {
    std::vector<Eigen::VectorXd> mean;
    std::vector<CovarianceCoefficients> cov;
};

/// Designs 1 and 3 need equal teacher counts; design 2 allows per-school sizes.
RandomizationMoments randomization_moments(DesignKind kind, const StudyLayout& layout);

/// Treatment entry of the expected teacher information (homogeneous layout).
double expected_teacher_information(DesignKind kind, const StudyLayout& layout,
                                    const TeacherVarianceComponents<double>& vc);

/// E[treatment information | D] = sum_i tr(D_i' Sigma_i^{-1} D_i Cov(R_i)).
double expected_student_information_given_D(DesignKind kind, const AssignmentMatrix& d,
                                            const StudentVarianceComponents<double>& vc);

/// Accepts q in [0, 1] (design 3: [0, 1/2]); throws std::invalid_argument otherwise.
void check_contamination(DesignKind kind, double q);
/// Design 1 never contaminates, so its intensity is forced to 0.
double effective_contamination(DesignKind kind, double q);

/// C_ij = (1 - R_ij) Z_ij / 2, Z_ij ~ Bernoulli((1'R_i + m_i) q / m_i).
std::vector<Eigen::VectorXi> draw_contamination(const TreatmentAssignment& r, double q, Rng& rng);

/// E[C_i] = (q / 2m) (m 1 - Cov(R_i) 1).
std::vector<Eigen::VectorXd> expected_contamination(DesignKind kind, const StudyLayout& layout, double q);

struct ContaminatedMoments {
    /// E[X_i' G X_i] for X_i = [1 R_i C_i].
    Eigen::Matrix3d expected;
    /// Treatment entry of expected^{-1}, from the closed form.
    double treatment_inverse_entry;
};

/// Only the within-school design has a closed form; other designs throw UnsupportedLayout.
ContaminatedMoments contaminated_expected_moment_matrix(const Eigen::MatrixXd& g, DesignKind kind, double q);

}  // namespace mld
