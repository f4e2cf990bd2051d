#pragma once

// Synthetic responses from the teacher and student models and their GLS fits.

#include "mld/random.hpp"
#include "mld/types.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mld {

/// T_i = X_i beta + 1 v_i + eps_i.
std::vector<Eigen::VectorXd> generate_teacher_responses(const std::vector<Eigen::MatrixXd>& x,
                                                        const TeacherVarianceComponents<double>& vc,
                                                        const Eigen::VectorXd& beta, Rng& rng);

/// Y_i = D_i (X_i theta + t_i) + 1 s_i + eta_i.
std::vector<Eigen::VectorXd> generate_student_responses(const std::vector<Eigen::MatrixXd>& x,
                                                        const AssignmentMatrix& d,
                                                        const StudentVarianceComponents<double>& vc,
                                                        const Eigen::VectorXd& theta, Rng& rng);

struct GlsFit {
    Eigen::VectorXd coefficients;
    /// Inverse information (pseudo-inverse when a nuisance column carries no information).
    Eigen::MatrixXd covariance;
};

/// Teacher-level GLS. Throws NonEstimable when the treatment direction is singular.
GlsFit gls_estimate(const std::vector<Eigen::VectorXd>& responses, const std::vector<Eigen::MatrixXd>& x,
                    const TeacherVarianceComponents<double>& vc);

/// Student-level GLS with design D_i X_i and covariance Sigma_i.
GlsFit gls_estimate(const std::vector<Eigen::VectorXd>& responses, const std::vector<Eigen::MatrixXd>& x,
                    const AssignmentMatrix& d, const StudentVarianceComponents<double>& vc);

}  // namespace mld
