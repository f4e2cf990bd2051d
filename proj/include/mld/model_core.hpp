#pragma once

// Covariance, precision and information matrices of the teacher- and
// student-level mixed models, plus extraction of the treatment variance.
//
// Teacher model, school i:  T_i = X_i beta + 1 v_i + eps_i
// Student model, school i:  Y_i = D_i (X_i theta + t_i) + 1 s_i + eta_i
//
// X_i = [1 R_i] or [1 R_i C_i] with R_i in {+1,-1} and C_i in {0,1}.

#include "mld/errors.hpp"
#include "mld/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mld {

template <typename Scalar>
Matrix<Scalar> teacher_covariance(int m, const TeacherVarianceComponents<Scalar>& vc) {
    if (m < 1) throw DimensionError("teacher count must be >= 1");
    Matrix<Scalar> v = Matrix<Scalar>::Constant(m, m, vc.sigma_v2);
    v.diagonal().array() += vc.sigma_eps2;
    return v;
}

/// Closed-form inverse of sigma_v2 J + sigma_eps2 I.
template <typename Scalar>
Matrix<Scalar> teacher_precision(int m, const TeacherVarianceComponents<Scalar>& vc) {
    if (m < 1) throw DimensionError("teacher count must be >= 1");
    vc.validate();
    const Scalar ones_coef =
        vc.sigma_v2 / (vc.sigma_eps2 * (vc.sigma_eps2 + vc.sigma_v2 * Scalar(m)));
    Matrix<Scalar> p = Matrix<Scalar>::Constant(m, m, -ones_coef);
    p.diagonal().array() += Scalar(1) / vc.sigma_eps2;
    return p;
}

/// Design matrix [1 R_i] (or [1 R_i C_i] when contamination is present) for one school.
template <typename Scalar = double>
Matrix<Scalar> school_design_matrix(const Eigen::VectorXi& r, const Eigen::VectorXi* c = nullptr) {
    const Eigen::Index m = r.size();
    const Eigen::Index p = c ? 3 : 2;
    if (c && c->size() != m) throw DimensionError("contamination vector length differs from school size");
    Matrix<Scalar> x(m, p);
    x.col(0).setOnes();
    x.col(1) = r.cast<Scalar>();
    if (c) x.col(2) = c->cast<Scalar>();
    return x;
}

template <typename Scalar = double>
std::vector<Matrix<Scalar>> design_matrices(const TreatmentAssignment& assignment) {
    std::vector<Matrix<Scalar>> x;
    x.reserve(assignment.r.size());
    for (std::size_t i = 0; i < assignment.r.size(); ++i)
        x.push_back(school_design_matrix<Scalar>(
            assignment.r[i], assignment.has_contamination() ? &assignment.c[i] : nullptr));
    return x;
}

namespace detail {

template <typename Scalar>
Eigen::Index common_columns(const std::vector<Matrix<Scalar>>& x) {
    if (x.empty()) throw DimensionError("no schools supplied");
    const Eigen::Index p = x.front().cols();
    for (const auto& xi : x)
        if (xi.cols() != p) throw DimensionError("design matrices disagree on column count");
    if (p < 1) throw DimensionError("design matrices have no columns");
    return p;
}

}  // namespace detail

/// Sum over schools of X_i' V_i^{-1} X_i, using the closed-form V_i^{-1}.
template <typename Scalar>
InformationMatrix<Scalar> teacher_information(const std::vector<Matrix<Scalar>>& x,
                                              const TeacherVarianceComponents<Scalar>& vc) {
    vc.validate();
    const Eigen::Index p = detail::common_columns(x);
    Matrix<Scalar> info = Matrix<Scalar>::Zero(p, p);
    for (const auto& xi : x) {
        const Scalar m = Scalar(xi.rows());
        const Scalar ones_coef = vc.sigma_v2 / (vc.sigma_eps2 + vc.sigma_v2 * m);
        const Vector<Scalar> col_sums = xi.colwise().sum().transpose();
        info.noalias() += (xi.transpose() * xi - ones_coef * col_sums * col_sums.transpose()) / vc.sigma_eps2;
    }
    return {info, parameter_labels(p)};
}

template <typename Scalar>
InformationMatrix<Scalar> teacher_information(const std::vector<Matrix<Scalar>>& x,
                                              const StudyLayout& layout,
                                              const TeacherVarianceComponents<Scalar>& vc) {
    if (static_cast<int>(x.size()) != layout.schools())
        throw DimensionError("design matrix count differs from school count");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i].rows() != layout.teachers[i])
            throw DimensionError("design matrix rows differ from teacher count of school " + std::to_string(i));
    return teacher_information(x, vc);
}

template <typename Scalar>
Matrix<Scalar> student_covariance(const SchoolAssignment& d, const StudentVarianceComponents<Scalar>& vc) {
    if ((d.array() < 0).any()) throw std::invalid_argument("course counts must be nonnegative");
    const Matrix<Scalar> dd = d.cast<Scalar>();
    Matrix<Scalar> sigma = vc.sigma_t2 * dd * dd.transpose();
    sigma.array() += vc.sigma_s2;
    sigma.diagonal().array() += vc.sigma_eta2;
    return sigma;
}

/// Solves against Sigma_i = sigma_eta2 I + L L', L = [1 D] diag(sigma_s, sigma_t, ..., sigma_t),
/// by factoring the (m+1)-dimensional capacitance matrix sigma_eta2 I + L'L.
/// All products with D are accumulated from the sparse rows of the course-count matrix.
template <typename Scalar = double>
class StudentCovarianceSolver {
public:
    StudentCovarianceSolver(const SchoolAssignment& d, const StudentVarianceComponents<Scalar>& vc)
        : d_(d), vc_(vc) {
        if (!(vc.sigma_s2 >= 0 && vc.sigma_t2 >= 0 && vc.sigma_eta2 >= 0))
            throw std::invalid_argument("variance components must be nonnegative");
        if ((d.array() < 0).any()) throw std::invalid_argument("course counts must be nonnegative");
        const Eigen::Index n = d.rows();
        const Eigen::Index m = d.cols();

        // gram_ = U'U with U = [1 D]
        gram_ = Matrix<Scalar>::Zero(m + 1, m + 1);
        gram_(0, 0) = Scalar(n);
        std::vector<std::pair<Eigen::Index, Scalar>> row;
        for (Eigen::Index k = 0; k < n; ++k) {
            row.clear();
            for (Eigen::Index j = 0; j < m; ++j)
                if (d(k, j) != 0) row.emplace_back(j + 1, Scalar(d(k, j)));
            for (const auto& [j, v] : row) {
                gram_(0, j) += v;
                for (const auto& [l, w] : row) gram_(j, l) += v * w;
            }
        }
        gram_.col(0).tail(m) = gram_.row(0).tail(m).transpose();

        scale_ = Vector<Scalar>::Constant(m + 1, std::sqrt(vc.sigma_t2));
        scale_(0) = std::sqrt(vc.sigma_s2);

        if (vc.sigma_eta2 > 0) {
            Matrix<Scalar> capacitance = scale_.asDiagonal() * gram_ * scale_.asDiagonal();
            capacitance.diagonal().array() += vc.sigma_eta2;
            capacitance_.compute(capacitance);
            if (capacitance_.info() != Eigen::Success)
                throw SingularCovariance("student covariance capacitance system is not positive definite");
        } else {
            dense_.compute(student_covariance(d, vc));
            if (!dense_.isInvertible())
                throw SingularCovariance("student covariance is singular: sigma_eta2 = 0 and the "
                                         "teacher/school structure is rank-deficient");
        }
    }

    Eigen::Index students() const { return d_.rows(); }
    Eigen::Index teachers() const { return d_.cols(); }

    /// Sigma_i^{-1} rhs.
    Matrix<Scalar> solve(const Matrix<Scalar>& rhs) const {
        if (rhs.rows() != d_.rows()) throw DimensionError("right-hand side rows differ from student count");
        if (vc_.sigma_eta2 <= 0) return dense_.solve(rhs);
        const Eigen::Index m = d_.cols();
        Matrix<Scalar> lt_rhs(m + 1, rhs.cols());
        lt_rhs.row(0) = rhs.colwise().sum();
        lt_rhs.bottomRows(m).noalias() = d_.cast<Scalar>().transpose() * rhs;
        lt_rhs = scale_.asDiagonal() * lt_rhs;
        const Matrix<Scalar> coef = scale_.asDiagonal() * capacitance_.solve(lt_rhs);
        Matrix<Scalar> out = rhs;
        out.noalias() -= Vector<Scalar>::Ones(rhs.rows()) * coef.row(0);
        out.noalias() -= d_.cast<Scalar>() * coef.bottomRows(m);
        return out / vc_.sigma_eta2;
    }

    /// D' Sigma_i^{-1} D, the m x m matrix that enters the student information.
    Matrix<Scalar> teacher_gram() const {
        const Eigen::Index m = d_.cols();
        if (vc_.sigma_eta2 <= 0) {
            const Matrix<Scalar> dd = d_.cast<Scalar>();
            return dd.transpose() * dense_.solve(dd);
        }
        const Matrix<Scalar> cross = scale_.asDiagonal() * gram_.rightCols(m);  // L'D
        Matrix<Scalar> g = gram_.bottomRightCorner(m, m) - cross.transpose() * capacitance_.solve(cross);
        g /= vc_.sigma_eta2;
        return Scalar(0.5) * (g + g.transpose());
    }

private:
    SchoolAssignment d_;
    StudentVarianceComponents<Scalar> vc_;
    Matrix<Scalar> gram_;
    Vector<Scalar> scale_;
    Eigen::LLT<Matrix<Scalar>> capacitance_;
    Eigen::FullPivLU<Matrix<Scalar>> dense_;
};

template <typename Scalar>
Matrix<Scalar> solve_student_system(const SchoolAssignment& d, const StudentVarianceComponents<Scalar>& vc,
                                    const Matrix<Scalar>& rhs) {
    return StudentCovarianceSolver<Scalar>(d, vc).solve(rhs);
}

template <typename Scalar>
Matrix<Scalar> student_teacher_gram(const SchoolAssignment& d, const StudentVarianceComponents<Scalar>& vc) {
    return StudentCovarianceSolver<Scalar>(d, vc).teacher_gram();
}

/// Sum over schools of X_i' D_i' Sigma_i^{-1} D_i X_i.
template <typename Scalar>
InformationMatrix<Scalar> student_information(const std::vector<Matrix<Scalar>>& x, const AssignmentMatrix& d,
                                              const StudentVarianceComponents<Scalar>& vc) {
    vc.validate();
    const Eigen::Index p = detail::common_columns(x);
    if (x.size() != d.size()) throw DimensionError("assignment matrix count differs from school count");
    Matrix<Scalar> info = Matrix<Scalar>::Zero(p, p);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (d[i].cols() != x[i].rows())
            throw DimensionError("assignment columns differ from teacher count of school " + std::to_string(i));
        const Matrix<Scalar> g = student_teacher_gram(d[i], vc);
        info.noalias() += x[i].transpose() * g * x[i];
    }
    info = Scalar(0.5) * (info + info.transpose());
    return {info, parameter_labels(p)};
}

template <typename Scalar>
struct TreatmentVariance {
    Scalar variance;
    /// Standard error of the experimental-minus-control difference (2 * coefficient).
    Scalar se_difference;
};

/// Relative pivot threshold below which the treatment direction is non-estimable.
inline constexpr double kEstimabilityTolerance = 1e-10;

/// [info^{-1}](index, index), computed as the reciprocal of the Schur complement
/// of the remaining parameters. Nuisance directions that carry no information
/// (e.g. an all-zero contamination column) are handled with a pseudo-inverse.
template <typename Scalar>
TreatmentVariance<Scalar> treatment_variance(const Matrix<Scalar>& info, Eigen::Index index = 1) {
    const Eigen::Index p = info.rows();
    if (info.cols() != p) throw DimensionError("information matrix must be square");
    if (index < 0 || index >= p) throw DimensionError("parameter index out of range");

    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> full(info, Eigen::EigenvaluesOnly);
    const Scalar norm = full.eigenvalues().cwiseAbs().maxCoeff();
    const Scalar tol = Scalar(kEstimabilityTolerance) * norm;
    if (!(norm > 0)) throw NonEstimable("information matrix is zero");

    std::vector<Eigen::Index> others;
    for (Eigen::Index j = 0; j < p; ++j)
        if (j != index) others.push_back(j);

    Scalar pivot = info(index, index);
    if (!others.empty()) {
        const auto q = static_cast<Eigen::Index>(others.size());
        Matrix<Scalar> block(q, q);
        Vector<Scalar> cross(q);
        for (Eigen::Index a = 0; a < q; ++a) {
            cross(a) = info(others[a], index);
            for (Eigen::Index b = 0; b < q; ++b) block(a, b) = info(others[a], others[b]);
        }
        Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(block);
        const Vector<Scalar> projected = eig.eigenvectors().transpose() * cross;
        for (Eigen::Index a = 0; a < q; ++a) {
            const Scalar lambda = eig.eigenvalues()(a);
            if (lambda > tol) pivot -= projected(a) * projected(a) / lambda;
        }
    }
    if (!(pivot > tol)) throw NonEstimable("treatment direction of the information matrix is singular");
    const Scalar variance = Scalar(1) / pivot;
    return {variance, Scalar(2) * std::sqrt(variance)};
}

template <typename Scalar>
TreatmentVariance<Scalar> treatment_variance(const InformationMatrix<Scalar>& info, Eigen::Index index = 1) {
    return treatment_variance(info.entries, index);
}

/// Non-throwing variant: nullopt when the treatment direction is non-estimable.
template <typename Scalar>
std::optional<Scalar> try_treatment_variance(const Matrix<Scalar>& info, Eigen::Index index = 1) {
    try {
        return treatment_variance(info, index).variance;
    } catch (const NonEstimable&) {
        return std::nullopt;
    }
}

/// alpha * teacher information + (1 - alpha) * student information.
template <typename Scalar>
Scalar combined_information(Scalar alpha, Scalar teacher_info, Scalar student_info) {
    if (!(alpha >= 0 && alpha <= 1)) throw std::invalid_argument("alpha must lie in [0, 1]");
    return alpha * teacher_info + (Scalar(1) - alpha) * student_info;
}

}  // namespace mld
