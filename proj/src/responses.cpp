#include "mld/responses.hpp"

#include "mld/errors.hpp"
#include "mld/model_core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace mld {

std::vector<Eigen::VectorXd> generate_teacher_responses(const std::vector<Eigen::MatrixXd>& x,
                                                        const TeacherVarianceComponents<double>& vc,
                                                        const Eigen::VectorXd& beta, Rng& rng) {
    const double sd_school = std::sqrt(vc.sigma_v2);
    const double sd_teacher = std::sqrt(vc.sigma_eps2);
    std::vector<Eigen::VectorXd> out;
    out.reserve(x.size());
    for (const auto& xi : x) {
        if (xi.cols() != beta.size()) throw DimensionError("coefficient length differs from design columns");
        Eigen::VectorXd t = xi * beta;
        const double v = sd_school * rng.normal();
        for (Eigen::Index j = 0; j < t.size(); ++j) t(j) += v + sd_teacher * rng.normal();
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<Eigen::VectorXd> generate_student_responses(const std::vector<Eigen::MatrixXd>& x,
                                                        const AssignmentMatrix& d,
                                                        const StudentVarianceComponents<double>& vc,
                                                        const Eigen::VectorXd& theta, Rng& rng) {
    if (x.size() != d.size()) throw DimensionError("assignment matrix count differs from school count");
    const double sd_school = std::sqrt(vc.sigma_s2);
    const double sd_teacher = std::sqrt(vc.sigma_t2);
    const double sd_student = std::sqrt(vc.sigma_eta2);
    std::vector<Eigen::VectorXd> out;
    out.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].cols() != theta.size()) throw DimensionError("coefficient length differs from design columns");
        if (d[i].cols() != x[i].rows()) throw DimensionError("assignment columns differ from teacher count");
        Eigen::VectorXd teacher_effect = x[i] * theta;
        for (Eigen::Index j = 0; j < teacher_effect.size(); ++j) teacher_effect(j) += sd_teacher * rng.normal();
        Eigen::VectorXd y = d[i].cast<double>() * teacher_effect;
        const double s = sd_school * rng.normal();
        for (Eigen::Index k = 0; k < y.size(); ++k) y(k) += s + sd_student * rng.normal();
        out.push_back(std::move(y));
    }
    return out;
}

namespace {

GlsFit solve_normal_equations(const Eigen::MatrixXd& info, const Eigen::VectorXd& score) {
    treatment_variance(info, 1);  // throws NonEstimable

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
    const double tol = kEstimabilityTolerance * eig.eigenvalues().cwiseAbs().maxCoeff();
    Eigen::VectorXd inv_values = Eigen::VectorXd::Zero(info.rows());
    for (Eigen::Index k = 0; k < info.rows(); ++k)
        if (eig.eigenvalues()(k) > tol) inv_values(k) = 1.0 / eig.eigenvalues()(k);
    const Eigen::MatrixXd cov = eig.eigenvectors() * inv_values.asDiagonal() * eig.eigenvectors().transpose();
    return {cov * score, cov};
}

}  // namespace

GlsFit gls_estimate(const std::vector<Eigen::VectorXd>& responses, const std::vector<Eigen::MatrixXd>& x,
                    const TeacherVarianceComponents<double>& vc) {
    if (responses.size() != x.size()) throw DimensionError("response count differs from school count");
    const Eigen::MatrixXd info = teacher_information(x, vc).entries;
    Eigen::VectorXd score = Eigen::VectorXd::Zero(info.rows());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (responses[i].size() != x[i].rows()) throw DimensionError("response length differs from teacher count");
        const auto m = static_cast<int>(x[i].rows());
        score.noalias() += x[i].transpose() * (teacher_precision(m, vc) * responses[i]);
    }
    return solve_normal_equations(info, score);
}

GlsFit gls_estimate(const std::vector<Eigen::VectorXd>& responses, const std::vector<Eigen::MatrixXd>& x,
                    const AssignmentMatrix& d, const StudentVarianceComponents<double>& vc) {
    if (responses.size() != x.size() || d.size() != x.size())
        throw DimensionError("response, design and assignment counts differ");
    const Eigen::Index p = x.empty() ? 0 : x.front().cols();
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd score = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (responses[i].size() != d[i].rows()) throw DimensionError("response length differs from student count");
        if (d[i].cols() != x[i].rows() || x[i].cols() != p) throw DimensionError("design dimensions disagree");
        const StudentCovarianceSolver<double> solver(d[i], vc);
        const Eigen::MatrixXd dx = d[i].cast<double>() * x[i];
        info.noalias() += x[i].transpose() * solver.teacher_gram() * x[i];
        score.noalias() += dx.transpose() * solver.solve(responses[i]);
    }
    info = 0.5 * (info + info.transpose());
    return solve_normal_equations(info, score);
}

}  // namespace mld
