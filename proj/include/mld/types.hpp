#pragma once

#include <Eigen/Dense>

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mld {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// School and residual variances of the teacher-level response.
template <typename Scalar = double>
struct TeacherVarianceComponents {
    Scalar sigma_v2{0};
    Scalar sigma_eps2{1};

    void validate() const {
        if (!(sigma_v2 >= Scalar(0))) throw std::invalid_argument("sigma_v2 must be >= 0");
        if (!(sigma_eps2 > Scalar(0))) throw std::invalid_argument("sigma_eps2 must be > 0");
    }

    /// Intraclass correlation sigma_v2 / (sigma_v2 + sigma_eps2).
    Scalar icc() const { return sigma_v2 / (sigma_v2 + sigma_eps2); }

    bool operator==(const TeacherVarianceComponents&) const = default;
};

/// School, teacher and student-residual variances of the student-level response.
template <typename Scalar = double>
struct StudentVarianceComponents {
    Scalar sigma_s2{0};
    Scalar sigma_t2{0};
    Scalar sigma_eta2{1};

    void validate() const {
        if (!(sigma_s2 >= Scalar(0))) throw std::invalid_argument("sigma_s2 must be >= 0");
        if (!(sigma_t2 >= Scalar(0))) throw std::invalid_argument("sigma_t2 must be >= 0");
        if (!(sigma_eta2 > Scalar(0))) throw std::invalid_argument("sigma_eta2 must be > 0");
    }

    bool operator==(const StudentVarianceComponents&) const = default;
};

/// Number of schools with per-school teacher and student counts.
struct StudyLayout {
    std::vector<int> teachers;
    std::vector<int> students;

    StudyLayout() = default;
    StudyLayout(std::vector<int> teachers_per_school, std::vector<int> students_per_school)
        : teachers(std::move(teachers_per_school)), students(std::move(students_per_school)) {
        validate();
    }

    static StudyLayout homogeneous(int schools, int teachers_per_school, int students_per_school) {
        return StudyLayout(std::vector<int>(schools < 0 ? 0 : schools, teachers_per_school),
                           std::vector<int>(schools < 0 ? 0 : schools, students_per_school));
    }

    int schools() const { return static_cast<int>(teachers.size()); }
    int total_teachers() const { return std::accumulate(teachers.begin(), teachers.end(), 0); }

    bool is_homogeneous() const {
        for (std::size_t i = 1; i < teachers.size(); ++i)
            if (teachers[i] != teachers[0] || students[i] != students[0]) return false;
        return true;
    }
    bool has_uniform_teachers() const {
        for (std::size_t i = 1; i < teachers.size(); ++i)
            if (teachers[i] != teachers[0]) return false;
        return true;
    }

    void validate() const {
        if (teachers.size() != students.size())
            throw std::invalid_argument("teacher and student count sequences differ in length");
        if (teachers.size() < 2) throw std::invalid_argument("at least two schools are required");
        for (int m : teachers)
            if (m < 1) throw std::invalid_argument("every school needs at least one teacher");
        for (int n : students)
            if (n < 1) throw std::invalid_argument("every school needs at least one student");
    }

    bool operator==(const StudyLayout&) const = default;
};

/// Per-school +1/-1 treatment indicators and optional 0/1 contamination indicators.
struct TreatmentAssignment {
    std::vector<Eigen::VectorXi> r;
    std::vector<Eigen::VectorXi> c;

    bool has_contamination() const { return !c.empty(); }
    int schools() const { return static_cast<int>(r.size()); }

    void validate() const {
        if (!c.empty() && c.size() != r.size())
            throw std::invalid_argument("contamination indicators must cover every school");
        for (std::size_t i = 0; i < r.size(); ++i) {
            for (Eigen::Index j = 0; j < r[i].size(); ++j)
                if (r[i](j) != 1 && r[i](j) != -1)
                    throw std::invalid_argument("treatment indicators must be +1 or -1");
            if (c.empty()) continue;
            if (c[i].size() != r[i].size())
                throw std::invalid_argument("contamination vector length differs from school size");
            for (Eigen::Index j = 0; j < c[i].size(); ++j) {
                if (c[i](j) != 0 && c[i](j) != 1)
                    throw std::invalid_argument("contamination indicators must be 0 or 1");
                if (c[i](j) == 1 && r[i](j) != -1)
                    throw std::invalid_argument("only control teachers can be contaminated");
            }
        }
    }
};

/// Per-school n_i x m_i course counts: entry (k, j) is the number of classes
/// student k takes with teacher j.
using SchoolAssignment = Eigen::MatrixXi;
using AssignmentMatrix = std::vector<SchoolAssignment>;

/// Symmetric information matrix with labelled parameters.
template <typename Scalar = double>
struct InformationMatrix {
    Matrix<Scalar> entries;
    std::vector<std::string> labels;

    Eigen::Index size() const { return entries.rows(); }
    Scalar operator()(Eigen::Index i, Eigen::Index j) const { return entries(i, j); }
};

inline std::vector<std::string> parameter_labels(Eigen::Index p) {
    std::vector<std::string> labels{"intercept", "treatment"};
    if (p > 2) labels.emplace_back("contamination");
    return labels;
}

}  // namespace mld
