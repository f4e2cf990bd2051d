#pragma once

// Scalar closed forms for balanced student-to-teacher assignments and the
// contamination inflation of the within-school design. No matrices are built.
//
// A balanced school has m teachers and n students; each student takes c
// classes from c distinct teachers and every class has nc/m students. The
// trace identities below are exact when every c-subset of teachers is used by
// the same number of students (so D'D = alpha I + beta J); with only the
// row/column-sum constraints the J-trace is still exact.

#include "mld/designs.hpp"
#include "mld/errors.hpp"
#include "mld/types.hpp"

#include <stdexcept>
#include <string>

namespace mld {

struct BalancedSpec {
    int m{1};  // teachers per school
    int n{1};  // students per school
    int c{1};  // classes per student
    int a{2};  // schools

    void validate() const {
        if (m < 1 || n < 1) throw std::invalid_argument("balanced layout needs m >= 1 and n >= 1");
        if (c < 1 || c > m) throw std::invalid_argument("balanced layout needs 1 <= c <= m");
        if (a < 1) throw std::invalid_argument("balanced layout needs a >= 1");
        if ((static_cast<long long>(n) * c) % m != 0)
            throw UnsupportedLayout("balanced layout needs n*c divisible by m (n=" + std::to_string(n) +
                                    ", c=" + std::to_string(c) + ", m=" + std::to_string(m) + ")");
    }
};

template <typename Scalar>
struct BalancedTraces {
    Scalar trace_ones;  // tr(D' Sigma^{-1} D J)
    Scalar trace;       // tr(D' Sigma^{-1} D)
};

template <typename Scalar>
BalancedTraces<Scalar> balanced_traces(const BalancedSpec& spec, const StudentVarianceComponents<Scalar>& vc) {
    spec.validate();
    vc.validate();
    const Scalar m = spec.m, n = spec.n, c = spec.c;
    const Scalar trace_ones = m * n * c * c / (m * n * vc.sigma_s2 + n * c * c * vc.sigma_t2 + m * vc.sigma_eta2);
    Scalar within = 0;
    if (spec.c < spec.m)
        within = m * (m - 1) * n * c * (m - c) / (m * (m - 1) * vc.sigma_eta2 + n * c * (m - c) * vc.sigma_t2);
    return {trace_ones, (trace_ones + within) / m};
}

/// Treatment information of design 1 (every realization) or the expected
/// treatment information of designs 2 and 3, for a balanced assignment.
template <typename Scalar>
Scalar balanced_student_information(DesignKind kind, const BalancedSpec& spec,
                                    const StudentVarianceComponents<Scalar>& vc) {
    spec.validate();
    vc.validate();
    const Scalar m = spec.m, n = spec.n, c = spec.c, a = spec.a;
    const bool odd_schools = spec.a % 2 != 0;
    const bool odd_teachers = spec.m % 2 != 0;
    const bool odd_total = (spec.m * spec.a) % 2 != 0;

    const Scalar between = n * m * vc.sigma_s2 + n * c * c * vc.sigma_t2 + m * vc.sigma_eta2;
    const Scalar within_den = n * c * (m - c) * vc.sigma_t2 + m * (m - 1) * vc.sigma_eta2;
    const Scalar within_num = n * c * (m - c);  // zero when c == m

    switch (kind) {
        case DesignKind::RandomizeSchools:
            if (odd_schools) throw ParityError("randomize_schools requires an even number of schools");
            return a * c * c * n * m / between;
        case DesignKind::RandomizeWithinSchools:
            if (odd_teachers) throw ParityError("within_schools requires an even teacher count");
            if (spec.c == spec.m) return Scalar(0);
            return a * m * within_num / within_den;
        case DesignKind::CompletelyRandomized: {
            if (odd_total) throw ParityError("crd requires an even total teacher count");
            Scalar value = a * (a - 1) * m * n * c * c / between;
            if (spec.c < spec.m) value += a * a * m * (m - 1) * within_num / within_den;
            return value / (m * a - 1);
        }
    }
    return Scalar(0);
}

/// True iff the within-school design carries at least as much expected student
/// information as the randomize-schools design: n(m-c) sigma_s2 >= m(c-1) sigma_eta2.
template <typename Scalar>
bool efficiency_condition(const BalancedSpec& spec, const StudentVarianceComponents<Scalar>& vc) {
    if (spec.c < 1 || spec.c > spec.m) throw std::invalid_argument("efficiency condition needs 1 <= c <= m");
    const Scalar lhs = Scalar(spec.n) * Scalar(spec.m - spec.c) * vc.sigma_s2;
    const Scalar rhs = Scalar(spec.m) * Scalar(spec.c - 1) * vc.sigma_eta2;
    return lhs >= rhs;
}

namespace detail {

template <typename Scalar>
Scalar contamination_odds(Scalar q) {
    if (!(q >= 0 && q <= 1)) throw std::invalid_argument("contamination q must lie in [0, 1]");
    if (q == Scalar(1)) throw DegenerateContamination("q = 1 is a pole of the inflation factor");
    return q / (Scalar(2) * (Scalar(1) - q));
}

}  // namespace detail

/// Multiplier on the within-school teacher-level anticipated variance when
/// contaminated control teachers are flagged in the analysis model.
template <typename Scalar>
Scalar teacher_inflation_design2(Scalar q, int m, const TeacherVarianceComponents<Scalar>& vc) {
    vc.validate();
    if (m < 2) throw std::invalid_argument("teacher inflation needs m >= 2");
    const Scalar odds = detail::contamination_odds(q);
    return Scalar(1) + odds / (Scalar(1) - vc.sigma_v2 / (vc.sigma_eps2 + Scalar(m) * vc.sigma_v2));
}

/// Student-level counterpart for a balanced assignment. Equals
/// 1 + odds * tr[G Cov(R)] / tr(G) with G = D' Sigma^{-1} D; the sigma_eta2
/// coefficient in the denominator is m(m-1)/(m-c).
template <typename Scalar>
Scalar student_inflation_design2(Scalar q, const BalancedSpec& spec, const StudentVarianceComponents<Scalar>& vc) {
    spec.validate();
    vc.validate();
    if (spec.c == spec.m)
        throw std::invalid_argument("student inflation is undefined for c = m: design 2 carries no information");
    const Scalar odds = detail::contamination_odds(q);
    const Scalar m = spec.m, n = spec.n, c = spec.c;
    const Scalar num = m * n * vc.sigma_s2 + n * c * c * vc.sigma_t2 + m * vc.sigma_eta2;
    const Scalar den = (m - 1) * n * vc.sigma_s2 + n * c * c * vc.sigma_t2 + m * (m - 1) / (m - c) * vc.sigma_eta2;
    return Scalar(1) + odds * num / den;
}

}  // namespace mld
