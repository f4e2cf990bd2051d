#pragma once

#include <span>
#include <vector>

namespace mld {

/// Kernel density estimate on a uniform grid, or a point mass when every
/// sample is identical.
struct Density {
    std::vector<double> x;
    std::vector<double> y;
    double bandwidth{0.0};
    bool point_mass{false};
    double point{0.0};

    bool empty() const { return !point_mass && x.empty(); }
};

/// Gaussian kernel with Silverman's rule-of-thumb bandwidth
/// 0.9 * min(sd, IQR / 1.34) * n^(-1/5), evaluated on grid_size points over
/// [min - 3h, max + 3h].
Density kde_density(std::span<const double> samples, int grid_size = 256);

/// Trapezoid rule over the grid; 1 for a point mass.
double integrate(const Density& density);

}  // namespace mld
