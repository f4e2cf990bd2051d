#include "mld/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace mld {

namespace {

// Linear-interpolation quantile of sorted data.
double quantile(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

Density kde_density(std::span<const double> samples, int grid_size) {
    if (samples.empty()) throw std::invalid_argument("density needs at least one sample");
    if (grid_size < 2) throw std::invalid_argument("density grid needs at least two points");

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    Density out;
    if (sorted.front() == sorted.back()) {
        out.point_mass = true;
        out.point = sorted.front();
        return out;
    }

    const double n = static_cast<double>(sorted.size());
    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : sorted) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    const double h = 0.9 * spread * std::pow(n, -0.2);
    out.bandwidth = h;

    const double lo = sorted.front() - 3.0 * h;
    const double hi = sorted.back() + 3.0 * h;
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
    out.x.resize(grid_size);
    out.y.resize(grid_size);
    for (int k = 0; k < grid_size; ++k) {
        const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(grid_size - 1);
        // Only samples within 8 bandwidths contribute at double precision.
        const auto first = std::lower_bound(sorted.begin(), sorted.end(), x - 8.0 * h);
        const auto last = std::upper_bound(first, sorted.end(), x + 8.0 * h);
        double sum = 0.0;
        for (auto it = first; it != last; ++it) {
            const double u = (x - *it) / h;
            sum += std::exp(-0.5 * u * u);
        }
        out.x[k] = x;
        out.y[k] = sum * norm;
    }
    return out;
}

double integrate(const Density& density) {
    if (density.point_mass) return 1.0;
    double total = 0.0;
    for (std::size_t k = 1; k < density.x.size(); ++k)
        total += 0.5 * (density.y[k] + density.y[k - 1]) * (density.x[k] - density.x[k - 1]);
    return total;
}

}  // namespace mld
