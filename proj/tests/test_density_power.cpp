#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mld/density.hpp"
#include "mld/power.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace mld;

TEST_CASE("normal_cdf against quadrature") {
    for (double x : {-6.0, -3.5, -1.96, -1.0, -0.2, 0.0, 0.3, 1.0, 1.6449, 2.8, 4.0}) {
        CAPTURE(x);
        CHECK(std::abs(normal_cdf(x) - oracle::normal_cdf_quadrature(x)) < 1e-12);
    }
    CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("normal_quantile inverts normal_cdf") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
    for (double p : {1e-12, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.7, 0.97575, 0.999, 1 - 1e-9}) {
        CAPTURE(p);
        CHECK(oracle::relative_error(normal_cdf(normal_quantile(p)), p) < 1e-12);
    }
    CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(normal_quantile(1.0), std::domain_error);
}

TEST_CASE("empirical_power") {
    const std::vector<double> se{0.5, 1.0, 2.0};
    CHECK(empirical_power(se, 0.0, 0.05) == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(empirical_power(se, 0.0, 0.2) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(empirical_power(se, 1e6, 0.05) == doctest::Approx(1.0).epsilon(1e-14));

    const std::vector<double> unit{1.0};
    const double expected = oracle::normal_cdf_quadrature(2.8 - 1.959963984540054) +
                            oracle::normal_cdf_quadrature(-2.8 - 1.959963984540054);
    CHECK(empirical_power(unit, 2.8, 0.05) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(std::abs(empirical_power(unit, 2.8, 0.05) - 0.7995) < 5e-4);
    CHECK(empirical_power(unit, -2.8, 0.05) == empirical_power(unit, 2.8, 0.05));

    SUBCASE("mean over samples") {
        const std::vector<double> two{1.0, 2.0};
        const double a = empirical_power(std::vector<double>{1.0}, 1.5, 0.05);
        const double b = empirical_power(std::vector<double>{2.0}, 1.5, 0.05);
        CHECK(empirical_power(two, 1.5, 0.05) == doctest::Approx((a + b) / 2));
    }
    SUBCASE("monotone in effect size") {
        double prev = 0.0;
        for (int k = 0; k <= 50; ++k) {
            const double p = empirical_power(se, 0.1 * k, 0.05);
            CHECK(p >= prev);
            prev = p;
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(empirical_power(std::vector<double>{}, 1.0, 0.05), std::invalid_argument);
        CHECK_THROWS_AS(empirical_power(se, 1.0, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(empirical_power(se, 1.0, 1.0), std::invalid_argument);
    }
}

TEST_CASE("kde_density point mass") {
    const std::vector<double> same(50, 0.2125);
    const Density d = kde_density(same);
    CHECK(d.point_mass);
    CHECK(d.point == 0.2125);
    CHECK(d.x.empty());
    CHECK(integrate(d) == 1.0);
    CHECK_FALSE(d.empty());
    const Density single = kde_density(std::vector<double>{3.0});
    CHECK(single.point_mass);
    CHECK_THROWS_AS(kde_density(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("kde_density symmetric samples") {
    std::vector<double> samples;
    for (int k = 0; k < 500; ++k) {
        samples.push_back(-1.0);
        samples.push_back(1.0);
    }
    const Density d = kde_density(samples, 257);
    REQUIRE(d.x.size() == 257);
    for (std::size_t k = 0; k < d.x.size(); ++k) {
        CHECK(std::abs(d.x[k] + d.x[d.x.size() - 1 - k]) < 1e-9);
        CHECK(std::abs(d.y[k] - d.y[d.y.size() - 1 - k]) < 1e-9);
    }
    CHECK(std::abs(integrate(d) - 1.0) < 0.02);
}

TEST_CASE("kde_density standard normal") {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> z;
    std::vector<double> samples(10000);
    for (double& s : samples) s = z(gen);
    const Density d = kde_density(samples);
    double peak = 0;
    for (double y : d.y) peak = std::max(peak, y);
    CHECK(oracle::relative_error(peak, 0.3989) < 0.10);
    CHECK(std::abs(integrate(d) - 1.0) < 0.02);
    CHECK(d.x.size() == 256);
    CHECK(d.x.front() < *std::min_element(samples.begin(), samples.end()));
    CHECK(d.x.back() > *std::max_element(samples.begin(), samples.end()));

    SUBCASE("bandwidth follows the rule of thumb") {
        std::vector<double> sorted = samples;
        std::sort(sorted.begin(), sorted.end());
        double mean = 0;
        for (double s : samples) mean += s;
        mean /= samples.size();
        double ss = 0;
        for (double s : samples) ss += (s - mean) * (s - mean);
        const double sd = std::sqrt(ss / (samples.size() - 1));
        const double h = 0.9 * std::min(sd, (sorted[7499] - sorted[2499]) / 1.34) * std::pow(10000.0, -0.2);
        CHECK(oracle::relative_error(d.bandwidth, h) < 0.01);
        CHECK(d.x.front() == doctest::Approx(sorted.front() - 3 * d.bandwidth));
        CHECK(d.x.back() == doctest::Approx(sorted.back() + 3 * d.bandwidth));
    }
}

TEST_CASE("kde_density with zero IQR falls back to sd") {
    std::vector<double> samples(100, 1.0);
    samples[0] = 0.0;
    samples[99] = 2.0;
    const Density d = kde_density(samples);
    CHECK_FALSE(d.point_mass);
    CHECK(d.bandwidth > 0.0);
    CHECK(std::abs(integrate(d) - 1.0) < 0.02);
    CHECK(std::all_of(d.y.begin(), d.y.end(), [](double y) { return y >= 0.0; }));
}

TEST_CASE("kde_density skewed variance-like samples integrate to one") {
    std::mt19937_64 gen(9);
    std::gamma_distribution<double> g(4.0, 0.05);
    for (int n : {20, 200, 5000}) {
        std::vector<double> samples(n);
        for (double& s : samples) s = g(gen);
        CHECK(std::abs(integrate(kde_density(samples)) - 1.0) < 0.02);
    }
}
