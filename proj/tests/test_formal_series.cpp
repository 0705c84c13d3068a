#include <doctest.h>

#include <random>
#include <string>

#include "oracles.hpp"
#include "pfree/formal_series.hpp"

using namespace pfree;
using PS = PowerSeries<double>;
using PR = PowerSeries<Rational>;

namespace {

PS random_series(std::mt19937_64& rng, int order, bool normalized) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd c(order + 1);
    for (int j = 0; j <= order; ++j) c(j) = u(rng);
    if (normalized) {
        c(0) = 0.0;
        c(1) = 1.0;
    }
    return PS(c);
}

double max_abs_diff(const PS& a, const PS& b) {
    REQUIRE(a.order() == b.order());
    return (a.coefficients() - b.coefficients()).cwiseAbs().maxCoeff();
}

// [x^n] of the series f raised to power p (all coefficients through `order`).
PS power(const PS& f, int p, int order) {
    PS r({1.0}, order);
    for (int i = 0; i < p; ++i) r = series_multiply(r, f.truncated(order));
    return r;
}

}  // namespace

TEST_CASE("series_multiply examples") {
    CHECK(series_multiply(PS({1, 1}, 2), PS({1, -1}, 2)) == PS({1, 0, -1}, 2));
    CHECK(series_multiply(PS({1, 1, 1}, 2), PS({1}, 2)) == PS({1, 1, 1}, 2));
    CHECK(series_multiply(PS({0, 1}, 2), PS({0, 1}, 2)) == PS({0, 0, 1}, 2));
    // Truncation follows the shorter operand.
    CHECK(series_multiply(PS({1, 1}, 1), PS({1, 1, 1, 1}, 3)).order() == 1);
}

TEST_CASE("series_multiply is commutative and associative") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const PS a = random_series(rng, 9, false), b = random_series(rng, 9, false), c = random_series(rng, 9, false);
        CHECK(max_abs_diff(a * b, b * a) < 1e-14);
        CHECK(max_abs_diff((a * b) * c, a * (b * c)) < 1e-13);
    }
}

TEST_CASE("series_compose examples") {
    const PS s({0, 2, -1, 3}, 3);
    CHECK(series_compose(PS::identity(3), s) == s);
    CHECK(series_compose(PS({0, 0, 1}, 4), PS({0, 1, 1}, 4)) == PS({0, 0, 1, 2, 1}, 4));
    const PS geometric({1, 1, 1, 1, 1}, 4);
    CHECK(series_compose(geometric, PS::identity(4)) == geometric);
    CHECK_THROWS_AS(series_compose(geometric, PS({1, 1}, 4)), std::domain_error);
}

TEST_CASE("series_revert examples") {
    CHECK(series_revert(PS::identity(5)) == PS::identity(5));
    const PS g = series_revert(PS({0, 1, 1}, 5));
    CHECK(max_abs_diff(g, PS({0, 1, -1, 2, -5, 14}, 5)) < 1e-14);
    const PS h = series_revert(PS({0, 1, -1}, 4));
    CHECK(max_abs_diff(h, PS({0, 1, 1, 2, 5}, 4)) < 1e-14);
    CHECK(series_compose(PS({0, 1, 1}, 5), g) == PS::identity(5));
}

TEST_CASE("series_revert is exact in rational mode") {
    const PR g = series_revert(PR({Rational(0), Rational(1), Rational(1)}, 8));
    // Signed Catalan numbers.
    const long long catalan[] = {1, 1, 2, 5, 14, 42, 132, 429};
    for (int n = 1; n <= 8; ++n) CHECK(g[n] == Rational((n % 2 ? 1 : -1) * catalan[n - 1]));
}

TEST_CASE("series_revert errors name the failing coefficient") {
    try {
        series_revert(PS({1, 1}, 3));
        FAIL("expected an error");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("c_0") != std::string::npos);
    }
    try {
        series_revert(PS({0, 0, 1}, 3));
        FAIL("expected an error");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("c_1") != std::string::npos);
    }
}

TEST_CASE("series_revert matches Lagrange inversion and composes to identity") {
    std::mt19937_64 rng(5);
    const int K = 12;
    for (int trial = 0; trial < 25; ++trial) {
        const PS f = random_series(rng, K, true);
        const PS g = series_revert(f);
        const double scale = 1.0 + g.coefficients().cwiseAbs().maxCoeff();
        CHECK(max_abs_diff(series_compose(f, g), PS::identity(K)) < 1e-12 * scale);
        // [x^n] g = (1/n) [x^{n-1}] (x / f(x))^n
        Eigen::VectorXd q(K + 1);
        q.head(K) = f.coefficients().tail(K);
        q(K) = 0.0;
        const PS phi = series_reciprocal(PS(Eigen::VectorXd(q.head(K))));
        for (int n = 1; n <= K; ++n) {
            const PS pn = power(phi, n, K - 1);
            CHECK(g[n] == doctest::Approx(pn[n - 1] / n).epsilon(1e-10));
        }
    }
}

TEST_CASE("cauchy_series_from_moments") {
    const PS a = cauchy_series_from_moments<double>(Eigen::Vector3d(1, 0, 1));
    CHECK(a == PS({0, 1, 0, 1}, 3));
    const PS b = cauchy_series_from_moments<double>(Eigen::Vector2d(1, 0.5));
    CHECK(b == PS({0, 1, 0.5}, 2));
    Eigen::VectorXd arcsine(5);
    arcsine << 1, 0, 2, 0, 6;
    CHECK(cauchy_series_from_moments<double>(arcsine) == PS({0, 1, 0, 2, 0, 6}, 5));
    CHECK_THROWS_AS(cauchy_series_from_moments<double>(Eigen::Vector2d(2, 0)), std::domain_error);
}

TEST_CASE("complete_bell examples") {
    CHECK(complete_bell<double>(0, Eigen::VectorXd()) == 1.0);
    CHECK(complete_bell<double>(2, Eigen::Vector2d(3, 5)) == doctest::Approx(14));
    CHECK(complete_bell<double>(3, Eigen::Vector3d(0, 0, 7)) == doctest::Approx(7));
}

TEST_CASE("complete_bell of Gaussian cumulants gives double factorials") {
    Eigen::VectorXd kappa = Eigen::VectorXd::Zero(12);
    kappa(1) = 1.0;
    const Eigen::VectorXd b = complete_bell_sequence<double>(10, kappa);
    double df = 1.0;
    for (int n = 1; n <= 10; ++n) {
        if (n % 2 == 1) {
            CHECK(b(n) == 0.0);
        } else {
            df *= n - 1;
            CHECK(b(n) == doctest::Approx(df));
        }
    }
}

TEST_CASE("complete_bell matches the set-partition sum") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd a(8);
        std::vector<double> c(9, 0.0);
        for (int j = 0; j < 8; ++j) c[j + 1] = a(j) = u(rng);
        for (int n = 0; n <= 8; ++n)
            CHECK(complete_bell<double>(n, a) == doctest::Approx(oracle::partition_sum(n, c, false)).epsilon(1e-12));
    }
}

TEST_CASE("hermite examples") {
    CHECK(hermite(0, 1.7) == 1.0);
    CHECK(hermite(2, 3.0) == doctest::Approx(8.0));
    CHECK(hermite(3, 2.0) == doctest::Approx(2.0));
    CHECK(hermite(3, Rational(2)) == Rational(2));
}

TEST_CASE("hermite recurrence agrees with Rodrigues' formula") {
    for (int n = 0; n <= 20; ++n) {
        const auto coeffs = oracle::rodrigues_hermite(n);
        for (double x = -5.0; x <= 5.0; x += 0.25) {
            const double expect = oracle::eval_poly(coeffs, x);
            CHECK(hermite(n, x) == doctest::Approx(expect).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("hermite_coefficients agree with Rodrigues' formula") {
    const Eigen::MatrixXd a = hermite_coefficients<double>(12);
    for (int n = 0; n <= 12; ++n) {
        const auto coeffs = oracle::rodrigues_hermite(n);
        for (int k = 0; k <= 12; ++k) {
            const double expect = k < static_cast<int>(coeffs.size()) ? coeffs[k] : 0.0;
            CHECK(a(n, k) == doctest::Approx(expect));
        }
    }
}

TEST_CASE("series_log and reciprocal") {
    // log(1/(1-x)) = sum x^n / n
    const PS f = series_reciprocal(PS({1, -1}, 6));
    const PS l = series_log(f);
    for (int n = 1; n <= 6; ++n) CHECK(l[n] == doctest::Approx(1.0 / n));
    CHECK_THROWS_AS(series_reciprocal(PS({0, 1}, 3)), std::domain_error);
}
