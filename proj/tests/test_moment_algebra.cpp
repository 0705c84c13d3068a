#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pfree/moment_algebra.hpp"

using namespace pfree;
using MS = MomentSequence<double>;
using MR = MomentSequence<Rational>;

namespace {

MS two_atom(int order) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(order + 1);
    for (int k = 0; k <= order; k += 2) mu(k) = 1.0;
    return MS(mu);
}

MR two_atom_exact(int order) {
    Vector<Rational> mu = Vector<Rational>::Constant(order + 1, Rational(0));
    for (int k = 0; k <= order; k += 2) mu(k) = 1;
    return MR(mu);
}

MS point_mass(double a, int order) {
    Eigen::VectorXd mu(order + 1);
    for (int k = 0; k <= order; ++k) mu(k) = std::pow(a, k);
    return MS(mu);
}

long long binomial(int n, int k) {
    long long r = 1;
    for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
    return r;
}

// Semicircle moments with variance s: Catalan numbers times s^{k/2}.
MS semicircle(double s, int order) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(order + 1);
    for (int k = 0; k <= order; k += 2) mu(k) = static_cast<double>(binomial(k, k / 2)) / (k / 2 + 1) * std::pow(s, k / 2);
    return MS(mu);
}

}  // namespace

TEST_CASE("MomentSequence invariants") {
    CHECK_THROWS_AS(MS(Eigen::Vector2d(2.0, 0.0)), std::domain_error);
    CHECK_THROWS_AS(MS(Eigen::Vector2d(1.0, NAN)), std::domain_error);
    CHECK_THROWS_AS(MS({1.0, 2.0}).truncated(3), std::out_of_range);
}

TEST_CASE("free cumulants of a point mass") {
    const auto nu = free_cumulants_from_moments(point_mass(0.7, 8));
    CHECK(nu[1] == doctest::Approx(0.7));
    for (int k = 2; k <= 8; ++k) CHECK(nu[k] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("free cumulants of the two-atom law match the closed-form R-transform") {
    // R(w) = (1 + sqrt(1 + 4 w^2)) / (2 w) = 1/w + sum_j binom(1/2, j) 4^j w^{2j-1} / 2.
    const auto nu = free_cumulants_from_moments(two_atom(12));
    double binom_half = 1.0;
    for (int j = 1; j <= 6; ++j) {
        binom_half *= (0.5 - (j - 1)) / j;
        CHECK(nu[2 * j] == doctest::Approx(binom_half * std::pow(4.0, j) / 2.0));
        CHECK(nu[2 * j - 1] == doctest::Approx(0.0).scale(1.0));
    }
    CHECK(nu[2] == doctest::Approx(1.0));
    CHECK(nu[4] == doctest::Approx(-1.0));
}

TEST_CASE("free cumulants of the semicircle") {
    const auto nu = free_cumulants_from_moments(MS({1, 0, 1, 0, 2, 0, 5}));
    CHECK(nu[2] == doctest::Approx(1.0));
    for (int k : {1, 3, 4, 5, 6}) CHECK(nu[k] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("moments from free cumulants match the non-crossing partition sum") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 4; ++trial) {
        Eigen::VectorXd v(9);
        std::vector<double> c(9);
        v(0) = c[0] = 1.0;
        for (int k = 1; k <= 8; ++k) c[k] = v(k) = u(rng);
        const auto mu = moments_from_free_cumulants(FreeCumulantSequence<double>(v));
        for (int n = 1; n <= 8; ++n)
            CHECK(mu[n] == doctest::Approx(oracle::partition_sum(n, c, true)).epsilon(1e-10));
    }
    const auto catalan = moments_from_free_cumulants(FreeCumulantSequence<double>(
        (Eigen::VectorXd(7) << 1, 0, 1, 0, 0, 0, 0).finished()));
    const double expect[] = {1, 0, 1, 0, 2, 0, 5};
    for (int k = 0; k <= 6; ++k) CHECK(catalan[k] == doctest::Approx(expect[k]));
    const auto constant = moments_from_free_cumulants(FreeCumulantSequence<double>(
        (Eigen::VectorXd(5) << 1, 0.3, 0, 0, 0).finished()));
    for (int k = 0; k <= 4; ++k) CHECK(constant[k] == doctest::Approx(std::pow(0.3, k)));
}

TEST_CASE("classical cumulants") {
    const auto g = classical_cumulants_from_moments(MS({1, 0, 1, 0, 3}));
    CHECK(g[1] == doctest::Approx(0.0).scale(1.0));
    CHECK(g[2] == doctest::Approx(1.0));
    CHECK(g[3] == doctest::Approx(0.0).scale(1.0));
    CHECK(g[4] == doctest::Approx(0.0).scale(1.0));
    const auto pm = classical_cumulants_from_moments(point_mass(-1.3, 6));
    CHECK(pm[1] == doctest::Approx(-1.3));
    for (int k = 2; k <= 6; ++k) CHECK(pm[k] == doctest::Approx(0.0).scale(1.0));
    const MS x({1, 0.4, 2.0, 0.1});
    CHECK(classical_cumulants_from_moments(x)[2] == doctest::Approx(2.0 - 0.16));
    CHECK_THROWS_AS(g[0], std::out_of_range);
}

TEST_CASE("moments from classical cumulants match the set-partition sum") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd kappa(8);
    std::vector<double> c(9, 0.0);
    for (int k = 1; k <= 8; ++k) c[k] = kappa(k - 1) = u(rng);
    const auto mu = moments_from_classical_cumulants(ClassicalCumulantSequence<double>(kappa));
    for (int n = 1; n <= 8; ++n) CHECK(mu[n] == doctest::Approx(oracle::partition_sum(n, c, false)).epsilon(1e-12));
}

TEST_CASE("round trips through order 12") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const MS mu(oracle::random_atomic_moments(rng, 5, 12, 1.2));
        const auto free_back = moments_from_free_cumulants(free_cumulants_from_moments(mu));
        const auto classical_back = moments_from_classical_cumulants(classical_cumulants_from_moments(mu));
        for (int k = 0; k <= 12; ++k) {
            CHECK(std::abs(free_back[k] - mu[k]) < 1e-9);
            CHECK(std::abs(classical_back[k] - mu[k]) < 1e-9);
        }
    }
}

TEST_CASE("free_convolve examples") {
    const auto r = free_convolve(two_atom_exact(12), two_atom_exact(12), 12);
    for (int n = 1; n <= 6; ++n) {
        CHECK(r[2 * n] == Rational(binomial(2 * n, n)));
        CHECK(r[2 * n - 1] == Rational(0));
    }
    const MS x({1, 0.2, 1.5, -0.3, 4.0});
    const auto id = free_convolve(x, point_mass(0.0, 4), 4);
    for (int k = 0; k <= 4; ++k) CHECK(id[k] == doctest::Approx(x[k]));
    const auto sc = free_convolve(semicircle(1.0, 6), semicircle(1.0, 6), 6);
    CHECK(sc[2] == doctest::Approx(2.0));
    CHECK(sc[4] == doctest::Approx(8.0));
    CHECK(sc[6] == doctest::Approx(40.0));
}

TEST_CASE("classical_convolve examples") {
    const auto r = classical_convolve(two_atom(4), two_atom(4), 4);
    CHECK(r[2] == doctest::Approx(2.0));
    CHECK(r[4] == doctest::Approx(8.0));
    const MS x({1, 0.2, 1.5, -0.3, 4.0});
    const auto id = classical_convolve(x, point_mass(0.0, 4), 4);
    for (int k = 0; k <= 4; ++k) CHECK(id[k] == doctest::Approx(x[k]));
    const auto g = classical_convolve(MS({1, 0, 1, 0, 3}), MS({1, 0, 1, 0, 3}), 4);
    CHECK(classical_cumulants_from_moments(g)[2] == doctest::Approx(2.0));
    CHECK(g[4] == doctest::Approx(12.0));
}

TEST_CASE("free and classical convolutions agree through order 3 only") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const MR a(oracle::random_atomic_moments(rng, 3, 6).cast<Rational>());
        const MR b(oracle::random_atomic_moments(rng, 4, 6).cast<Rational>());
        const auto f = free_convolve(a, b, 6);
        const auto c = classical_convolve(a, b, 6);
        for (int k = 0; k <= 3; ++k) CHECK(f[k] == c[k]);
    }
    CHECK(free_convolve(two_atom(4), two_atom(4), 4)[4] != doctest::Approx(classical_convolve(two_atom(4), two_atom(4), 4)[4]));
}

TEST_CASE("atomic_classical_convolve") {
    const auto half = AtomicMeasure::from_atoms({{-1.0, 0.5}, {1.0, 0.5}});
    const auto r = atomic_classical_convolve(half, half);
    REQUIRE(r.atoms.size() == 3);
    CHECK(r.atoms[0].first == doctest::Approx(-2.0));
    CHECK(r.atoms[0].second == doctest::Approx(0.25));
    CHECK(r.atoms[1].first == doctest::Approx(0.0));
    CHECK(r.atoms[1].second == doctest::Approx(0.5));
    CHECK(r.atoms[2].second == doctest::Approx(0.25));
    const auto zero = AtomicMeasure::from_atoms({{0.0, 1.0}});
    CHECK(atomic_classical_convolve(half, zero).atoms == half.atoms);
    const auto ab = atomic_classical_convolve(AtomicMeasure::from_atoms({{1.5, 1.0}}), AtomicMeasure::from_atoms({{-0.25, 1.0}}));
    REQUIRE(ab.atoms.size() == 1);
    CHECK(ab.atoms[0].first == doctest::Approx(1.25));
    CHECK(r.moments(4)[4] == doctest::Approx(8.0));
    CHECK_THROWS_AS(AtomicMeasure::from_atoms({{0.0, 0.5}}), std::invalid_argument);
}

TEST_CASE("arcsine density") {
    CHECK(arcsine_density(0.0) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)));
    CHECK(arcsine_density(2.5) == 0.0);
    CHECK(arcsine_density(-2.5) == 0.0);
    // Midpoint rule after x = 2 sin(theta), which removes the endpoint singularity.
    const int n = 20000;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double theta = -std::numbers::pi / 2 + (i + 0.5) * std::numbers::pi / n;
        total += arcsine_density(2.0 * std::sin(theta)) * 2.0 * std::cos(theta) * std::numbers::pi / n;
    }
    CHECK(std::abs(total - 1.0) < 1e-6);
    CHECK(arcsine_cdf(0.0) == doctest::Approx(0.5));
    CHECK(arcsine_cdf(3.0) == 1.0);
}

TEST_CASE("classical_joint_moment") {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(4), b = Eigen::VectorXd::Zero(4);
    a << 1, 0, 1, 2;
    b << 1, 0, 1, 5;
    const MS ma(a), mb(b);
    CHECK(classical_joint_moment(Word::parse("AABABB"), ma, mb) == doctest::Approx(10.0));
    CHECK(classical_joint_moment(Word::parse("ABABB"), ma, mb) == doctest::Approx(5.0));
    CHECK(classical_joint_moment(Word::parse("AB"), ma, mb) == doctest::Approx(0.0));
    CHECK(classical_joint_moment(Word(), ma, mb) == 1.0);
    // Invariance under block permutation.
    CHECK(classical_joint_moment(Word::parse("AAABBB"), ma, mb) == classical_joint_moment(Word::parse("ABAABB"), ma, mb));
    CHECK_THROWS_AS(classical_joint_moment(Word::parse("A4B"), ma, mb), std::out_of_range);
}

TEST_CASE("free_joint_moment examples") {
    const MS ma({1, 0.5, 2.0, 0.7, 5.0}), mb({1, -0.3, 1.2, 0.1, 3.0});
    CHECK(free_joint_moment(Word::parse("AB"), ma, mb) == doctest::Approx(0.5 * -0.3));
    const double abab = 2.0 * 0.09 + 0.25 * 1.2 - 0.25 * 0.09;
    CHECK(free_joint_moment(Word::parse("ABAB"), ma, mb) == doctest::Approx(abab));
    const MS ca({1, 0, 2.0, 0.7, 5.0}), cb({1, 0, 1.2, 0.1, 3.0});
    CHECK(free_joint_moment(Word::parse("ABAB"), ca, cb) == doctest::Approx(0.0).scale(1.0));
    CHECK(free_joint_moment(Word::parse("A3"), ma, mb) == doctest::Approx(0.7));
    CHECK(free_joint_moment(Word(), ma, mb) == 1.0);
}

TEST_CASE("free_joint_moment of alternating centered words vanishes") {
    // Letters whose odd moments vanish: every alternating word with odd
    // exponents is a product of centered factors.
    const MS ma({1, 0, 2, 0, 3, 0, 4, 0, 5}), mb({1, 0, 1, 0, 4, 0, 2, 0, 7});
    for (const char* w : {"ABAB", "AB3AB", "A3BAB3", "ABABAB", "ABA3B3"})
        CHECK(free_joint_moment(Word::parse(w), ma, mb) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("sum_moment_free") {
    const MS ma({1, 0.5, 2.0}), mb({1, -0.3, 1.2});
    CHECK(sum_moment_free(1, ma, mb) == doctest::Approx(0.2));
    CHECK(sum_moment_free(2, ma, mb) == doctest::Approx(2.0 + 2 * 0.5 * -0.3 + 1.2));
    CHECK(sum_moment_free(8, two_atom_exact(8), two_atom_exact(8)) == Rational(70));
}

TEST_CASE("sum_moment_free agrees with free_convolve") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const MS a(oracle::random_atomic_moments(rng, 4, 8));
        const MS b(oracle::random_atomic_moments(rng, 3, 8));
        const auto f = free_convolve(a, b, 8);
        for (int n = 1; n <= 8; ++n) CHECK(std::abs(sum_moment_free(n, a, b) - f[n]) < 1e-9);
    }
}
