#include <doctest.h>

#include "oracles.hpp"
#include "pfree/pathsum.hpp"

using namespace pfree;
using Model = LatticeModel<Rational>;

namespace {

MomentSequence<Rational> gaussian(int order) {
    const auto m = oracle::gaussian_moments(order);
    Vector<Rational> v(order + 1);
    for (int k = 0; k <= order; ++k) v(k) = m[k];
    return MomentSequence<Rational>(v);
}

}  // namespace

TEST_CASE("pathsum examples on the ring") {
    const auto ring = Model::circulant_chain(8, gaussian(8));
    CHECK(exact_word_net(Word::parse("AB"), ring) == Rational(0));
    CHECK(exact_word_net(Word::parse("(AB)^4"), ring) == Rational(2));
    CHECK(exact_word_net(Word::parse("A2B2"), ring) == Rational(2));
    CHECK(exact_word_net(Word::parse("B2"), ring) == Rational(2));
    CHECK(exact_word_net(Word::parse("A4"), ring) == Rational(3));
    CHECK(exact_word_net(Word(), ring) == Rational(1));
}

TEST_CASE("open chain boundary correction") {
    for (int n = 4; n <= 12; ++n) {
        const auto open = Model::open_chain(n, gaussian(8));
        CHECK(boundary_corrected_word_net(Word::parse("(AB)^4"), open) == Rational(2) - Rational(2, n));
        CHECK(boundary_corrected_word_net(Word::parse("B2"), open) == Rational(2) - Rational(2, n));
    }
    CHECK(exact_word_net(Word::parse("B2"), Model::open_chain(2, gaussian(2))) == Rational(1));
    CHECK_THROWS_AS(boundary_corrected_word_net(Word::parse("AB"), Model::circulant_chain(5, gaussian(2))),
                    std::invalid_argument);
}

TEST_CASE("pathsum agrees with symbolic expansion of the trace") {
    for (int n : {3, 4, 5}) {
        for (bool circulant : {true, false}) {
            const auto model = circulant ? Model::circulant_chain(n, gaussian(8)) : Model::open_chain(n, gaussian(8));
            const oracle::SymbolicTrace oracle_trace(oracle::chain_adjacency(n, circulant), oracle::gaussian_moments(8));
            for (int len = 1; len <= 6; ++len)
                for (const auto& nk : enumerate_necklaces(len, 2)) {
                    const auto letters = nk.representative.letters();
                    CHECK(exact_word_net(nk.representative, model) == oracle_trace.net(letters));
                }
        }
    }
}

TEST_CASE("exact_sum_moment on the Gaussian ring") {
    const auto ring = Model::circulant_chain(10, gaussian(8));
    CHECK(exact_sum_moment(2, ring) == Rational(3));
    CHECK(exact_sum_moment(4, ring) == Rational(17));
    CHECK(exact_sum_moment(6, ring) == Rational(125));
    CHECK(exact_sum_moment(8, ring) == Rational(1099));
    CHECK(exact_sum_moment(0, ring) == Rational(1));
    CHECK(exact_sum_moment(5, ring) == Rational(0));
}

TEST_CASE("odd numbers of hops vanish on bipartite chains") {
    const auto ring = Model::circulant_chain(8, gaussian(8));
    for (const char* w : {"B", "AB3", "A2BAB2", "B3"}) CHECK(exact_word_net(Word::parse(w), ring) == Rational(0));
}

TEST_CASE("centered word nets") {
    const auto ring = Model::circulant_chain(8, gaussian(8));
    CHECK(exact_centered_word_net(Word::parse("(AB)^4"), ring) == Rational(2));
    // <(A^2 - 1)(B^2 - 2)> = <A^2 B^2> - 2.
    const Rational centered = exact_centered_word_net(Word::parse("A2B2"), ring);
    CHECK(centered == exact_word_net(Word::parse("A2B2"), ring) - Rational(1) * Rational(2));
    CHECK(exact_centered_word_net(Word::parse("A"), ring) == Rational(0));
}

TEST_CASE("pathsum errors") {
    const auto ring = Model::circulant_chain(8, gaussian(4));
    PathsumOptions tight;
    tight.max_hops = 3;
    CHECK_THROWS_AS(exact_word_net(Word::parse("(AB)^4"), ring, tight), ResourceLimitError);
    CHECK_THROWS_AS(exact_word_net(Word::parse("A6B2"), ring), std::out_of_range);
    Eigen::MatrixXi bad = Eigen::MatrixXi::Zero(3, 3);
    bad(0, 1) = 1;
    CHECK_THROWS_AS(Model(bad, gaussian(2)), std::invalid_argument);
    Eigen::MatrixXi loop = Eigen::MatrixXi::Zero(2, 2);
    loop(0, 0) = 1;
    CHECK_THROWS_AS(Model(loop, gaussian(2)), std::invalid_argument);
    CHECK_THROWS_AS(Model::circulant_chain(2, gaussian(2)), std::invalid_argument);
}

TEST_CASE("general graphs and floating point") {
    Eigen::MatrixXi star = Eigen::MatrixXi::Zero(4, 4);
    for (int j = 1; j < 4; ++j) star(0, j) = star(j, 0) = 1;
    const LatticeModel<double> model(star, MomentSequence<double>({1.0, 0.0, 1.0, 0.0, 3.0}));
    const oracle::SymbolicTrace oracle_trace(star, oracle::gaussian_moments(4));
    for (const char* w : {"B2", "A2B2", "ABAB", "B4", "A2B4"})
        CHECK(exact_word_net(Word::parse(w), model) ==
              doctest::Approx(oracle_trace.net(Word::parse(w).letters()).convert_to<double>()));
}
