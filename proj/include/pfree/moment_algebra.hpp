#ifndef PFREE_MOMENT_ALGEBRA_HPP
#define PFREE_MOMENT_ALGEBRA_HPP

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pfree/combinatorics.hpp"
#include "pfree/formal_series.hpp"
#include "pfree/scalar.hpp"

namespace pfree {

/// Moments mu_0..mu_K of a spectral measure, mu_0 = 1.
template <typename Scalar>
class MomentSequence {
public:
    MomentSequence() : values_(Vector<Scalar>::Ones(1)) {}

    explicit MomentSequence(Vector<Scalar> values) : values_(std::move(values)) {
        if (values_.size() == 0 || values_(0) != Scalar(1))
            throw std::domain_error("MomentSequence: mu_0 must equal 1");
        if constexpr (std::is_floating_point_v<Scalar>) {
            if (!values_.allFinite()) throw std::domain_error("MomentSequence: non-finite moment");
        }
    }

    MomentSequence(std::initializer_list<Scalar> values)
        : MomentSequence(Vector<Scalar>(Eigen::Map<const Vector<Scalar>>(values.begin(), values.size()))) {}

    int order() const { return static_cast<int>(values_.size()) - 1; }
    const Scalar& operator[](int k) const { return values_(k); }
    const Vector<Scalar>& values() const { return values_; }

    MomentSequence truncated(int order) const {
        if (order > this->order()) throw std::out_of_range("MomentSequence: order beyond available moments");
        return MomentSequence(Vector<Scalar>(values_.head(order + 1)));
    }

private:
    Vector<Scalar> values_;
};

/// Free cumulants nu_0..nu_K, the coefficients of R(w) = sum nu_k w^{k-1}.
template <typename Scalar>
class FreeCumulantSequence {
public:
    explicit FreeCumulantSequence(Vector<Scalar> values) : values_(std::move(values)) {
        if (values_.size() == 0 || values_(0) != Scalar(1))
            throw std::domain_error("FreeCumulantSequence: nu_0 must equal 1");
    }

    int order() const { return static_cast<int>(values_.size()) - 1; }
    const Scalar& operator[](int k) const { return values_(k); }
    const Vector<Scalar>& values() const { return values_; }

private:
    Vector<Scalar> values_;
};

/// Classical cumulants kappa_1..kappa_K; there is no index 0.
template <typename Scalar>
class ClassicalCumulantSequence {
public:
    explicit ClassicalCumulantSequence(Vector<Scalar> kappa) : values_(std::move(kappa)) {}

    int order() const { return static_cast<int>(values_.size()); }
    const Scalar& operator[](int k) const {
        if (k < 1 || k > order()) throw std::out_of_range("ClassicalCumulantSequence: index out of range");
        return values_(k - 1);
    }
    /// kappa_1..kappa_K packed from index 0.
    const Vector<Scalar>& values() const { return values_; }

private:
    Vector<Scalar> values_;
};

/// Finite discrete law sum_i w_i delta(x - x_i).
struct AtomicMeasure {
    std::vector<std::pair<double, double>> atoms;  // (location, weight), sorted by location

    /// Sorts atoms and merges coincident locations. Weights must be positive
    /// and sum to 1.
    static AtomicMeasure from_atoms(std::vector<std::pair<double, double>> atoms);

    MomentSequence<double> moments(int order) const;
};

// ---------------------------------------------------------------------------
// Cumulant conversions

template <typename Scalar>
FreeCumulantSequence<Scalar> free_cumulants_from_moments(const MomentSequence<Scalar>& mu) {
    const int k = mu.order();
    // G(u) = sum mu_j u^{j+1}; R(w) = 1 / G^{-1}(w), so w R(w) = w / G^{-1}(w).
    const auto inverse = series_revert(cauchy_series_from_moments(mu.values()));
    Vector<Scalar> shifted(k + 1);
    for (int j = 0; j <= k; ++j) shifted(j) = inverse[j + 1];
    const auto nu = series_reciprocal(PowerSeries<Scalar>(shifted));
    return FreeCumulantSequence<Scalar>(nu.coefficients());
}

template <typename Scalar>
MomentSequence<Scalar> moments_from_free_cumulants(const FreeCumulantSequence<Scalar>& nu) {
    const int k = nu.order();
    // G^{-1}(w) = w / (sum nu_j w^j); revert it back to G(u).
    const auto denom = series_reciprocal(PowerSeries<Scalar>(nu.values()));
    auto inverse = PowerSeries<Scalar>::zero(k + 1);
    for (int j = 0; j <= k; ++j) inverse[j + 1] = denom[j];
    const auto g = series_revert(inverse);
    Vector<Scalar> mu(k + 1);
    for (int j = 0; j <= k; ++j) mu(j) = g[j + 1];
    mu(0) = Scalar(1);
    return MomentSequence<Scalar>(mu);
}

template <typename Scalar>
ClassicalCumulantSequence<Scalar> classical_cumulants_from_moments(const MomentSequence<Scalar>& mu) {
    const int k = mu.order();
    // Exponential moment generating series sum mu_n t^n / n!.
    auto mgf = PowerSeries<Scalar>::zero(k);
    Scalar factorial(1);
    for (int n = 0; n <= k; ++n) {
        if (n > 0) factorial *= Scalar(n);
        mgf[n] = mu[n] / factorial;
    }
    const auto log_mgf = series_log(mgf);
    Vector<Scalar> kappa(k);
    factorial = Scalar(1);
    for (int n = 1; n <= k; ++n) {
        factorial *= Scalar(n);
        kappa(n - 1) = log_mgf[n] * factorial;
    }
    return ClassicalCumulantSequence<Scalar>(kappa);
}

template <typename Scalar>
MomentSequence<Scalar> moments_from_classical_cumulants(const ClassicalCumulantSequence<Scalar>& kappa) {
    return MomentSequence<Scalar>(complete_bell_sequence(kappa.order(), kappa.values()));
}

// ---------------------------------------------------------------------------
// Convolutions

template <typename Scalar>
MomentSequence<Scalar> free_convolve(const MomentSequence<Scalar>& a, const MomentSequence<Scalar>& b, int order) {
    const auto na = free_cumulants_from_moments(a.truncated(order));
    const auto nb = free_cumulants_from_moments(b.truncated(order));
    Vector<Scalar> sum = na.values() + nb.values();
    sum(0) = Scalar(1);  // R_A + R_B - 1/w
    return moments_from_free_cumulants(FreeCumulantSequence<Scalar>(sum));
}

template <typename Scalar>
MomentSequence<Scalar> classical_convolve(const MomentSequence<Scalar>& a, const MomentSequence<Scalar>& b,
                                          int order) {
    const auto ka = classical_cumulants_from_moments(a.truncated(order));
    const auto kb = classical_cumulants_from_moments(b.truncated(order));
    return moments_from_classical_cumulants(ClassicalCumulantSequence<Scalar>(ka.values() + kb.values()));
}

AtomicMeasure atomic_classical_convolve(const AtomicMeasure& a, const AtomicMeasure& b);

/// 1 / (pi sqrt(4 - x^2)) on (-2, 2), zero elsewhere.
double arcsine_density(double x);

/// 1/2 + arcsin(x/2)/pi clamped to [0, 1].
double arcsine_cdf(double x);

// ---------------------------------------------------------------------------
// Joint moments of two letters (A = 0, B = 1)

/// <A^{sum n_i}> <B^{sum m_i}>: the letters behave as if they commuted.
template <typename Scalar>
Scalar classical_joint_moment(const Word& w, const MomentSequence<Scalar>& mu_a, const MomentSequence<Scalar>& mu_b) {
    if (w.alphabet_size() != 2) throw std::invalid_argument("classical_joint_moment: word must use letters {A, B}");
    const int pa = w.letter_power(0);
    const int pb = w.letter_power(1);
    if (pa > mu_a.order() || pb > mu_b.order())
        throw std::out_of_range("classical_joint_moment: moment order beyond available moments");
    return mu_a[pa] * mu_b[pb];
}

/// Evaluates joint moments forced by freeness. Each word is reduced with the
/// centered-product identity: expand <prod (X_j - <X_j>)> = 0, substitute the
/// scalar factors, merge neighbouring blocks cyclically and recurse on the
/// strictly shorter words. Results are memoized on the canonical word.
///
/// Not thread-safe; use one evaluator per thread.
template <typename Scalar>
class FreeJointMoments {
public:
    FreeJointMoments(MomentSequence<Scalar> mu_a, MomentSequence<Scalar> mu_b)
        : mu_{std::move(mu_a), std::move(mu_b)} {}

    Scalar operator()(const Word& w) {
        if (w.alphabet_size() != 2) throw std::invalid_argument("free_joint_moment: word must use letters {A, B}");
        if (w.empty()) return Scalar(1);
        if (w.distinct_letters() == 1) {
            const auto& b = w.blocks().front();
            return pure(b.letter, w.length());
        }
        auto key = w.letters();
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;

        const auto& blocks = w.blocks();
        const int m = static_cast<int>(blocks.size());
        if (m > 30) throw std::length_error("free_joint_moment: too many blocks");
        std::vector<Scalar> centers(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) centers[j] = pure(blocks[j].letter, blocks[j].exponent);

        // <W> = -sum_{S nonempty} prod_{j in S} (-<X_j>) <W without S>
        Scalar acc(0);
        const std::uint32_t full = (std::uint32_t{1} << m) - 1;
        for (std::uint32_t s = 1; s <= full; ++s) {
            Scalar factor(1);
            bool zero = false;
            std::vector<Block> rest;
            for (int j = 0; j < m; ++j) {
                if (s & (std::uint32_t{1} << j)) {
                    if (is_exact_zero(centers[j])) {
                        zero = true;
                        break;
                    }
                    factor *= -centers[j];
                } else {
                    rest.push_back(blocks[j]);
                }
            }
            if (zero) continue;
            acc += factor * (*this)(Word(rest, 2));
        }
        const Scalar value = -acc;
        memo_.emplace(std::move(key), value);
        return value;
    }

private:
    Scalar pure(int letter, int power) const {
        const auto& mu = mu_[letter];
        if (power > mu.order()) throw std::out_of_range("free_joint_moment: moment order beyond available moments");
        return mu[power];
    }

    MomentSequence<Scalar> mu_[2];
    std::map<std::vector<int>, Scalar> memo_;
};

template <typename Scalar>
Scalar free_joint_moment(const Word& w, const MomentSequence<Scalar>& mu_a, const MomentSequence<Scalar>& mu_b) {
    return FreeJointMoments<Scalar>(mu_a, mu_b)(w);
}

/// mu_n(A + B) for free A, B via the word expansion over (n,2)-necklaces.
template <typename Scalar>
Scalar sum_moment_free(int n, const MomentSequence<Scalar>& mu_a, const MomentSequence<Scalar>& mu_b) {
    if (n == 0) return Scalar(1);
    FreeJointMoments<Scalar> eval(mu_a, mu_b);
    Scalar total(0);
    for (const auto& nk : word_expansion(n, 2)) total += Scalar(static_cast<long long>(nk.multiplicity)) * eval(nk.representative);
    return total;
}

}  // namespace pfree

#endif
