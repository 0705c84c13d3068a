#ifndef PFREE_FORMAL_SERIES_HPP
#define PFREE_FORMAL_SERIES_HPP

#include <algorithm>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pfree/scalar.hpp"

namespace pfree {

/// Truncated formal power series c_0 + c_1 x + ... + c_K x^K.
///
/// The truncation order K is part of the value: binary operations truncate
/// to the shorter operand and never invent coefficients past it.
template <typename Scalar>
class PowerSeries {
public:
    PowerSeries() : coeffs_(Vector<Scalar>::Zero(1)) {}

    explicit PowerSeries(Vector<Scalar> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.size() == 0) throw std::invalid_argument("PowerSeries: empty coefficient vector");
    }

    /// Leading coefficients, zero-padded up to the given truncation order.
    PowerSeries(std::initializer_list<Scalar> leading, int order) : coeffs_(Vector<Scalar>::Zero(order + 1)) {
        if (order < 0) throw std::invalid_argument("PowerSeries: negative truncation order");
        if (static_cast<int>(leading.size()) > order + 1)
            throw std::invalid_argument("PowerSeries: more coefficients than the truncation order allows");
        int j = 0;
        for (const auto& c : leading) coeffs_(j++) = c;
    }

    static PowerSeries zero(int order) { return PowerSeries(Vector<Scalar>::Zero(order + 1)); }

    static PowerSeries identity(int order) {
        auto s = zero(order);
        if (order >= 1) s.coeffs_(1) = Scalar(1);
        return s;
    }

    int order() const { return static_cast<int>(coeffs_.size()) - 1; }

    const Scalar& operator[](int j) const { return coeffs_(j); }
    Scalar& operator[](int j) { return coeffs_(j); }

    const Vector<Scalar>& coefficients() const { return coeffs_; }

    PowerSeries truncated(int order) const {
        if (order > this->order()) throw std::invalid_argument("PowerSeries: cannot extend truncation order");
        return PowerSeries(Vector<Scalar>(coeffs_.head(order + 1)));
    }

    friend bool operator==(const PowerSeries& a, const PowerSeries& b) {
        return a.coeffs_.size() == b.coeffs_.size() && a.coeffs_ == b.coeffs_;
    }

private:
    Vector<Scalar> coeffs_;
};

namespace detail {

template <typename Scalar>
std::string describe(const Scalar& x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

}  // namespace detail

template <typename Scalar>
PowerSeries<Scalar> operator+(const PowerSeries<Scalar>& a, const PowerSeries<Scalar>& b) {
    const int k = std::min(a.order(), b.order());
    return PowerSeries<Scalar>(Vector<Scalar>(a.coefficients().head(k + 1) + b.coefficients().head(k + 1)));
}

template <typename Scalar>
PowerSeries<Scalar> operator-(const PowerSeries<Scalar>& a, const PowerSeries<Scalar>& b) {
    const int k = std::min(a.order(), b.order());
    return PowerSeries<Scalar>(Vector<Scalar>(a.coefficients().head(k + 1) - b.coefficients().head(k + 1)));
}

/// Cauchy product truncated at min(K_a, K_b).
template <typename Scalar>
PowerSeries<Scalar> series_multiply(const PowerSeries<Scalar>& a, const PowerSeries<Scalar>& b) {
    const int k = std::min(a.order(), b.order());
    auto out = PowerSeries<Scalar>::zero(k);
    for (int i = 0; i <= k; ++i) {
        if (is_exact_zero(a[i])) continue;
        for (int j = 0; i + j <= k; ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

template <typename Scalar>
PowerSeries<Scalar> operator*(const PowerSeries<Scalar>& a, const PowerSeries<Scalar>& b) {
    return series_multiply(a, b);
}

/// outer(inner(x)) through min(K_outer, K_inner). Requires inner(0) = 0.
template <typename Scalar>
PowerSeries<Scalar> series_compose(const PowerSeries<Scalar>& outer, const PowerSeries<Scalar>& inner) {
    if (!is_exact_zero(inner[0]))
        throw std::domain_error("series_compose: inner series has nonzero constant term " +
                                detail::describe(inner[0]));
    const int k = std::min(outer.order(), inner.order());
    const auto in = inner.truncated(k);
    // Horner: (((c_k) x + c_{k-1}) x + ...) with x -> inner.
    auto acc = PowerSeries<Scalar>::zero(k);
    for (int j = k; j >= 0; --j) {
        acc = series_multiply(acc, in);
        acc[0] += outer[j];
    }
    return acc;
}

/// Multiplicative inverse 1/f. Requires f(0) != 0.
template <typename Scalar>
PowerSeries<Scalar> series_reciprocal(const PowerSeries<Scalar>& f) {
    if (is_exact_zero(f[0])) throw std::domain_error("series_reciprocal: constant coefficient c_0 is zero");
    const int k = f.order();
    auto r = PowerSeries<Scalar>::zero(k);
    const Scalar inv0 = Scalar(1) / f[0];
    r[0] = inv0;
    for (int n = 1; n <= k; ++n) {
        Scalar acc(0);
        for (int j = 1; j <= n; ++j) acc += f[j] * r[n - j];
        r[n] = -acc * inv0;
    }
    return r;
}

/// Compositional inverse g with f(g(x)) = x through the truncation order,
/// solved order by order. Requires c_0 = 0 and c_1 != 0.
template <typename Scalar>
PowerSeries<Scalar> series_revert(const PowerSeries<Scalar>& f) {
    if (!is_exact_zero(f[0]))
        throw std::domain_error("series_revert: coefficient c_0 must be zero, got " + detail::describe(f[0]));
    if (f.order() < 1 || is_exact_zero(f[1]))
        throw std::domain_error("series_revert: coefficient c_1 must be nonzero");
    const int k = f.order();
    const Scalar inv1 = Scalar(1) / f[1];
    auto g = PowerSeries<Scalar>::zero(k);
    g[1] = inv1;
    for (int n = 2; n <= k; ++n) {
        // g_n is still zero, so [x^n] f(g) collects only the lower-order terms.
        const auto partial = series_compose(f.truncated(n), g.truncated(n));
        g[n] = -partial[n] * inv1;
    }
    return g;
}

template <typename Scalar>
PowerSeries<Scalar> series_derivative(const PowerSeries<Scalar>& f) {
    if (f.order() == 0) return PowerSeries<Scalar>::zero(0);
    auto d = PowerSeries<Scalar>::zero(f.order() - 1);
    for (int j = 1; j <= f.order(); ++j) d[j - 1] = f[j] * Scalar(j);
    return d;
}

/// log f for f(0) = 1, as the antiderivative of f'/f.
template <typename Scalar>
PowerSeries<Scalar> series_log(const PowerSeries<Scalar>& f) {
    if (f[0] != Scalar(1)) throw std::domain_error("series_log: constant coefficient must be 1");
    const int k = f.order();
    auto out = PowerSeries<Scalar>::zero(k);
    if (k == 0) return out;
    const auto ratio = series_multiply(series_derivative(f), series_reciprocal(f.truncated(k - 1)));
    for (int j = 1; j <= k; ++j) out[j] = ratio[j - 1] / Scalar(j);
    return out;
}

/// Cauchy transform as a series in u = 1/w: sum_k mu_k u^{k+1}.
/// `mu` holds mu_0..mu_K with mu_0 = 1.
template <typename Scalar>
PowerSeries<Scalar> cauchy_series_from_moments(const Vector<Scalar>& mu) {
    if (mu.size() == 0 || mu(0) != Scalar(1))
        throw std::domain_error("cauchy_series_from_moments: mu_0 must equal 1");
    auto g = PowerSeries<Scalar>::zero(static_cast<int>(mu.size()));
    for (Eigen::Index k = 0; k < mu.size(); ++k) g[static_cast<int>(k) + 1] = mu(k);
    return g;
}

/// Complete Bell polynomials B_0..B_n where a(j-1) holds a_j, from
/// exp(sum a_j t^j / j!) = sum B_m t^m / m!.
template <typename Scalar>
Vector<Scalar> complete_bell_sequence(int n, const Vector<Scalar>& a) {
    if (n < 0) throw std::invalid_argument("complete_bell: negative order");
    if (a.size() < n) throw std::invalid_argument("complete_bell: need a_1..a_n");
    Vector<Scalar> b = Vector<Scalar>::Zero(n + 1);
    b(0) = Scalar(1);
    for (int m = 0; m < n; ++m) {
        // B_{m+1} = sum_i C(m, i) B_{m-i} a_{i+1}
        Scalar acc(0);
        Scalar binom(1);
        for (int i = 0; i <= m; ++i) {
            acc += binom * b(m - i) * a(i);
            binom = binom * Scalar(m - i) / Scalar(i + 1);
        }
        b(m + 1) = acc;
    }
    return b;
}

template <typename Scalar>
Scalar complete_bell(int n, const Vector<Scalar>& a) {
    return complete_bell_sequence(n, a)(n);
}

/// Probabilist's Hermite values He_0(x)..He_n(x).
template <typename Scalar>
Vector<Scalar> hermite_sequence(int n, const Scalar& x) {
    if (n < 0) throw std::invalid_argument("hermite: negative degree");
    Vector<Scalar> h(n + 1);
    h(0) = Scalar(1);
    if (n >= 1) h(1) = x;
    for (int j = 1; j < n; ++j) h(j + 1) = x * h(j) - Scalar(j) * h(j - 1);
    return h;
}

template <typename Scalar>
Scalar hermite(int n, const Scalar& x) {
    return hermite_sequence(n, x)(n);
}

/// Monomial coefficients a_{mk} of He_m, row m, column k, for m <= n.
template <typename Scalar>
Matrix<Scalar> hermite_coefficients(int n) {
    Matrix<Scalar> a = Matrix<Scalar>::Zero(n + 1, n + 1);
    a(0, 0) = Scalar(1);
    if (n >= 1) a(1, 1) = Scalar(1);
    for (int m = 1; m < n; ++m) {
        for (int k = 0; k <= m; ++k) a(m + 1, k + 1) += a(m, k);
        for (int k = 0; k <= m - 1; ++k) a(m + 1, k) -= Scalar(m) * a(m - 1, k);
    }
    return a;
}

}  // namespace pfree

#endif
