#ifndef PFREE_SCALAR_HPP
#define PFREE_SCALAR_HPP

#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <boost/multiprecision/cpp_int.hpp>

namespace pfree {

// Exact rational scalar. Expression templates are disabled so the type
// behaves like a plain value inside Eigen containers and generic code.
using Rational = boost::multiprecision::number<
    boost::multiprecision::rational_adaptor<boost::multiprecision::cpp_int_backend<>>,
    boost::multiprecision::et_off>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return static_cast<double>(x); }

inline bool is_exact_zero(double x) { return x == 0.0; }
inline bool is_exact_zero(const Rational& x) { return x == 0; }

inline std::string to_string(const Rational& x) { return x.str(); }

/// Parses "3", "-2/7" or a finite decimal such as "0.125" / "1e-3" into an
/// exact rational. Throws std::invalid_argument on malformed text.
Rational parse_rational(std::string_view text);

}  // namespace pfree

namespace Eigen {

template <>
struct NumTraits<pfree::Rational> : GenericNumTraits<pfree::Rational> {
    using Real = pfree::Rational;
    using NonInteger = pfree::Rational;
    using Nested = pfree::Rational;
    using Literal = pfree::Rational;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 8,
        AddCost = 32,
        MulCost = 64
    };
    static inline Real epsilon() { return 0; }
    static inline Real dummy_precision() { return 0; }
    static inline int digits10() { return 0; }
};

}  // namespace Eigen

#endif
