#include "pfree/scalar.hpp"

#include <cctype>
#include <stdexcept>

namespace pfree {

namespace {

boost::multiprecision::cpp_int parse_integer(std::string_view digits) {
    if (digits.empty()) throw std::invalid_argument("parse_rational: empty number");
    for (char c : digits)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw std::invalid_argument("parse_rational: invalid digit in '" + std::string(digits) + "'");
    return boost::multiprecision::cpp_int(std::string(digits));
}

}  // namespace

Rational parse_rational(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) throw std::invalid_argument("parse_rational: empty value");

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        const Rational num = parse_rational(text.substr(0, slash));
        const Rational den = parse_rational(text.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("parse_rational: zero denominator");
        return num / den;
    }

    bool negative = false;
    if (text.front() == '+' || text.front() == '-') {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }

    long exponent = 0;
    if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
        try {
            exponent = std::stol(std::string(text.substr(e + 1)));
        } catch (const std::exception&) {
            throw std::invalid_argument("parse_rational: bad exponent in '" + std::string(text) + "'");
        }
        text = text.substr(0, e);
    }

    std::string digits;
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        digits = std::string(text.substr(0, dot)) + std::string(text.substr(dot + 1));
        exponent -= static_cast<long>(text.size() - dot - 1);
    } else {
        digits = std::string(text);
    }
    if (digits.empty()) throw std::invalid_argument("parse_rational: no digits");

    Rational value(parse_integer(digits));
    const boost::multiprecision::cpp_int ten_pow = boost::multiprecision::pow(
        boost::multiprecision::cpp_int(10), static_cast<unsigned>(std::labs(exponent)));
    if (exponent > 0) value *= Rational(ten_pow);
    if (exponent < 0) value /= Rational(ten_pow);
    return negative ? Rational(-value) : value;
}

}  // namespace pfree
