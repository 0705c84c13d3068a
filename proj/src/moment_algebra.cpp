#include "pfree/moment_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pfree {

namespace {
constexpr double kAtomTolerance = 1e-12;
}

AtomicMeasure AtomicMeasure::from_atoms(std::vector<std::pair<double, double>> atoms) {
    if (atoms.empty()) throw std::invalid_argument("AtomicMeasure: no atoms");
    std::sort(atoms.begin(), atoms.end());
    AtomicMeasure m;
    double total = 0.0;
    for (const auto& [x, w] : atoms) {
        if (!(w > 0.0) || !std::isfinite(x)) throw std::invalid_argument("AtomicMeasure: weights must be positive");
        total += w;
        if (!m.atoms.empty() && std::abs(m.atoms.back().first - x) <= kAtomTolerance)
            m.atoms.back().second += w;
        else
            m.atoms.emplace_back(x, w);
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("AtomicMeasure: weights must sum to 1");
    return m;
}

MomentSequence<double> AtomicMeasure::moments(int order) const {
    Vector<double> mu = Vector<double>::Zero(order + 1);
    for (const auto& [x, w] : atoms) {
        double p = 1.0;
        for (int k = 0; k <= order; ++k) {
            mu(k) += w * p;
            p *= x;
        }
    }
    mu(0) = 1.0;
    return MomentSequence<double>(mu);
}

AtomicMeasure atomic_classical_convolve(const AtomicMeasure& a, const AtomicMeasure& b) {
    std::vector<std::pair<double, double>> sums;
    sums.reserve(a.atoms.size() * b.atoms.size());
    for (const auto& [xa, wa] : a.atoms)
        for (const auto& [xb, wb] : b.atoms) sums.emplace_back(xa + xb, wa * wb);
    return AtomicMeasure::from_atoms(std::move(sums));
}

double arcsine_density(double x) {
    if (std::abs(x) >= 2.0) return 0.0;
    return 1.0 / (std::numbers::pi * std::sqrt(4.0 - x * x));
}

double arcsine_cdf(double x) {
    if (x <= -2.0) return 0.0;
    if (x >= 2.0) return 1.0;
    return 0.5 + std::asin(x / 2.0) / std::numbers::pi;
}

}  // namespace pfree
