#ifndef PFREE_ANALYSIS_HPP
#define PFREE_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "pfree/combinatorics.hpp"
#include "pfree/matrix_lab.hpp"
#include "pfree/moment_algebra.hpp"

namespace pfree {

// ---------------------------------------------------------------------------
// Tests

/// Two-sided normal p-value of z.
double two_sided_p_value(double z);

/// z_{1 - alpha / (2 m)}: two-sided critical value with Bonferroni
/// correction over m tests.
double bonferroni_critical_value(double alpha, std::size_t tests);

struct ZTest {
    double estimate = 0.0;
    double standard_error = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    bool rejected = false;
};

/// Tests estimate == 0 against `critical`. A standard error that is zero up to
/// rounding (deterministic inputs) rejects only when |estimate| exceeds
/// 1e-9 (1 + scale).
ZTest z_test(double estimate, double standard_error, double critical, double scale = 0.0);

// ---------------------------------------------------------------------------
// Per-sample spectral data

/// Spectral moments 0..order of A_i, B_i and A_i + B_i for every sample, and
/// the free prediction mu_k(A_i [+] B_i) from each sample's pure moments.
struct SampleMoments {
    int order = 0;
    std::vector<Eigen::VectorXd> a;
    std::vector<Eigen::VectorXd> b;
    std::vector<Eigen::VectorXd> sum;
    std::vector<Eigen::VectorXd> free_predicted;
    std::vector<SpectrumSample> sum_spectra;

    std::size_t size() const { return a.size(); }
    /// Pooled moments of A (letter 0) or B (letter 1) through `order`.
    MomentSequence<double> pooled(int letter, int order) const;
};

SampleMoments compute_sample_moments(std::span<const MatrixPairSample> pairs, int order, int threads = 0);

// ---------------------------------------------------------------------------
// Degree of partial freeness

struct MomentTest {
    int order = 0;
    /// Mean over samples of mu_k(A_i + B_i) - mu_k(A_i [+] B_i), the free
    /// prediction taken from the sample's own pure moments.
    ZTest difference;
};

struct WordTest {
    Word word;
    /// Centered alternating product; vanishes in expectation under freeness.
    ZTest centered;
};

struct DegreeResult {
    std::optional<int> degree;          // smallest order rejected by either family
    std::optional<int> moment_degree;
    std::optional<int> word_degree;
    int max_order = 0;
    double alpha = 0.0;
    std::size_t samples = 0;
    double moment_critical = 0.0;       // Bonferroni over K moments at alpha / 2
    double word_critical = 0.0;         // Bonferroni over all mixed words at alpha / 2
    std::vector<MomentTest> moments;    // orders 1..K
    std::vector<WordTest> words;        // mixed necklaces of orders 2..K
};

/// Smallest k <= K at which A + B departs from the free prediction. Two test
/// families share the level alpha (alpha / 2 each, Bonferroni inside each):
/// moment differences mu_k(A+B) - mu_k(A [+] B) for k = 1..K, and centered
/// alternating words of orders 2..K with pooled centering constants.
///
/// Requires K >= 2, 0 < alpha < 1 and at least 30 samples.
DegreeResult detect_degree(std::span<const MatrixPairSample> pairs, int max_order, double alpha, int threads = 0);

/// Same, reusing precomputed moments (through order >= max_order).
DegreeResult detect_degree(std::span<const MatrixPairSample> pairs, const SampleMoments& moments, int max_order,
                           double alpha, int threads = 0);

// ---------------------------------------------------------------------------
// Word-level localization

struct WordStatistic {
    Word word;
    std::uint64_t multiplicity = 0;
    double estimate = 0.0;
    double standard_error = 0.0;
    double classical_prediction = 0.0;
    double free_prediction = 0.0;
    double centered_estimate = 0.0;
    double centered_standard_error = 0.0;
    double p_value_classical = 1.0;   // estimate vs classical prediction
    double p_value_free = 1.0;        // centered estimate vs 0
    bool flagged = false;
};

/// One statistic per (p,2)-necklace. Predictions use pooled pure moments; a
/// word is flagged when |centered| > z_{1 - alpha/(2 #words)} * centered SE.
std::vector<WordStatistic> localize_violations(std::span<const MatrixPairSample> pairs, int p, double alpha,
                                               int threads = 0);

// ---------------------------------------------------------------------------
// Densities

struct BandwidthPolicy {
    enum class Kind { silverman, normal_reference_derivative, fixed };
    Kind kind = Kind::silverman;
    int derivative_order = 0;
    double value = 0.0;

    /// 0.9 min(sd, IQR/1.34) n^{-1/5}.
    static BandwidthPolicy silverman() { return {}; }
    /// AMISE-optimal bandwidth for the r-th derivative of a normal reference
    /// density with the sample's standard deviation.
    static BandwidthPolicy normal_reference(int r) { return {Kind::normal_reference_derivative, r, 0.0}; }
    static BandwidthPolicy fixed(double h) { return {Kind::fixed, 0, h}; }
};

/// Throws std::domain_error for a sample without spread.
double select_bandwidth(std::span<const double> samples, const BandwidthPolicy& policy);

struct DensityEstimate {
    Eigen::VectorXd grid;    // ascending, uniform spacing
    Eigen::VectorXd values;
    double bandwidth = 0.0;
    int derivative_order = 0;
};

/// Uniform grid over [lo - 10h, hi + 10h].
Eigen::VectorXd density_grid(double lo, double hi, double bandwidth, int points = 1024);

/// Gaussian-kernel density estimate on an automatic grid.
DensityEstimate kde_density(std::span<const double> samples, const BandwidthPolicy& policy = {}, int points = 1024);

/// Gaussian-kernel density estimate with a given bandwidth on a given grid.
DensityEstimate kde_density(std::span<const double> samples, double bandwidth, const Eigen::VectorXd& grid);

/// r-th derivative of the estimate `base` built from `samples`:
/// sum_i (-1)^r He_r(u_i) phi(u_i) / (n h^{r+1}), u_i = (x - x_i)/h.
DensityEstimate kde_derivative(std::span<const double> samples, const DensityEstimate& base, int r);

struct CorrectedDensity {
    DensityEstimate density;      // clipped at zero
    Eigen::VectorXd unclipped;
    double clipped_mass = 0.0;    // integral of the removed negative part
};

/// base + (-1)^p (delta_mu / p!) base^{(p)}, the leading Edgeworth term.
CorrectedDensity edgeworth_corrected_density(std::span<const double> samples, const DensityEstimate& base, int p,
                                             double delta_mu);

/// Trapezoid rule on the estimate's grid of values(x) * x^power.
double integrate(const DensityEstimate& d, int power = 0);
double integrate(const Eigen::VectorXd& grid, const Eigen::VectorXd& values, int power = 0);

/// Gram-Charlier coefficients c_0..c_K about the standard Gaussian,
/// c_n = B_n(kappa_1 - 0, kappa_2 - 1, kappa_3, ...).
Eigen::VectorXd gram_charlier_coefficients(const MomentSequence<double>& mu);

/// Same coefficients as sum_k a_{nk} mu_k with He_n(x) = sum_k a_{nk} x^k.
Eigen::VectorXd gram_charlier_coefficients_hermite(const MomentSequence<double>& mu);

/// Largest |F_n(x) - F(x)| over the sorted sample.
template <typename Cdf>
double ks_distance(std::vector<double> samples, Cdf&& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
    }
    return d;
}

// ---------------------------------------------------------------------------
// Report

struct RunConfig {
    std::string ensemble;           // ensemble name or input path
    int dimension = 0;
    std::size_t samples = 0;        // t
    int max_order = 8;              // K
    double alpha = 0.05;
    std::uint64_t seed = 0;
    bool exact_sum = true;          // density of A_i + B_i
    bool classical = true;          // permutation-sampled A * B
    int density_points = 1024;
    int threads = 0;                // not part of the output
};

struct MomentRow {
    int order = 0;
    double sum = 0.0;               // mu_k(A+B), pooled over samples
    double sum_se = 0.0;            // sqrt((mu_2k - mu_k^2)/t)
    double free_predicted = 0.0;    // cumulant route on pooled pure moments
    std::optional<double> free_sampled;
    std::optional<double> free_sampled_se;
    /// Per-sample paired (Haar-sampled - predicted) mean and its SE.
    std::optional<ZTest> free_consistency;
    std::optional<double> classical_sampled;
    std::optional<double> classical_sampled_se;
    ZTest test;                     // difference test from detect_degree
};

struct FreenessReport {
    RunConfig config;
    DegreeResult degree;
    std::vector<MomentRow> moments;
    std::vector<WordStatistic> words;   // locus at the detected degree
    Eigen::VectorXd grid;
    Eigen::VectorXd f_sum;              // empty when the exact-sum step is off
    Eigen::VectorXd f_free;
    Eigen::VectorXd f_corrected;
    double bandwidth = 0.0;
    double delta_mu = 0.0;
    double clipped_mass = 0.0;
    std::optional<double> l1_free;       // L1(f_free, f_sum)
    std::optional<double> l1_corrected;  // L1(f_corrected, f_sum)
    std::vector<std::pair<std::string, double>> diagnostics;
    std::vector<std::string> notes;

    // Pooled sampled eigenvalues, kept for diagnostics; not serialized.
    std::vector<double> free_values;
    std::vector<double> classical_values;

    nlohmann::ordered_json to_json() const;
    /// Columns x, f_sum, f_free, f_corrected.
    std::string densities_csv() const;
};

/// Runs sampling steps on `pairs`, the tests and the density correction, and
/// assembles the report. Deterministic in (pairs, config) for any thread count.
FreenessReport build_report(std::span<const MatrixPairSample> pairs, const RunConfig& config);

}  // namespace pfree

#endif
