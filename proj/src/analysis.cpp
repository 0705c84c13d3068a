#include "pfree/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "pfree/parallel.hpp"

namespace pfree {

// ---------------------------------------------------------------------------
// Tests

double two_sided_p_value(double z) {
    if (std::isnan(z)) return 1.0;
    return std::erfc(std::abs(z) / std::numbers::sqrt2);
}

double bonferroni_critical_value(double alpha, std::size_t tests) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (tests == 0) throw std::invalid_argument("bonferroni_critical_value: no tests");
    const double tail = alpha / (2.0 * static_cast<double>(tests));
    return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<double>(), tail));
}

ZTest z_test(double estimate, double standard_error, double critical, double scale) {
    ZTest t{estimate, standard_error, 0.0, 1.0, false};
    const double size = 1.0 + std::abs(scale);
    if (standard_error <= 1e-12 * size) {
        const bool differs = std::abs(estimate) > 1e-9 * size;
        t.z = differs ? std::copysign(std::numeric_limits<double>::infinity(), estimate) : 0.0;
        t.p_value = differs ? 0.0 : 1.0;
        t.rejected = differs;
        return t;
    }
    t.z = estimate / standard_error;
    t.p_value = two_sided_p_value(t.z);
    t.rejected = std::abs(t.z) > critical;
    return t;
}

// ---------------------------------------------------------------------------
// Per-sample spectral data

namespace {

Eigen::VectorXd column_mean(const std::vector<Eigen::VectorXd>& rows, int order) {
    Eigen::VectorXd out(order + 1);
    std::vector<double> column(rows.size());
    for (int k = 0; k <= order; ++k) {
        for (std::size_t i = 0; i < rows.size(); ++i) column[i] = rows[i](k);
        out(k) = mean_and_error(column).value;
    }
    out(0) = 1.0;
    return out;
}

void check_pairs(std::span<const MatrixPairSample> pairs) {
    if (pairs.empty()) throw std::invalid_argument("no matrix samples");
    const int n = pairs.front().dimension();
    for (const auto& p : pairs)
        if (p.dimension() != n || p.b.rows() != n) throw std::invalid_argument("matrix samples differ in dimension");
}

}  // namespace

MomentSequence<double> SampleMoments::pooled(int letter, int k) const {
    if (k > order) throw std::out_of_range("SampleMoments: order beyond computed moments");
    return MomentSequence<double>(column_mean(letter == 0 ? a : b, k));
}

SampleMoments compute_sample_moments(std::span<const MatrixPairSample> pairs, int order, int threads) {
    check_pairs(pairs);
    if (order < 1) throw std::invalid_argument("compute_sample_moments: order must be >= 1");
    const std::size_t t = pairs.size();
    SampleMoments m;
    m.order = order;
    m.a.resize(t);
    m.b.resize(t);
    m.sum.resize(t);
    m.free_predicted.resize(t);
    m.sum_spectra.resize(t);
    parallel_for(t, threads, [&](std::size_t i) {
        const auto& p = pairs[i];
        m.a[i] = spectral_moments(symmetric_eigenvalues(p.a), order);
        m.b[i] = spectral_moments(symmetric_eigenvalues(p.b), order);
        Eigen::MatrixXd s = p.a + p.b;
        m.sum_spectra[i] = {symmetric_eigenvalues(0.5 * (s + s.transpose())), SpectrumSource::sum};
        m.sum[i] = spectral_moments(m.sum_spectra[i].eigenvalues, order);
        m.free_predicted[i] =
            free_convolve(MomentSequence<double>(m.a[i]), MomentSequence<double>(m.b[i]), order).values();
    });
    return m;
}

// ---------------------------------------------------------------------------
// Degree of partial freeness

namespace {

std::vector<Word> mixed_words(int lowest, int highest) {
    std::vector<Word> words;
    for (int n = lowest; n <= highest; ++n)
        for (const auto& nk : enumerate_necklaces(n, 2))
            if (nk.representative.distinct_letters() == 2) words.push_back(nk.representative);
    return words;
}

// values[i][j]: word j in sample i. Returns per-word (mean, SE, mean |x|).
std::vector<std::pair<Estimate, double>> summarize_columns(const std::vector<std::vector<double>>& values,
                                                           std::size_t columns) {
    std::vector<std::pair<Estimate, double>> out;
    std::vector<double> column(values.size());
    for (std::size_t j = 0; j < columns; ++j) {
        double magnitude = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            column[i] = values[i][j];
            magnitude += std::abs(column[i]);
        }
        out.emplace_back(mean_and_error(column), magnitude / static_cast<double>(values.size()));
    }
    return out;
}

void check_test_config(std::size_t samples, int max_order, double alpha) {
    if (max_order < 2) throw std::invalid_argument("detect_degree: K must be >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("detect_degree: alpha must lie in (0, 1)");
    if (samples < 30)
        throw std::invalid_argument("detect_degree: need at least 30 samples for standard errors, got " +
                                    std::to_string(samples));
}

}  // namespace

DegreeResult detect_degree(std::span<const MatrixPairSample> pairs, int max_order, double alpha, int threads) {
    check_test_config(pairs.size(), max_order, alpha);
    return detect_degree(pairs, compute_sample_moments(pairs, max_order, threads), max_order, alpha, threads);
}

DegreeResult detect_degree(std::span<const MatrixPairSample> pairs, const SampleMoments& moments, int max_order,
                           double alpha, int threads) {
    check_test_config(pairs.size(), max_order, alpha);
    check_pairs(pairs);
    if (moments.size() != pairs.size()) throw std::invalid_argument("detect_degree: moments do not match samples");
    if (moments.order < max_order) throw std::invalid_argument("detect_degree: K beyond the computed moments");
    const std::size_t t = pairs.size();

    DegreeResult r;
    r.max_order = max_order;
    r.alpha = alpha;
    r.samples = t;

    r.moment_critical = bonferroni_critical_value(alpha / 2.0, static_cast<std::size_t>(max_order));
    std::vector<double> diff(t);
    for (int k = 1; k <= max_order; ++k) {
        double scale = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            diff[i] = moments.sum[i](k) - moments.free_predicted[i](k);
            scale += std::abs(moments.sum[i](k));
        }
        const Estimate e = mean_and_error(diff);
        MomentTest test{k, z_test(e.value, e.standard_error, r.moment_critical, scale / static_cast<double>(t))};
        if (test.difference.rejected && !r.moment_degree) r.moment_degree = k;
        r.moments.push_back(test);
    }

    const std::vector<Word> words = mixed_words(2, max_order);
    r.word_critical = bonferroni_critical_value(alpha / 2.0, words.size());
    const Eigen::VectorXd ca = moments.pooled(0, max_order).values();
    const Eigen::VectorXd cb = moments.pooled(1, max_order).values();
    std::vector<std::vector<double>> values(t);
    parallel_for(t, threads, [&](std::size_t i) {
        WordTraces traces(pairs[i]);
        values[i] = traces.nets(words, &ca, &cb);
    });
    const auto summary = summarize_columns(values, words.size());
    for (std::size_t j = 0; j < words.size(); ++j) {
        const auto& [e, scale] = summary[j];
        WordTest test{words[j], z_test(e.value, e.standard_error, r.word_critical, scale)};
        if (test.centered.rejected && (!r.word_degree || words[j].length() < *r.word_degree))
            r.word_degree = words[j].length();
        r.words.push_back(std::move(test));
    }

    if (r.moment_degree && r.word_degree)
        r.degree = std::min(*r.moment_degree, *r.word_degree);
    else
        r.degree = r.moment_degree ? r.moment_degree : r.word_degree;
    return r;
}

// ---------------------------------------------------------------------------
// Word-level localization

std::vector<WordStatistic> localize_violations(std::span<const MatrixPairSample> pairs, int p, double alpha,
                                               int threads) {
    check_pairs(pairs);
    if (p < 1) throw std::invalid_argument("localize_violations: p must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("localize_violations: alpha must lie in (0, 1)");
    const std::size_t t = pairs.size();

    std::vector<Eigen::VectorXd> ma(t), mb(t);
    parallel_for(t, threads, [&](std::size_t i) {
        ma[i] = spectral_moments(symmetric_eigenvalues(pairs[i].a), p);
        mb[i] = spectral_moments(symmetric_eigenvalues(pairs[i].b), p);
    });
    const MomentSequence<double> mu_a(column_mean(ma, p));
    const MomentSequence<double> mu_b(column_mean(mb, p));

    const auto necklaces = enumerate_necklaces(p, 2);
    std::vector<Word> words;
    for (const auto& nk : necklaces) words.push_back(nk.representative);

    std::vector<std::vector<double>> raw(t), centered(t);
    const Eigen::VectorXd& ca = mu_a.values();
    const Eigen::VectorXd& cb = mu_b.values();
    parallel_for(t, threads, [&](std::size_t i) {
        WordTraces traces(pairs[i]);
        raw[i] = traces.nets(words);
        centered[i] = traces.nets(words, &ca, &cb);
    });
    const auto raw_summary = summarize_columns(raw, words.size());
    const auto centered_summary = summarize_columns(centered, words.size());

    const double critical = bonferroni_critical_value(alpha, words.size());
    FreeJointMoments<double> free_eval(mu_a, mu_b);
    std::vector<WordStatistic> out;
    for (std::size_t j = 0; j < words.size(); ++j) {
        WordStatistic s;
        s.word = words[j];
        s.multiplicity = necklaces[j].multiplicity;
        s.estimate = raw_summary[j].first.value;
        s.standard_error = raw_summary[j].first.standard_error;
        s.classical_prediction = classical_joint_moment(words[j], mu_a, mu_b);
        s.free_prediction = free_eval(words[j]);
        s.centered_estimate = centered_summary[j].first.value;
        s.centered_standard_error = centered_summary[j].first.standard_error;
        s.p_value_classical =
            z_test(s.estimate - s.classical_prediction, s.standard_error, critical, raw_summary[j].second).p_value;
        const ZTest c = z_test(s.centered_estimate, s.centered_standard_error, critical, centered_summary[j].second);
        s.p_value_free = c.p_value;
        s.flagged = c.rejected;
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Densities

namespace {

double sample_sd(std::span<const double> x) {
    const Estimate e = mean_and_error(x);
    double ss = 0.0;
    for (double v : x) ss += (v - e.value) * (v - e.value);
    return x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1)) : 0.0;
}

double quantile_sorted(const std::vector<double>& s, double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

// log of (2r)! / (2^{2r+1} r! sqrt(pi)), the roughness of the r-th Gaussian
// derivative without its sigma factor.
double log_gaussian_roughness(int r) {
    return std::lgamma(2.0 * r + 1.0) - (2.0 * r + 1.0) * std::log(2.0) - std::lgamma(r + 1.0) -
           0.5 * std::log(std::numbers::pi);
}

// Sum over sorted samples within 10h of each grid point.
template <typename Kernel>
Eigen::VectorXd kernel_sum(std::span<const double> samples, double h, const Eigen::VectorXd& grid, Kernel&& kernel) {
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    Eigen::VectorXd out(grid.size());
    const double reach = 10.0 * h;
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
        const double x = grid(g);
        auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - reach);
        auto hi = std::upper_bound(lo, sorted.end(), x + reach);
        double acc = 0.0;
        for (auto it = lo; it != hi; ++it) acc += kernel((x - *it) / h);
        out(g) = acc;
    }
    return out;
}

void check_density_sample(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("kde: empty sample");
    for (double v : samples)
        if (!std::isfinite(v)) throw std::invalid_argument("kde: non-finite sample");
}

}  // namespace

double select_bandwidth(std::span<const double> samples, const BandwidthPolicy& policy) {
    check_density_sample(samples);
    if (policy.kind == BandwidthPolicy::Kind::fixed) {
        if (!(policy.value > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");
        return policy.value;
    }
    const double sd = sample_sd(samples);
    if (!(sd > 0.0)) throw std::domain_error("kde: sample has zero variance; density is degenerate");
    const double n = static_cast<double>(samples.size());
    if (policy.kind == BandwidthPolicy::Kind::silverman) {
        std::vector<double> s(samples.begin(), samples.end());
        std::sort(s.begin(), s.end());
        const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
        const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
        return 0.9 * spread * std::pow(n, -0.2);
    }
    const int r = policy.derivative_order;
    if (r < 0) throw std::invalid_argument("kde: derivative order must be >= 0");
    const int s = r + 2;
    const double log_h = (std::log(2.0 * r + 1.0) + log_gaussian_roughness(r) - log_gaussian_roughness(s) +
                          (2.0 * s + 1.0) * std::log(sd) - std::log(n)) /
                         (2.0 * r + 5.0);
    return std::exp(log_h);
}

Eigen::VectorXd density_grid(double lo, double hi, double bandwidth, int points) {
    if (points < 2) throw std::invalid_argument("density_grid: need at least 2 points");
    if (!(hi >= lo) || !(bandwidth > 0.0)) throw std::invalid_argument("density_grid: invalid range");
    return Eigen::VectorXd::LinSpaced(points, lo - 10.0 * bandwidth, hi + 10.0 * bandwidth);
}

DensityEstimate kde_density(std::span<const double> samples, const BandwidthPolicy& policy, int points) {
    const double h = select_bandwidth(samples, policy);
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    return kde_density(samples, h, density_grid(*lo, *hi, h, points));
}

DensityEstimate kde_density(std::span<const double> samples, double bandwidth, const Eigen::VectorXd& grid) {
    check_density_sample(samples);
    if (!(bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");
    const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
    Eigen::VectorXd v = kernel_sum(samples, bandwidth, grid, [](double u) { return std::exp(-0.5 * u * u); });
    return {grid, v * norm, bandwidth, 0};
}

DensityEstimate kde_derivative(std::span<const double> samples, const DensityEstimate& base, int r) {
    check_density_sample(samples);
    if (r < 1) throw std::invalid_argument("kde_derivative: order must be >= 1");
    const double h = base.bandwidth;
    const double sign = r % 2 == 0 ? 1.0 : -1.0;
    const double norm = sign / (static_cast<double>(samples.size()) * std::pow(h, r + 1) *
                                std::sqrt(2.0 * std::numbers::pi));
    Eigen::VectorXd v = kernel_sum(samples, h, base.grid, [r](double u) {
        // He_r(u) by the three-term recurrence.
        double prev = 1.0, cur = u;
        for (int m = 1; m < r; ++m) {
            const double next = u * cur - m * prev;
            prev = cur;
            cur = next;
        }
        return cur * std::exp(-0.5 * u * u);
    });
    return {base.grid, v * norm, h, r};
}

CorrectedDensity edgeworth_corrected_density(std::span<const double> samples, const DensityEstimate& base, int p,
                                             double delta_mu) {
    if (p < 1) throw std::invalid_argument("edgeworth_corrected_density: p must be >= 1");
    CorrectedDensity out;
    out.density = base;
    out.unclipped = base.values;
    if (delta_mu != 0.0) {
        const DensityEstimate d = kde_derivative(samples, base, p);
        const double coef = (p % 2 == 0 ? 1.0 : -1.0) * delta_mu / std::tgamma(p + 1.0);
        out.unclipped = base.values + coef * d.values;
    }
    Eigen::VectorXd negative = (-out.unclipped.array()).max(0.0);
    out.density.values = out.unclipped.array().max(0.0);
    out.clipped_mass = integrate(base.grid, negative);
    return out;
}

double integrate(const DensityEstimate& d, int power) { return integrate(d.grid, d.values, power); }

double integrate(const Eigen::VectorXd& grid, const Eigen::VectorXd& values, int power) {
    if (grid.size() != values.size()) throw std::invalid_argument("integrate: size mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i + 1 < grid.size(); ++i) {
        const double f0 = values(i) * std::pow(grid(i), power);
        const double f1 = values(i + 1) * std::pow(grid(i + 1), power);
        total += 0.5 * (grid(i + 1) - grid(i)) * (f0 + f1);
    }
    return total;
}

Eigen::VectorXd gram_charlier_coefficients(const MomentSequence<double>& mu) {
    const int order = mu.order();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(order + 1);
    c(0) = 1.0;
    if (order == 0) return c;
    Eigen::VectorXd d = classical_cumulants_from_moments(mu).values();
    if (order >= 2) d(1) -= 1.0;
    const Eigen::VectorXd b = complete_bell_sequence(order, d);
    return b;
}

Eigen::VectorXd gram_charlier_coefficients_hermite(const MomentSequence<double>& mu) {
    const int order = mu.order();
    const Eigen::MatrixXd a = hermite_coefficients<double>(order);
    return a * mu.values();
}

// ---------------------------------------------------------------------------
// Report

namespace {

nlohmann::ordered_json number(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
}

nlohmann::ordered_json vector_json(const Eigen::VectorXd& v) {
    auto arr = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(number(v(i)));
    return arr;
}

nlohmann::ordered_json ztest_json(const ZTest& t) {
    return {{"estimate", number(t.estimate)},
            {"standard_error", number(t.standard_error)},
            {"z", number(t.z)},
            {"p_value", number(t.p_value)},
            {"rejected", t.rejected}};
}

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
    if (!v) return nullptr;
    if constexpr (std::is_same_v<T, double>)
        return number(*v);
    else
        return *v;
}

std::vector<double> flatten(const std::vector<SpectrumSample>& spectra) {
    std::vector<double> out;
    for (const auto& s : spectra) out.insert(out.end(), s.eigenvalues.data(), s.eigenvalues.data() + s.eigenvalues.size());
    return out;
}

}  // namespace

nlohmann::ordered_json FreenessReport::to_json() const {
    nlohmann::ordered_json j;
    j["config"] = {{"ensemble", config.ensemble},
                   {"N", config.dimension},
                   {"t", config.samples},
                   {"K", config.max_order},
                   {"alpha", config.alpha},
                   {"seed", config.seed},
                   {"exact_sum", config.exact_sum},
                   {"classical", config.classical},
                   {"density_points", config.density_points},
                   {"field", "real"}};
    if (degree.degree)
        j["degree"] = *degree.degree;
    else
        j["degree"] = "none";
    auto tests = nlohmann::ordered_json::array();
    for (const auto& w : degree.words)
        if (w.centered.rejected) tests.push_back({{"word", w.word.str()}, {"test", ztest_json(w.centered)}});
    j["degree_detail"] = {{"max_order", degree.max_order},
                          {"alpha", degree.alpha},
                          {"moment_degree", optional_json(degree.moment_degree)},
                          {"word_degree", optional_json(degree.word_degree)},
                          {"moment_critical", number(degree.moment_critical)},
                          {"word_critical", number(degree.word_critical)},
                          {"words_tested", degree.words.size()},
                          {"rejected_words", tests}};
    auto rows = nlohmann::ordered_json::array();
    for (const auto& m : moments) {
        rows.push_back({{"k", m.order},
                        {"sum", number(m.sum)},
                        {"sum_se", number(m.sum_se)},
                        {"free_predicted", number(m.free_predicted)},
                        {"free_sampled", optional_json(m.free_sampled)},
                        {"free_sampled_se", optional_json(m.free_sampled_se)},
                        {"free_consistency", m.free_consistency ? ztest_json(*m.free_consistency) : nullptr},
                        {"classical_sampled", optional_json(m.classical_sampled)},
                        {"classical_sampled_se", optional_json(m.classical_sampled_se)},
                        {"difference", number(m.test.estimate)},
                        {"difference_se", number(m.test.standard_error)},
                        {"p_value", number(m.test.p_value)},
                        {"rejected", m.test.rejected}});
    }
    j["moments"] = rows;
    auto ws = nlohmann::ordered_json::array();
    for (const auto& w : words) {
        ws.push_back({{"word", w.word.str()},
                      {"multiplicity", w.multiplicity},
                      {"estimate", number(w.estimate)},
                      {"standard_error", number(w.standard_error)},
                      {"classical_prediction", number(w.classical_prediction)},
                      {"free_prediction", number(w.free_prediction)},
                      {"centered_estimate", number(w.centered_estimate)},
                      {"centered_standard_error", number(w.centered_standard_error)},
                      {"p_value_classical", number(w.p_value_classical)},
                      {"p_value_free", number(w.p_value_free)},
                      {"flagged", w.flagged}});
    }
    j["words"] = ws;
    j["densities"] = {{"bandwidth", number(bandwidth)},
                      {"derivative_order", degree.degree ? *degree.degree : 0},
                      {"delta_mu", number(delta_mu)},
                      {"clipped_mass", number(clipped_mass)},
                      {"l1_free_to_sum", optional_json(l1_free)},
                      {"l1_corrected_to_sum", optional_json(l1_corrected)},
                      {"grid", vector_json(grid)},
                      {"f_sum", vector_json(f_sum)},
                      {"f_free", vector_json(f_free)},
                      {"f_corrected", vector_json(f_corrected)}};
    nlohmann::ordered_json diag = nlohmann::ordered_json::object();
    for (const auto& [k, v] : diagnostics) diag[k] = number(v);
    j["diagnostics"] = diag;
    j["notes"] = notes;
    return j;
}

std::string FreenessReport::densities_csv() const {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "x,f_sum,f_free,f_corrected\n";
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        out << grid(i) << ',';
        if (f_sum.size() == grid.size()) out << f_sum(i);
        out << ',' << f_free(i) << ',' << f_corrected(i) << '\n';
    }
    return out.str();
}

FreenessReport build_report(std::span<const MatrixPairSample> pairs, const RunConfig& config) {
    check_pairs(pairs);
    const int K = config.max_order;
    check_test_config(pairs.size(), K, config.alpha);
    const std::size_t t = pairs.size();
    const int threads = config.threads;

    FreenessReport rep;
    rep.config = config;
    rep.config.dimension = pairs.front().dimension();
    rep.config.samples = t;

    const SampleMoments sm = compute_sample_moments(pairs, K, threads);
    rep.degree = detect_degree(pairs, sm, K, config.alpha, threads);

    std::vector<SpectrumSample> free_spectra(t);
    parallel_for(t, threads, [&](std::size_t i) {
        RngStream rng(config.seed, i, StreamTag::rotation);
        free_spectra[i] = sample_free_sum_spectrum(pairs[i], rng);
    });
    std::vector<SpectrumSample> classical_spectra;
    if (config.classical) {
        classical_spectra.resize(t);
        parallel_for(t, threads, [&](std::size_t i) {
            RngStream rng(config.seed, i, StreamTag::permutation);
            classical_spectra[i] = sample_classical_sum_spectrum(pairs[i], rng);
        });
    }

    const MomentEstimate sum_est = estimate_moments(sm.sum_spectra, K);
    const MomentEstimate free_est = estimate_moments(free_spectra, K);
    const MomentSequence<double> mu_a = sm.pooled(0, K);
    const MomentSequence<double> mu_b = sm.pooled(1, K);
    const MomentSequence<double> predicted = free_convolve(mu_a, mu_b, K);
    std::optional<MomentEstimate> classical_est;
    if (config.classical) classical_est = estimate_moments(classical_spectra, K);

    const double consistency_critical = bonferroni_critical_value(config.alpha, static_cast<std::size_t>(K));
    std::vector<double> paired(t);
    for (int k = 1; k <= K; ++k) {
        MomentRow row;
        row.order = k;
        row.sum = sum_est.moments[k];
        row.sum_se = sum_est.standard_errors(k);
        row.free_predicted = predicted[k];
        row.free_sampled = free_est.moments[k];
        row.free_sampled_se = free_est.standard_errors(k);
        for (std::size_t i = 0; i < t; ++i) {
            const Eigen::VectorXd mu = spectral_moments(free_spectra[i].eigenvalues, k);
            paired[i] = mu(k) - sm.free_predicted[i](k);
        }
        const Estimate e = mean_and_error(paired);
        row.free_consistency = z_test(e.value, e.standard_error, consistency_critical, std::abs(row.free_predicted));
        if (classical_est) {
            row.classical_sampled = classical_est->moments[k];
            row.classical_sampled_se = classical_est->standard_errors(k);
        }
        row.test = rep.degree.moments[static_cast<std::size_t>(k - 1)].difference;
        rep.moments.push_back(row);
    }

    const std::optional<int> p = rep.degree.degree;
    if (p) rep.words = localize_violations(pairs, *p, config.alpha, threads);

    // Densities on one grid with one bandwidth, tuned for the p-th derivative
    // when a correction is applied.
    const std::vector<double> free_values = flatten(free_spectra);
    const std::vector<double> sum_values = flatten(sm.sum_spectra);
    const BandwidthPolicy policy = p ? BandwidthPolicy::normal_reference(*p) : BandwidthPolicy::silverman();
    rep.bandwidth = select_bandwidth(free_values, policy);
    double lo = *std::min_element(free_values.begin(), free_values.end());
    double hi = *std::max_element(free_values.begin(), free_values.end());
    if (config.exact_sum) {
        lo = std::min(lo, *std::min_element(sum_values.begin(), sum_values.end()));
        hi = std::max(hi, *std::max_element(sum_values.begin(), sum_values.end()));
    }
    rep.grid = density_grid(lo, hi, rep.bandwidth, config.density_points);
    const DensityEstimate f_free = kde_density(free_values, rep.bandwidth, rep.grid);
    rep.f_free = f_free.values;
    if (p) {
        rep.delta_mu = sum_est.moments[*p] - predicted[*p];
        const CorrectedDensity c = edgeworth_corrected_density(free_values, f_free, *p, rep.delta_mu);
        rep.f_corrected = c.density.values;
        rep.clipped_mass = c.clipped_mass;
    } else {
        rep.f_corrected = rep.f_free;
    }
    if (config.exact_sum) {
        rep.f_sum = kde_density(sum_values, rep.bandwidth, rep.grid).values;
        rep.l1_free = integrate(rep.grid, (rep.f_free - rep.f_sum).cwiseAbs());
        rep.l1_corrected = integrate(rep.grid, (rep.f_corrected - rep.f_sum).cwiseAbs());
    }

    rep.notes.push_back("degree is the first order k at which a test rejects; moments 1..k-1 agree with the free "
                        "prediction");
    rep.notes.push_back("degree tests: moment differences and centered alternating words, each family Bonferroni "
                        "corrected at alpha/2");
    rep.notes.push_back("free predictions use the cumulant route on estimated pure moments; Haar-rotated samples are "
                        "an independent consistency check");
    rep.free_values = free_values;
    if (config.classical) rep.classical_values = flatten(classical_spectra);
    if (!config.exact_sum) rep.notes.push_back("exact-sum density omitted (moments of A+B are still used by the tests)");
    if (!config.classical) rep.notes.push_back("classical (permutation) sampling omitted");
    if (!p) rep.notes.push_back("no degree detected up to K; density correction not applied");
    return rep;
}

}  // namespace pfree
