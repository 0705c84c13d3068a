// pfree: command-line front end for the partial-freeness library.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pfree/analysis.hpp"
#include "pfree/combinatorics.hpp"
#include "pfree/errors.hpp"
#include "pfree/matrix_lab.hpp"
#include "pfree/moment_algebra.hpp"
#include "pfree/pathsum.hpp"
#include "pfree/scalar.hpp"

namespace {

using namespace pfree;

constexpr int exit_config = 2;
constexpr int exit_input = 3;
constexpr int exit_resource = 4;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::optional<int> n;
    std::optional<std::size_t> t;
    std::optional<int> k;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string format;
    std::string output;
    bool no_exact_sum = false;
    bool no_classical = false;
    int points = 1024;
};

void add_run_options(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--n", o.n, "Matrix dimension N (pauli: half the matrix size)")->check(CLI::PositiveNumber);
    cmd->add_option("--t", o.t, "Number of sample pairs t")->check(CLI::PositiveNumber);
    cmd->add_option("--k", o.k, "Highest moment order K tested")->check(CLI::Range(2, 24));
    cmd->add_option("--alpha", o.alpha, "Family-wise test level")->check(CLI::Range(1e-12, 1.0 - 1e-12));
    cmd->add_option("--seed", o.seed, "Master seed (unsigned 64-bit)");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--format", o.format, "Output format: json report or csv densities")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--output", o.output, "Output file (default: stdout)");
    cmd->add_flag("--no-exact-sum", o.no_exact_sum, "Skip the density of A_i + B_i");
    cmd->add_flag("--no-classical", o.no_classical, "Skip permutation (classical) sampling");
    cmd->add_option("--points", o.points, "Density grid points")->check(CLI::Range(16, 1 << 20));
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << text;
    if (!out) throw InputError("write failed for " + path);
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> cells;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t");
        cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return cells;
}

template <typename Scalar>
MomentSequence<Scalar> parse_moments(const std::string& text, const std::string& flag) {
    const auto cells = split_csv(text);
    if (cells.empty()) throw ConfigError(flag + ": empty moment list");
    Vector<Scalar> v(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        try {
            const Rational r = parse_rational(cells[i]);
            if constexpr (std::is_same_v<Scalar, Rational>)
                v(static_cast<Eigen::Index>(i)) = r;
            else
                v(static_cast<Eigen::Index>(i)) = std::stod(cells[i]);
        } catch (const std::exception&) {
            throw ConfigError(flag + ": cannot parse \"" + cells[i] + "\" as a number");
        }
    }
    if (v(0) != Scalar(1)) throw ConfigError(flag + ": the list starts at order 0 and must begin with 1");
    return MomentSequence<Scalar>(v);
}

template <typename Scalar>
std::string join(const Vector<Scalar>& v) {
    std::ostringstream out;
    out.precision(17);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out << ',';
        if constexpr (std::is_same_v<Scalar, Rational>)
            out << to_string(v(i));
        else
            out << v(i);
    }
    return out.str();
}

// ---------------------------------------------------------------------------

int run_necklaces(int n, int k, const std::string& format, bool bracelets, const std::string& output) {
    if (n < 1 || k < 1) throw ConfigError("necklaces: n and k must be positive");
    auto list = enumerate_necklaces(n, k);
    if (bracelets) list = fold_bracelets(list);
    if (format == "json") {
        nlohmann::ordered_json j = {{"n", n}, {"k", k}, {"count", list.size()}};
        auto arr = nlohmann::ordered_json::array();
        for (const auto& nk : list)
            arr.push_back({{"representative", nk.representative.str()}, {"multiplicity", nk.multiplicity}});
        j["necklaces"] = arr;
        emit(j.dump(2) + "\n", output);
    } else {
        std::ostringstream out;
        for (const auto& nk : list) out << nk.representative.str() << ' ' << nk.multiplicity << '\n';
        emit(out.str(), output);
    }
    return 0;
}

template <typename Scalar>
std::string convolve_text(bool free_mode, const std::string& a, const std::string& b, int order) {
    const auto ma = parse_moments<Scalar>(a, "--moments-a");
    const auto mb = parse_moments<Scalar>(b, "--moments-b");
    if (order > ma.order() || order > mb.order())
        throw ConfigError("convolve: --order " + std::to_string(order) + " needs moments through that order");
    const auto result = free_mode ? free_convolve(ma, mb, order) : classical_convolve(ma, mb, order);
    return join(result.values()) + "\n";
}

int run_pathsum(const std::string& word_text, int chain, bool circulant, const std::string& moments, int max_hops,
                const std::string& format, const std::string& output) {
    const Word w = Word::parse(word_text, 2);
    const auto m = parse_moments<Rational>(moments, "--moments");
    PathsumOptions opts;
    opts.max_hops = max_hops;
    Rational value;
    if (circulant) {
        if (chain < 3) throw ConfigError("pathsum: a circulant chain needs at least 3 sites");
        value = exact_word_net(w, LatticeModel<Rational>::circulant_chain(chain, m), opts);
    } else {
        value = boundary_corrected_word_net(w, LatticeModel<Rational>::open_chain(chain, m), opts);
    }
    if (format == "json") {
        nlohmann::ordered_json j = {{"word", w.str()},
                                    {"chain", chain},
                                    {"circulant", circulant},
                                    {"value", to_string(value)},
                                    {"decimal", to_double(value)}};
        emit(j.dump(2) + "\n", output);
    } else {
        emit(to_string(value) + "\n", output);
    }
    return 0;
}

RunConfig make_config(const CommonOptions& o, const std::string& ensemble, std::size_t t, int k) {
    RunConfig c;
    c.ensemble = ensemble;
    c.samples = t;
    c.max_order = k;
    c.alpha = o.alpha;
    c.seed = o.seed;
    c.exact_sum = !o.no_exact_sum;
    c.classical = !o.no_classical;
    c.density_points = o.points;
    c.threads = o.threads;
    return c;
}

void write_report(const FreenessReport& rep, const CommonOptions& o) {
    if (o.format == "csv")
        emit(rep.densities_csv(), o.output);
    else
        emit(rep.to_json().dump(2) + "\n", o.output);
}

int run_analyze(const std::string& input, const CommonOptions& o) {
    const auto pairs = load_pairs_jsonl(input);
    std::size_t t = pairs.size();
    if (o.t) {
        if (*o.t > pairs.size())
            throw ConfigError("analyze: --t " + std::to_string(*o.t) + " exceeds the " +
                              std::to_string(pairs.size()) + " records in " + input);
        t = *o.t;
    }
    if (o.n && *o.n != pairs.front().dimension())
        throw ConfigError("analyze: --n does not match the dimension of the records");
    const std::span<const MatrixPairSample> used(pairs.data(), t);
    const auto rep = build_report(used, make_config(o, "from-file(" + input + ")", t, o.k.value_or(8)));
    write_report(rep, o);
    return 0;
}

int run_demo(const std::string& name, const CommonOptions& o) {
    EnsembleSpec spec;
    std::size_t t = 0;
    int k = 8;
    if (name == "arcsine") {
        spec = EnsembleSpec::rotation_pair_2x2(o.seed);
        t = o.t.value_or(100000);
        k = o.k.value_or(6);
    } else if (name == "pauli") {
        const int half = o.n.value_or(3);
        spec = EnsembleSpec::pauli_block_pair(2 * half);
        t = o.t.value_or(30);
        k = o.k.value_or(2 * half);
    } else if (name == "example19") {
        spec = EnsembleSpec::tridiagonal_adjacency(o.n.value_or(200), true, o.seed);
        t = o.t.value_or(500);
        k = o.k.value_or(8);
    } else if (name == "diagonal") {
        spec = EnsembleSpec::gaussian_diagonal(o.n.value_or(200), o.seed);
        t = o.t.value_or(500);
        k = o.k.value_or(6);
    } else if (name == "goe") {
        spec = EnsembleSpec::goe(o.n.value_or(100), o.seed);
        t = o.t.value_or(200);
        k = o.k.value_or(8);
    } else {
        throw ConfigError("demo: unknown name " + name);
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const auto pairs = sample_pairs(spec, t, o.threads);
    auto rep = build_report(pairs, make_config(o, spec.name(), t, k));

    if (name == "arcsine") {
        rep.diagnostics.emplace_back("ks_free_arcsine", ks_distance(rep.free_values, arcsine_cdf));
        if (!rep.classical_values.empty()) {
            double w[3] = {0, 0, 0};
            for (double x : rep.classical_values)
                for (int j = 0; j < 3; ++j)
                    if (std::abs(x - (2.0 * j - 2.0)) < 1e-9) w[j] += 1.0;
            const double total = static_cast<double>(rep.classical_values.size());
            rep.diagnostics.emplace_back("classical_weight_-2", w[0] / total);
            rep.diagnostics.emplace_back("classical_weight_0", w[1] / total);
            rep.diagnostics.emplace_back("classical_weight_2", w[2] / total);
        }
    } else if (name == "example19") {
        const MomentSequence<Rational> gaussian{Rational(1), Rational(0), Rational(1), Rational(0), Rational(3),
                                                Rational(0), Rational(15), Rational(0), Rational(105)};
        const int n = spec.dimension;
        const Word ab4 = Word::parse("(AB)^4");
        rep.diagnostics.emplace_back(
            "exact_AB4_circulant", to_double(exact_word_net(ab4, LatticeModel<Rational>::circulant_chain(n, gaussian))));
        rep.diagnostics.emplace_back(
            "exact_AB4_open", to_double(boundary_corrected_word_net(ab4, LatticeModel<Rational>::open_chain(n, gaussian))));
        rep.diagnostics.emplace_back("exact_mu8_sum", to_double(exact_sum_moment(8, LatticeModel<Rational>::circulant_chain(n, gaussian))));
        rep.notes.push_back("exact closed-walk sum gives <(AB)^4> = 2 on the ring for standard Gaussian entries");
    }
    write_report(rep, o);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pfree: partial freeness of random matrix pairs"};
    app.require_subcommand(1);

    // necklaces
    auto* neck = app.add_subcommand("necklaces", "List (n,k)-necklaces with multiplicities");
    int neck_n = 0, neck_k = 0;
    std::string neck_format = "text", neck_output;
    bool bracelets = false;
    neck->add_option("n", neck_n, "Word length")->required()->check(CLI::PositiveNumber);
    neck->add_option("k", neck_k, "Alphabet size")->required()->check(CLI::PositiveNumber);
    neck->add_option("--format", neck_format, "text or json")->check(CLI::IsMember({"text", "json"}));
    neck->add_option("--output", neck_output, "Output file (default: stdout)");
    neck->add_flag("--bracelets", bracelets, "Fold mirror images (valid for real symmetric letters)");

    // convolve
    auto* conv = app.add_subcommand("convolve", "Free or classical convolution of moment sequences");
    bool conv_free = false, conv_classical = false, conv_exact = false;
    std::string conv_a, conv_b, conv_output;
    int conv_order = 0;
    auto* free_flag = conv->add_flag("--free", conv_free, "Additive free convolution");
    auto* classical_flag = conv->add_flag("--classical", conv_classical, "Classical convolution");
    free_flag->excludes(classical_flag);
    conv->add_flag("--exact", conv_exact, "Exact rational arithmetic");
    conv->add_option("--moments-a", conv_a, "mu_0,mu_1,... of A (mu_0 = 1)")->required();
    conv->add_option("--moments-b", conv_b, "mu_0,mu_1,... of B (mu_0 = 1)")->required();
    conv->add_option("--order", conv_order, "Truncation order K")->required()->check(CLI::PositiveNumber);
    conv->add_option("--output", conv_output, "Output file (default: stdout)");

    // pathsum
    auto* path = app.add_subcommand("pathsum", "Exact word trace for diagonal i.i.d. A and chain adjacency B");
    std::string path_word, path_moments, path_format = "text", path_output;
    int path_chain = 0, path_hops = 40;
    bool path_circulant = false;
    path->add_option("--word", path_word, "Word such as ABAB, A2B or (AB)^4")->required();
    path->add_option("--chain", path_chain, "Number of sites N")->required()->check(CLI::PositiveNumber);
    path->add_flag("--circulant", path_circulant, "Close the chain into a ring");
    path->add_option("--moments", path_moments, "m_0,m_1,... of the diagonal entries (m_0 = 1)")->required();
    path->add_option("--max-hops", path_hops, "Largest number of B letters allowed")->check(CLI::PositiveNumber);
    path->add_option("--format", path_format, "text or json")->check(CLI::IsMember({"text", "json"}));
    path->add_option("--output", path_output, "Output file (default: stdout)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Partial-freeness report for matrix pairs read from JSONL");
    std::string input;
    CommonOptions analyze_opts;
    analyze->add_option("--input", input, "JSONL file of {\"A\": [[...]], \"B\": [[...]]} records")->required();
    add_run_options(analyze, analyze_opts);

    // demo
    auto* demo = app.add_subcommand("demo", "Partial-freeness report for a built-in ensemble");
    std::string demo_name;
    CommonOptions demo_opts;
    demo->add_option("name", demo_name, "arcsine | pauli | example19 | diagonal | goe")
        ->required()
        ->check(CLI::IsMember({"arcsine", "pauli", "example19", "diagonal", "goe"}));
    add_run_options(demo, demo_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*neck) return run_necklaces(neck_n, neck_k, neck_format, bracelets, neck_output);
        if (*conv) {
            if (!conv_free && !conv_classical) throw ConfigError("convolve: choose --free or --classical");
            const std::string text = conv_exact ? convolve_text<Rational>(conv_free, conv_a, conv_b, conv_order)
                                                : convolve_text<double>(conv_free, conv_a, conv_b, conv_order);
            emit(text, conv_output);
            return 0;
        }
        if (*path) return run_pathsum(path_word, path_chain, path_circulant, path_moments, path_hops, path_format,
                                      path_output);
        if (*analyze) return run_analyze(input, analyze_opts);
        if (*demo) return run_demo(demo_name, demo_opts);
    } catch (const ConfigError& e) {
        std::cerr << "pfree: configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const InputError& e) {
        std::cerr << "pfree: input error: " << e.what() << '\n';
        return exit_input;
    } catch (const ResourceLimitError& e) {
        std::cerr << "pfree: resource limit: " << e.what() << '\n';
        return exit_resource;
    } catch (const std::invalid_argument& e) {
        std::cerr << "pfree: configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "pfree: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
