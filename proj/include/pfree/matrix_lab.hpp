#ifndef PFREE_MATRIX_LAB_HPP
#define PFREE_MATRIX_LAB_HPP

#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pfree/combinatorics.hpp"
#include "pfree/moment_algebra.hpp"

namespace pfree {

// ---------------------------------------------------------------------------
// Random streams

enum class StreamTag : std::uint64_t { pair = 1, rotation = 2, permutation = 3, auxiliary = 4 };

/// Seedable 64-bit stream. Streams are derived from (master seed, sample
/// index, purpose) by SplitMix64 mixing, so per-sample work can run in any
/// order and still reproduce bit-identical draws.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t index, StreamTag tag = StreamTag::pair);

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

// ---------------------------------------------------------------------------
// Samples

/// One realization of the pair (A, B): real symmetric, equal dimension.
struct MatrixPairSample {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;

    int dimension() const { return static_cast<int>(a.rows()); }

    /// Throws InputError unless both are square, equal-sized, finite and
    /// symmetric to 1e-12 relative to their largest entry.
    void validate() const;
};

enum class SpectrumSource { a, b, sum, free_rotated, permuted };

const char* to_string(SpectrumSource source);

struct SpectrumSample {
    Eigen::VectorXd eigenvalues;  // ascending
    SpectrumSource source = SpectrumSource::sum;
};

struct EnsembleSpec {
    enum class Variant { goe, gaussian_diagonal, tridiagonal_adjacency, pauli_block_pair, rotation_pair_2x2, from_file };

    Variant variant = Variant::goe;
    int dimension = 1;
    bool circulant = true;  // tridiagonal_adjacency only
    std::uint64_t seed = 0;
    std::string path;       // from_file only
    std::shared_ptr<const std::vector<MatrixPairSample>> records;

    /// Independent GOE matrices scaled to the semicircle on [-2, 2].
    static EnsembleSpec goe(int n, std::uint64_t seed);
    /// Independent diagonal matrices with i.i.d. standard Gaussian entries.
    static EnsembleSpec gaussian_diagonal(int n, std::uint64_t seed);
    /// A diagonal i.i.d. standard Gaussian, B the chain adjacency matrix.
    static EnsembleSpec tridiagonal_adjacency(int n, bool circulant, std::uint64_t seed);
    /// Deterministic direct sums of sigma_x, B shifted by one site (circulant).
    static EnsembleSpec pauli_block_pair(int size);
    /// U(t) sigma_z U(-t), U(-t) sigma_z U(t) with t uniform on [0, pi).
    static EnsembleSpec rotation_pair_2x2(std::uint64_t seed);
    /// Newline-delimited JSON records {"A": [[...]], "B": [[...]]}.
    static EnsembleSpec from_file(const std::string& path);

    void validate() const;
    std::string name() const;
};

/// Deterministic in (spec.seed, index).
MatrixPairSample sample_pair(const EnsembleSpec& spec, std::uint64_t index);

std::vector<MatrixPairSample> sample_pairs(const EnsembleSpec& spec, std::size_t count, int threads = 0);

/// Parses JSONL matrix pairs; errors carry the 1-based line number.
std::vector<MatrixPairSample> parse_pairs_jsonl(std::istream& in, const std::string& source_name = "<input>");
std::vector<MatrixPairSample> load_pairs_jsonl(const std::string& path);

// ---------------------------------------------------------------------------
// Linear algebra

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// columns of Q flipped so that R has a positive diagonal.
Eigen::MatrixXd haar_orthogonal(int n, RngStream& rng);

/// Uniform random permutation (Fisher-Yates).
Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> random_permutation(int n, RngStream& rng);

/// Ascending eigenvalues of a symmetric matrix. Throws std::invalid_argument
/// if the input is not symmetric to 1e-10 relative to its largest entry.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m);

/// (1/N) sum_i lambda_i^k for k = 0..order.
Eigen::VectorXd spectral_moments(const Eigen::VectorXd& eigenvalues, int order);

/// Eigenvalues of A + Q B Q^T for a fresh Haar Q.
SpectrumSample sample_free_sum_spectrum(const MatrixPairSample& pair, RngStream& rng);

/// Eigenvalues of Lambda_A + Pi Lambda_B Pi^T: each eigenvalue of A paired with
/// a uniformly permuted eigenvalue of B.
SpectrumSample sample_classical_sum_spectrum(const MatrixPairSample& pair, RngStream& rng);

// ---------------------------------------------------------------------------
// Estimation

struct Estimate {
    double value = 0.0;
    double standard_error = 0.0;
};

/// Mean and standard error sqrt((mean(x^2) - mean(x)^2) / t) of per-sample
/// values, accumulated with compensated summation in index order.
Estimate mean_and_error(std::span<const double> values);

/// Normalized trace of a word in (A, B), averaged over samples.
Estimate estimate_word_net(std::span<const MatrixPairSample> samples, const Word& w);

struct MomentEstimate {
    MomentSequence<double> moments;      // mu_0..mu_K
    Eigen::VectorXd standard_errors;     // sqrt((mu_2k - mu_k^2) / t), index k
    std::size_t samples = 0;
};

/// Pooled spectral moments through K with standard errors that use the
/// moments through 2K.
MomentEstimate estimate_moments(std::span<const SpectrumSample> spectra, int order);

/// Normalized traces of words in one pair (A, B). Powers of each letter are
/// cached and stored as diagonal, sparse or dense operands, whichever the
/// structure allows, so words over diagonal or banded inputs stay cheap.
class WordTraces {
public:
    explicit WordTraces(const MatrixPairSample& pair);

    /// (1/N) tr w(A, B).
    double net(const Word& w);

    /// (1/N) tr prod_j (X_j^{e_j} - c(X_j, e_j) I) over the blocks of w, where
    /// c(A, e) = centers_a(e) and c(B, e) = centers_b(e).
    double centered_net(const Word& w, const Eigen::VectorXd& centers_a, const Eigen::VectorXd& centers_b);

    /// Raw (centers == nullptr) or centered traces of many words, sharing
    /// products across common block prefixes.
    std::vector<double> nets(const std::vector<Word>& words, const Eigen::VectorXd* centers_a = nullptr,
                             const Eigen::VectorXd* centers_b = nullptr);

private:
    struct Operand {
        enum class Kind { diagonal, sparse, dense } kind = Kind::dense;
        Eigen::VectorXd diagonal;
        Eigen::SparseMatrix<double> sparse;
        Eigen::MatrixXd dense;
    };

    const Eigen::MatrixXd& power(int letter, int exponent);
    const Operand& operand(const Block& block, double center, bool centered);
    static Operand classify(const Eigen::MatrixXd& m);
    static void multiply_into(Eigen::MatrixXd& running, const Operand& op);
    static double trace_product(const Eigen::MatrixXd& running, const Operand& op);

    const MatrixPairSample& pair_;
    std::map<std::pair<int, int>, Eigen::MatrixXd> powers_;
    std::map<std::pair<int, int>, Operand> raw_;
    std::map<std::pair<int, int>, std::pair<double, Operand>> centered_;
};

}  // namespace pfree

#endif
