#include "pfree/matrix_lab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <json.hpp>

#include "pfree/errors.hpp"
#include "pfree/parallel.hpp"

namespace pfree {

// ---------------------------------------------------------------------------
// Random streams

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t index, StreamTag tag) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ splitmix64(index + 0x632be59bd9b4e019ULL));
    s = splitmix64(s ^ static_cast<std::uint64_t>(tag));
    engine_.seed(s);
}

std::uint64_t RngStream::below(std::uint64_t n) {
    // Rejection sampling keeps the draw exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

// ---------------------------------------------------------------------------
// Samples

void MatrixPairSample::validate() const {
    if (a.rows() == 0 || a.rows() != a.cols() || b.rows() != b.cols())
        throw InputError("matrix pair: A and B must be square and nonempty");
    if (a.rows() != b.rows()) throw InputError("matrix pair: A and B must have equal dimension");
    if (!a.allFinite() || !b.allFinite()) throw InputError("matrix pair: non-finite entry");
    for (const auto* m : {&a, &b}) {
        const double scale = std::max(1.0, m->cwiseAbs().maxCoeff());
        if ((*m - m->transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw InputError("matrix pair: matrix is not symmetric");
    }
}

const char* to_string(SpectrumSource source) {
    switch (source) {
        case SpectrumSource::a: return "A";
        case SpectrumSource::b: return "B";
        case SpectrumSource::sum: return "A+B";
        case SpectrumSource::free_rotated: return "free-rotated";
        case SpectrumSource::permuted: return "permuted";
    }
    return "?";
}

EnsembleSpec EnsembleSpec::goe(int n, std::uint64_t seed) {
    return {Variant::goe, n, true, seed, {}, nullptr};
}

EnsembleSpec EnsembleSpec::gaussian_diagonal(int n, std::uint64_t seed) {
    return {Variant::gaussian_diagonal, n, true, seed, {}, nullptr};
}

EnsembleSpec EnsembleSpec::tridiagonal_adjacency(int n, bool circulant, std::uint64_t seed) {
    return {Variant::tridiagonal_adjacency, n, circulant, seed, {}, nullptr};
}

EnsembleSpec EnsembleSpec::pauli_block_pair(int size) {
    return {Variant::pauli_block_pair, size, true, 0, {}, nullptr};
}

EnsembleSpec EnsembleSpec::rotation_pair_2x2(std::uint64_t seed) {
    return {Variant::rotation_pair_2x2, 2, true, seed, {}, nullptr};
}

EnsembleSpec EnsembleSpec::from_file(const std::string& path) {
    auto records = std::make_shared<const std::vector<MatrixPairSample>>(load_pairs_jsonl(path));
    const int n = records->front().dimension();
    return {Variant::from_file, n, true, 0, path, std::move(records)};
}

void EnsembleSpec::validate() const {
    if (dimension < 1) throw std::invalid_argument("ensemble: dimension must be positive");
    switch (variant) {
        case Variant::pauli_block_pair:
            if (dimension % 2 != 0 || dimension < 4)
                throw std::invalid_argument("ensemble: pauli-block-pair needs an even dimension >= 4");
            break;
        case Variant::rotation_pair_2x2:
            if (dimension != 2) throw std::invalid_argument("ensemble: rotation-pair-2x2 has dimension 2");
            break;
        case Variant::tridiagonal_adjacency:
            if (circulant && dimension < 3)
                throw std::invalid_argument("ensemble: circulant chain needs dimension >= 3");
            break;
        case Variant::from_file:
            if (!records || records->empty()) throw std::invalid_argument("ensemble: no records loaded");
            break;
        default:
            break;
    }
}

std::string EnsembleSpec::name() const {
    const std::string n = std::to_string(dimension);
    switch (variant) {
        case Variant::goe: return "goe(" + n + ")";
        case Variant::gaussian_diagonal: return "gaussian-diagonal(" + n + ")";
        case Variant::tridiagonal_adjacency:
            return "tridiagonal-adjacency(" + n + (circulant ? ", circulant)" : ", open)");
        case Variant::pauli_block_pair: return "pauli-block-pair(" + n + ")";
        case Variant::rotation_pair_2x2: return "rotation-pair-2x2";
        case Variant::from_file: return "from-file(" + path + ")";
    }
    return "?";
}

namespace {

Eigen::MatrixXd chain_adjacency(int n, bool circulant) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) b(i, i + 1) = b(i + 1, i) = 1.0;
    if (circulant) b(0, n - 1) = b(n - 1, 0) = 1.0;
    return b;
}

Eigen::MatrixXd gaussian_diagonal_matrix(int n, RngStream& rng) {
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = rng.normal();
    return d.asDiagonal();
}

Eigen::MatrixXd goe_matrix(int n, RngStream& rng) {
    Eigen::MatrixXd x(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) x(i, j) = rng.normal();
    return (x + x.transpose()) / std::sqrt(2.0 * n);
}

Eigen::Matrix2d rotation(double t) {
    Eigen::Matrix2d u;
    u << std::cos(t), std::sin(t), -std::sin(t), std::cos(t);
    return u;
}

}  // namespace

MatrixPairSample sample_pair(const EnsembleSpec& spec, std::uint64_t index) {
    spec.validate();
    const int n = spec.dimension;
    RngStream rng(spec.seed, index, StreamTag::pair);
    MatrixPairSample s;
    switch (spec.variant) {
        case EnsembleSpec::Variant::goe:
            s.a = goe_matrix(n, rng);
            s.b = goe_matrix(n, rng);
            break;
        case EnsembleSpec::Variant::gaussian_diagonal:
            s.a = gaussian_diagonal_matrix(n, rng);
            s.b = gaussian_diagonal_matrix(n, rng);
            break;
        case EnsembleSpec::Variant::tridiagonal_adjacency:
            s.a = gaussian_diagonal_matrix(n, rng);
            s.b = chain_adjacency(n, spec.circulant);
            break;
        case EnsembleSpec::Variant::pauli_block_pair: {
            s.a = Eigen::MatrixXd::Zero(n, n);
            s.b = Eigen::MatrixXd::Zero(n, n);
            for (int j = 0; j < n / 2; ++j) {
                s.a(2 * j, 2 * j + 1) = s.a(2 * j + 1, 2 * j) = 1.0;
                const int p = 2 * j + 1;
                const int q = (2 * j + 2) % n;
                s.b(p, q) = s.b(q, p) = 1.0;
            }
            break;
        }
        case EnsembleSpec::Variant::rotation_pair_2x2: {
            const double t = std::numbers::pi * rng.uniform();
            const Eigen::Matrix2d sz = Eigen::Vector2d(1.0, -1.0).asDiagonal();
            s.a = rotation(t) * sz * rotation(-t);
            s.b = rotation(-t) * sz * rotation(t);
            break;
        }
        case EnsembleSpec::Variant::from_file:
            if (index >= spec.records->size())
                throw std::out_of_range("sample_pair: file holds only " + std::to_string(spec.records->size()) +
                                        " records");
            return (*spec.records)[index];
    }
    return s;
}

std::vector<MatrixPairSample> sample_pairs(const EnsembleSpec& spec, std::size_t count, int threads) {
    std::vector<MatrixPairSample> out(count);
    parallel_for(count, threads, [&](std::size_t i) { out[i] = sample_pair(spec, i); });
    return out;
}

std::vector<MatrixPairSample> parse_pairs_jsonl(std::istream& in, const std::string& source_name) {
    std::vector<MatrixPairSample> out;
    std::string line;
    int line_no = 0;
    int dimension = -1;
    auto fail = [&](const std::string& what) -> InputError {
        return InputError(source_name + ":" + std::to_string(line_no) + ": " + what);
    };
    auto read_matrix = [&](const nlohmann::json& rec, const char* key) {
        if (!rec.contains(key) || !rec[key].is_array()) throw fail(std::string("missing matrix \"") + key + "\"");
        const auto& rows = rec[key];
        const auto n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& row = rows[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
                throw fail(std::string("matrix \"") + key + "\" is not square");
            for (Eigen::Index j = 0; j < n; ++j) {
                const auto& v = row[static_cast<std::size_t>(j)];
                if (!v.is_number()) throw fail(std::string("non-numeric entry in \"") + key + "\"");
                m(i, j) = v.get<double>();
            }
        }
        return m;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw fail(std::string("invalid JSON: ") + e.what());
        }
        if (!rec.is_object()) throw fail("record must be a JSON object");
        MatrixPairSample s{read_matrix(rec, "A"), read_matrix(rec, "B")};
        try {
            s.validate();
        } catch (const InputError& e) {
            throw fail(e.what());
        }
        if (dimension >= 0 && s.dimension() != dimension)
            throw fail("dimension " + std::to_string(s.dimension()) + " differs from earlier records (" +
                       std::to_string(dimension) + ")");
        dimension = s.dimension();
        out.push_back(std::move(s));
    }
    if (out.empty()) throw InputError(source_name + ": no matrix records");
    return out;
}

std::vector<MatrixPairSample> load_pairs_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return parse_pairs_jsonl(in, path);
}

// ---------------------------------------------------------------------------
// Linear algebra

Eigen::MatrixXd haar_orthogonal(int n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("haar_orthogonal: n must be positive");
    Eigen::MatrixXd z(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) z(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const auto& r = qr.matrixQR();
    for (int j = 0; j < n; ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return q;
}

Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> random_permutation(int n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("random_permutation: n must be positive");
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> p(n);
    p.setIdentity();
    auto& idx = p.indices();
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(idx(i), idx(j));
    }
    return p;
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("symmetric_eigenvalues: matrix is not square");
    if (m.size() == 0) return Eigen::VectorXd();
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("symmetric_eigenvalues: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("symmetric_eigenvalues: solver did not converge");
    return solver.eigenvalues();
}

Eigen::VectorXd spectral_moments(const Eigen::VectorXd& eigenvalues, int order) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(order + 1);
    const auto n = eigenvalues.size();
    Eigen::ArrayXd p = Eigen::ArrayXd::Ones(n);
    for (int k = 0; k <= order; ++k) {
        mu(k) = p.sum() / static_cast<double>(n);
        p *= eigenvalues.array();
    }
    return mu;
}

SpectrumSample sample_free_sum_spectrum(const MatrixPairSample& pair, RngStream& rng) {
    const Eigen::MatrixXd q = haar_orthogonal(pair.dimension(), rng);
    Eigen::MatrixXd m = pair.a + q * pair.b * q.transpose();
    m = 0.5 * (m + m.transpose());
    return {symmetric_eigenvalues(m), SpectrumSource::free_rotated};
}

SpectrumSample sample_classical_sum_spectrum(const MatrixPairSample& pair, RngStream& rng) {
    const Eigen::VectorXd la = symmetric_eigenvalues(pair.a);
    const Eigen::VectorXd lb = symmetric_eigenvalues(pair.b);
    const auto perm = random_permutation(pair.dimension(), rng);
    Eigen::VectorXd sum = la + perm * lb;
    std::sort(sum.data(), sum.data() + sum.size());
    return {sum, SpectrumSource::permuted};
}

// ---------------------------------------------------------------------------
// Estimation

namespace {

// Neumaier compensated summation.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            carry += (sum - t) + x;
        else
            carry += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

}  // namespace

Estimate mean_and_error(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean_and_error: no samples");
    CompensatedSum s;
    for (double v : values) s.add(v);
    const double t = static_cast<double>(values.size());
    const double mean = s.value() / t;
    // Centered second moment equals mean(x^2) - mean^2 without cancellation.
    CompensatedSum sq;
    for (double v : values) sq.add((v - mean) * (v - mean));
    const double var = std::max(0.0, sq.value() / t);
    return {mean, std::sqrt(var / t)};
}

Estimate estimate_word_net(std::span<const MatrixPairSample> samples, const Word& w) {
    if (samples.empty()) throw std::invalid_argument("estimate_word_net: no samples");
    if (w.alphabet_size() != 2) throw std::invalid_argument("estimate_word_net: word must use letters {A, B}");
    const int n = samples.front().dimension();
    std::vector<double> values(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].dimension() != n) throw std::invalid_argument("estimate_word_net: dimension mismatch");
        WordTraces traces(samples[i]);
        values[i] = traces.net(w);
    }
    return mean_and_error(values);
}

MomentEstimate estimate_moments(std::span<const SpectrumSample> spectra, int order) {
    if (order < 1) throw std::invalid_argument("estimate_moments: order must be >= 1");
    if (spectra.empty()) throw std::invalid_argument("estimate_moments: no spectra");
    const int top = 2 * order;
    std::vector<CompensatedSum> sums(static_cast<std::size_t>(top) + 1);
    for (const auto& s : spectra) {
        const Eigen::VectorXd mu = spectral_moments(s.eigenvalues, top);
        for (int k = 0; k <= top; ++k) sums[k].add(mu(k));
    }
    const double t = static_cast<double>(spectra.size());
    Eigen::VectorXd mu(top + 1);
    for (int k = 0; k <= top; ++k) mu(k) = sums[k].value() / t;
    mu(0) = 1.0;
    Eigen::VectorXd se = Eigen::VectorXd::Zero(order + 1);
    for (int k = 1; k <= order; ++k) se(k) = std::sqrt(std::max(0.0, mu(2 * k) - mu(k) * mu(k)) / t);
    return {MomentSequence<double>(Eigen::VectorXd(mu.head(order + 1))), se, spectra.size()};
}

// ---------------------------------------------------------------------------
// WordTraces

WordTraces::WordTraces(const MatrixPairSample& pair) : pair_(pair) {}

const Eigen::MatrixXd& WordTraces::power(int letter, int exponent) {
    const auto key = std::make_pair(letter, exponent);
    if (auto it = powers_.find(key); it != powers_.end()) return it->second;
    const Eigen::MatrixXd& base = letter == 0 ? pair_.a : pair_.b;
    Eigen::MatrixXd m;
    if (exponent == 1) {
        m = base;
    } else {
        const Operand op = classify(base);
        m = power(letter, exponent - 1);
        multiply_into(m, op);
    }
    return powers_.emplace(key, std::move(m)).first->second;
}

WordTraces::Operand WordTraces::classify(const Eigen::MatrixXd& m) {
    Operand op;
    const auto n = m.rows();
    const Eigen::Index nnz = (m.array() != 0.0).count();
    const Eigen::Index diag_nnz = (m.diagonal().array() != 0.0).count();
    if (nnz == diag_nnz) {
        op.kind = Operand::Kind::diagonal;
        op.diagonal = m.diagonal();
    } else if (nnz * 8 < n * n) {
        op.kind = Operand::Kind::sparse;
        op.sparse = m.sparseView();
        op.sparse.makeCompressed();
    } else {
        op.kind = Operand::Kind::dense;
        op.dense = m;
    }
    return op;
}

const WordTraces::Operand& WordTraces::operand(const Block& block, double center, bool centered) {
    const auto key = std::make_pair(block.letter, block.exponent);
    if (!centered) {
        if (auto it = raw_.find(key); it != raw_.end()) return it->second;
        return raw_.emplace(key, classify(power(block.letter, block.exponent))).first->second;
    }
    if (auto it = centered_.find(key); it != centered_.end() && it->second.first == center) return it->second.second;
    Eigen::MatrixXd m = power(block.letter, block.exponent);
    m.diagonal().array() -= center;
    auto& slot = centered_[key];
    slot = {center, classify(m)};
    return slot.second;
}

void WordTraces::multiply_into(Eigen::MatrixXd& running, const Operand& op) {
    switch (op.kind) {
        case Operand::Kind::diagonal:
            running = running * op.diagonal.asDiagonal();
            break;
        case Operand::Kind::sparse:
            running = running * op.sparse;
            break;
        case Operand::Kind::dense:
            running = running * op.dense;
            break;
    }
}

double WordTraces::trace_product(const Eigen::MatrixXd& running, const Operand& op) {
    switch (op.kind) {
        case Operand::Kind::diagonal:
            return running.diagonal().dot(op.diagonal);
        case Operand::Kind::sparse: {
            double t = 0.0;
            for (int k = 0; k < op.sparse.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator it(op.sparse, k); it; ++it)
                    t += running(it.col(), it.row()) * it.value();
            return t;
        }
        case Operand::Kind::dense:
            return (running.array() * op.dense.transpose().array()).sum();
    }
    return 0.0;
}

double WordTraces::net(const Word& w) { return nets({w}).front(); }

double WordTraces::centered_net(const Word& w, const Eigen::VectorXd& centers_a, const Eigen::VectorXd& centers_b) {
    return nets({w}, &centers_a, &centers_b).front();
}

std::vector<double> WordTraces::nets(const std::vector<Word>& words, const Eigen::VectorXd* centers_a,
                                     const Eigen::VectorXd* centers_b) {
    const bool centered = centers_a != nullptr;
    if (centered != (centers_b != nullptr)) throw std::invalid_argument("WordTraces: need both centering vectors");
    const double n = static_cast<double>(pair_.dimension());

    auto center_of = [&](const Block& b) {
        if (!centered) return 0.0;
        const Eigen::VectorXd& c = b.letter == 0 ? *centers_a : *centers_b;
        if (b.exponent >= c.size()) throw std::out_of_range("WordTraces: missing centering constant");
        return c(b.exponent);
    };

    // stack[i] holds the product of blocks 0..i of the previous word.
    std::vector<Block> prefix;
    std::vector<Eigen::MatrixXd> stack;
    std::vector<double> out;
    out.reserve(words.size());
    for (const auto& w : words) {
        if (w.alphabet_size() != 2) throw std::invalid_argument("WordTraces: word must use letters {A, B}");
        if (w.empty()) {
            out.push_back(1.0);
            continue;
        }
        const auto& blocks = w.blocks();
        const std::size_t last = blocks.size() - 1;
        std::size_t common = 0;
        while (common < prefix.size() && common < last && prefix[common] == blocks[common]) ++common;
        prefix.resize(common);
        stack.resize(common);
        for (std::size_t j = common; j < last; ++j) {
            const Operand& op = operand(blocks[j], center_of(blocks[j]), centered);
            if (stack.empty()) {
                Eigen::MatrixXd start = power(blocks[j].letter, blocks[j].exponent);
                if (centered) start.diagonal().array() -= center_of(blocks[j]);
                stack.push_back(std::move(start));
            } else {
                Eigen::MatrixXd next = stack.back();
                multiply_into(next, op);
                stack.push_back(std::move(next));
            }
            prefix.push_back(blocks[j]);
        }
        const Operand& tail = operand(blocks[last], center_of(blocks[last]), centered);
        double tr = 0.0;
        if (stack.empty()) {
            switch (tail.kind) {
                case Operand::Kind::diagonal: tr = tail.diagonal.sum(); break;
                case Operand::Kind::sparse: {
                    for (int k = 0; k < tail.sparse.outerSize(); ++k)
                        for (Eigen::SparseMatrix<double>::InnerIterator it(tail.sparse, k); it; ++it)
                            if (it.row() == it.col()) tr += it.value();
                    break;
                }
                case Operand::Kind::dense: tr = tail.dense.trace(); break;
            }
        } else {
            tr = trace_product(stack.back(), tail);
        }
        out.push_back(tr / n);
    }
    return out;
}

}  // namespace pfree
