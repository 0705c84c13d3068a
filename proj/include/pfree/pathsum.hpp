#ifndef PFREE_PATHSUM_HPP
#define PFREE_PATHSUM_HPP

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pfree/combinatorics.hpp"
#include "pfree/errors.hpp"
#include "pfree/moment_algebra.hpp"

namespace pfree {

/// A = diag(g_1..g_N) with i.i.d. g_i of known moments, B = the 0/1
/// adjacency matrix of a small graph. Word traces of (A, B) become sums over
/// closed walks on the graph.
template <typename Scalar>
class LatticeModel {
public:
    enum class Topology { general, circulant_chain, open_chain };

    LatticeModel(Eigen::MatrixXi adjacency, MomentSequence<Scalar> entry_moments)
        : LatticeModel(std::move(adjacency), std::move(entry_moments), Topology::general) {}

    /// Ring of n >= 3 sites.
    static LatticeModel circulant_chain(int n, MomentSequence<Scalar> entry_moments) {
        if (n < 3) throw std::invalid_argument("circulant_chain: need at least 3 sites");
        Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
        for (int i = 0; i < n; ++i) adj(i, (i + 1) % n) = adj((i + 1) % n, i) = 1;
        return LatticeModel(std::move(adj), std::move(entry_moments), Topology::circulant_chain);
    }

    /// Path of n >= 1 sites without the wrap-around bond.
    static LatticeModel open_chain(int n, MomentSequence<Scalar> entry_moments) {
        if (n < 1) throw std::invalid_argument("open_chain: need at least 1 site");
        Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
        for (int i = 0; i + 1 < n; ++i) adj(i, i + 1) = adj(i + 1, i) = 1;
        return LatticeModel(std::move(adj), std::move(entry_moments), Topology::open_chain);
    }

    int size() const { return static_cast<int>(adjacency_.rows()); }
    const Eigen::MatrixXi& adjacency() const { return adjacency_; }
    const MomentSequence<Scalar>& entry_moments() const { return moments_; }
    Topology topology() const { return topology_; }
    const std::vector<int>& neighbors(int site) const { return neighbors_[site]; }
    int distance(int a, int b) const { return distance_(a, b); }

private:
    LatticeModel(Eigen::MatrixXi adjacency, MomentSequence<Scalar> entry_moments, Topology topology)
        : adjacency_(std::move(adjacency)), moments_(std::move(entry_moments)), topology_(topology) {
        const int n = static_cast<int>(adjacency_.rows());
        if (n == 0 || adjacency_.cols() != n) throw std::invalid_argument("LatticeModel: adjacency must be square");
        for (int i = 0; i < n; ++i) {
            if (adjacency_(i, i) != 0) throw std::invalid_argument("LatticeModel: adjacency needs a zero diagonal");
            for (int j = 0; j < n; ++j) {
                const int v = adjacency_(i, j);
                if ((v != 0 && v != 1) || v != adjacency_(j, i))
                    throw std::invalid_argument("LatticeModel: adjacency must be symmetric 0/1");
            }
        }
        neighbors_.resize(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (adjacency_(i, j)) neighbors_[i].push_back(j);

        const int unreachable = std::numeric_limits<int>::max() / 2;
        distance_ = Eigen::MatrixXi::Constant(n, n, unreachable);
        for (int s = 0; s < n; ++s) {
            std::queue<int> q;
            distance_(s, s) = 0;
            q.push(s);
            while (!q.empty()) {
                const int u = q.front();
                q.pop();
                for (int v : neighbors_[u]) {
                    if (distance_(s, v) == unreachable) {
                        distance_(s, v) = distance_(s, u) + 1;
                        q.push(v);
                    }
                }
            }
        }
    }

    Eigen::MatrixXi adjacency_;
    MomentSequence<Scalar> moments_;
    Topology topology_;
    std::vector<std::vector<int>> neighbors_;
    Eigen::MatrixXi distance_;
};

struct PathsumOptions {
    /// Largest number of B letters (walk hops) a query may contain.
    int max_hops = 40;
};

namespace detail {

template <typename Scalar>
class WalkSum {
public:
    WalkSum(const LatticeModel<Scalar>& model, const std::vector<int>& letters)
        : model_(model), letters_(letters), remaining_hops_(letters.size() + 1, 0) {
        for (int i = static_cast<int>(letters_.size()) - 1; i >= 0; --i)
            remaining_hops_[i] = remaining_hops_[i + 1] + (letters_[i] == 1 ? 1 : 0);
    }

    Scalar from(int start) {
        start_ = start;
        powers_.clear();
        total_ = Scalar(0);
        walk(start, 0);
        return total_;
    }

private:
    void walk(int site, std::size_t pos) {
        if (model_.distance(site, start_) > remaining_hops_[pos]) return;
        if (pos == letters_.size()) {
            if (site == start_) total_ += weight();
            return;
        }
        if (letters_[pos] == 0) {
            auto it = std::find_if(powers_.begin(), powers_.end(), [&](const auto& p) { return p.first == site; });
            if (it == powers_.end()) {
                powers_.emplace_back(site, 1);
                walk(site, pos + 1);
                powers_.pop_back();
            } else {
                ++it->second;
                const auto index = it - powers_.begin();
                walk(site, pos + 1);
                --powers_[index].second;
            }
            return;
        }
        for (int next : model_.neighbors(site)) walk(next, pos + 1);
    }

    Scalar weight() const {
        const auto& m = model_.entry_moments();
        Scalar w(1);
        for (const auto& [site, power] : powers_) {
            if (power > m.order())
                throw std::out_of_range("pathsum: entry moment m_" + std::to_string(power) + " not supplied");
            w *= m[power];
        }
        return w;
    }

    const LatticeModel<Scalar>& model_;
    const std::vector<int>& letters_;
    std::vector<int> remaining_hops_;
    std::vector<std::pair<int, int>> powers_;
    int start_ = 0;
    Scalar total_;
};

}  // namespace detail

/// <w(A, B)> = (1/N) E tr w: the expected weight of closed walks whose hops
/// follow the B letters of w, with each site visited by A letters weighted by
/// the entry moment of its total collected power.
template <typename Scalar>
Scalar exact_word_net(const Word& w, const LatticeModel<Scalar>& model, PathsumOptions options = {}) {
    if (w.alphabet_size() != 2) throw std::invalid_argument("exact_word_net: word must use letters {A, B}");
    if (w.empty()) return Scalar(1);
    const int hops = w.letter_power(1);
    if (hops > options.max_hops)
        throw ResourceLimitError("exact_word_net: " + std::to_string(hops) + " hops exceed the bound of " +
                                 std::to_string(options.max_hops));
    const auto letters = w.letters();
    detail::WalkSum<Scalar> sum(model, letters);
    // Every site of a ring is equivalent, so one start site suffices.
    if (model.topology() == LatticeModel<Scalar>::Topology::circulant_chain) return sum.from(0);
    Scalar total(0);
    for (int s = 0; s < model.size(); ++s) total += sum.from(s);
    return total / Scalar(model.size());
}

/// Same walk sum on an open chain, where walks cannot leave through the
/// endpoints; differs from the ring value by O(1/N).
template <typename Scalar>
Scalar boundary_corrected_word_net(const Word& w, const LatticeModel<Scalar>& model, PathsumOptions options = {}) {
    if (model.topology() != LatticeModel<Scalar>::Topology::open_chain)
        throw std::invalid_argument("boundary_corrected_word_net: model must be an open chain");
    return exact_word_net(w, model, options);
}

/// <prod_j (X_j - <X_j>)> over the blocks X_j of w, expanded into raw word
/// traces with exactly computed centering constants.
template <typename Scalar>
Scalar exact_centered_word_net(const Word& w, const LatticeModel<Scalar>& model, PathsumOptions options = {}) {
    if (w.empty()) return Scalar(1);
    const auto& blocks = w.blocks();
    const int m = static_cast<int>(blocks.size());
    if (m > 24) throw ResourceLimitError("exact_centered_word_net: too many blocks");
    std::vector<Scalar> centers;
    for (const auto& b : blocks) centers.push_back(exact_word_net(Word({b}, 2), model, options));
    Scalar total(0);
    for (std::uint32_t s = 0; s < (std::uint32_t{1} << m); ++s) {
        Scalar factor(1);
        std::vector<Block> rest;
        for (int j = 0; j < m; ++j) {
            if (s & (std::uint32_t{1} << j))
                factor *= -centers[j];
            else
                rest.push_back(blocks[j]);
        }
        if (is_exact_zero(factor)) continue;
        total += factor * exact_word_net(Word(rest, 2), model, options);
    }
    return total;
}

/// mu_n(A + B) by summing exact word traces over the word expansion.
template <typename Scalar>
Scalar exact_sum_moment(int n, const LatticeModel<Scalar>& model, PathsumOptions options = {}) {
    if (n == 0) return Scalar(1);
    Scalar total(0);
    for (const auto& nk : word_expansion(n, 2))
        total += Scalar(static_cast<long long>(nk.multiplicity)) * exact_word_net(nk.representative, model, options);
    return total;
}

}  // namespace pfree

#endif
