#ifndef PFREE_COMBINATORICS_HPP
#define PFREE_COMBINATORICS_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pfree {

/// Run of `exponent` copies of one letter.
struct Block {
    int letter = 0;
    int exponent = 1;

    friend bool operator==(const Block&, const Block&) = default;
};

/// A word under the trace: a cyclic sequence of letters from an alphabet of
/// size k, kept in canonical form (the lexicographically least rotation of
/// its flattened letter string, letters ordered A < B < ...).
///
/// Zero-exponent blocks are dropped and equal neighbours merged at
/// construction, including across the cyclic wrap. The empty word is the
/// identity, with multiplicity 1.
class Word {
public:
    Word() = default;

    /// Canonicalizes the cyclic product of the given blocks.
    Word(const std::vector<Block>& blocks, int alphabet_size = 2);

    /// Canonicalizes a flattened string of letter indices.
    static Word from_letters(const std::vector<int>& letters, int alphabet_size = 2);

    /// Parses "AABAAB", "A2BA2B", "A^2BA^2B" or "(AB)^4".
    static Word parse(std::string_view text, int alphabet_size = 2);

    const std::vector<Block>& blocks() const { return blocks_; }
    int alphabet_size() const { return alphabet_; }
    int length() const;
    bool empty() const { return blocks_.empty(); }

    /// Flattened letter indices of the canonical representative.
    std::vector<int> letters() const;

    /// Canonical letter string, e.g. "AABAAB".
    std::string str() const;

    /// Sum of exponents carried by `letter`.
    int letter_power(int letter) const;

    /// Number of distinct letters that occur.
    int distinct_letters() const;

    /// The reversed word (transpose of the product for symmetric letters).
    Word reversed() const;

    friend bool operator==(const Word& a, const Word& b) {
        return a.alphabet_ == b.alphabet_ && a.blocks_ == b.blocks_;
    }
    friend bool operator<(const Word& a, const Word& b) { return a.letters() < b.letters(); }

private:
    std::vector<Block> blocks_;
    int alphabet_ = 2;
};

/// Rotation class of words with the number of words it contains.
struct Necklace {
    Word representative;
    std::uint64_t multiplicity = 1;
};

/// Smallest period of a cyclic letter string (the number of its distinct
/// rotations).
int smallest_period(const std::vector<int>& letters);

/// Lexicographically least rotation.
std::vector<int> least_rotation(std::vector<int> letters);

/// Number of (n,k)-necklaces, (1/n) sum_{d|n} phi(d) k^{n/d}.
/// Throws std::overflow_error if the exact value does not fit in 64 bits.
std::uint64_t necklace_count(int n, int k);

/// All (n,k)-necklaces in lexicographic order of their representatives.
std::vector<Necklace> enumerate_necklaces(int n, int k);

/// Number of words in the rotation class of w.
std::uint64_t word_multiplicity(const Word& w);

struct ExpansionOptions {
    /// Merge each necklace with its mirror image. Only valid when every
    /// letter is a real symmetric matrix, so that <W^T> = <W>.
    bool fold_reflections = false;
};

/// Distinct trace terms of <(X_0 + ... + X_{k-1})^n> with multiplicities.
std::vector<Necklace> word_expansion(int n, int k, ExpansionOptions options = {});

/// Merges mirror-image necklaces, summing multiplicities.
std::vector<Necklace> fold_bracelets(const std::vector<Necklace>& necklaces);

}  // namespace pfree

#endif
