#include "pfree/combinatorics.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <stdexcept>

namespace pfree {

namespace {

std::vector<int> flatten(const std::vector<Block>& blocks) {
    std::vector<int> out;
    for (const auto& b : blocks)
        for (int e = 0; e < b.exponent; ++e) out.push_back(b.letter);
    return out;
}

std::vector<Block> run_length(const std::vector<int>& letters) {
    std::vector<Block> out;
    for (int c : letters) {
        if (!out.empty() && out.back().letter == c)
            ++out.back().exponent;
        else
            out.push_back({c, 1});
    }
    return out;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("necklace_count: 64-bit overflow");
    return r;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("necklace_count: 64-bit overflow");
    return r;
}

std::uint64_t checked_pow(std::uint64_t base, int exp) {
    std::uint64_t r = 1;
    for (int i = 0; i < exp; ++i) r = checked_mul(r, base);
    return r;
}

int totient(int d) {
    int result = d;
    for (int p = 2; p * p <= d; ++p) {
        if (d % p == 0) {
            while (d % p == 0) d /= p;
            result -= result / p;
        }
    }
    if (d > 1) result -= result / d;
    return result;
}

// Recursive word parser: sequence := item*, item := (letter | '(' sequence ')') exponent?
struct Parser {
    std::string_view text;
    std::size_t pos = 0;
    int alphabet;

    int parse_exponent() {
        if (pos < text.size() && text[pos] == '^') ++pos;
        std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (start == pos) {
            if (start > 0 && text[start - 1] == '^')
                throw std::invalid_argument("word: missing exponent after '^'");
            return 1;
        }
        return std::stoi(std::string(text.substr(start, pos - start)));
    }

    std::vector<int> sequence() {
        std::vector<int> out;
        while (pos < text.size() && text[pos] != ')') {
            const char c = text[pos];
            std::vector<int> item;
            if (c == '(') {
                ++pos;
                item = sequence();
                if (pos >= text.size() || text[pos] != ')') throw std::invalid_argument("word: unbalanced '('");
                ++pos;
            } else if (std::isupper(static_cast<unsigned char>(c))) {
                const int letter = c - 'A';
                if (letter >= alphabet)
                    throw std::invalid_argument(std::string("word: letter '") + c + "' outside the alphabet");
                item.push_back(letter);
                ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
                continue;
            } else {
                throw std::invalid_argument(std::string("word: unexpected character '") + c + "'");
            }
            const int e = parse_exponent();
            for (int r = 0; r < e; ++r) out.insert(out.end(), item.begin(), item.end());
        }
        return out;
    }
};

}  // namespace

int smallest_period(const std::vector<int>& letters) {
    const int n = static_cast<int>(letters.size());
    if (n == 0) return 1;
    for (int p = 1; p < n; ++p) {
        if (n % p != 0) continue;
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) ok = letters[i] == letters[(i + p) % n];
        if (ok) return p;
    }
    return n;
}

std::vector<int> least_rotation(std::vector<int> letters) {
    const std::size_t n = letters.size();
    std::vector<int> best = letters;
    for (std::size_t r = 1; r < n; ++r) {
        std::rotate(letters.begin(), letters.begin() + 1, letters.end());
        if (letters < best) best = letters;
    }
    return best;
}

Word::Word(const std::vector<Block>& blocks, int alphabet_size) : alphabet_(alphabet_size) {
    if (alphabet_size < 1) throw std::invalid_argument("Word: alphabet size must be positive");
    std::vector<int> letters;
    for (const auto& b : blocks) {
        if (b.exponent < 0) throw std::invalid_argument("Word: negative exponent");
        if (b.letter < 0 || b.letter >= alphabet_size) throw std::invalid_argument("Word: letter outside alphabet");
        for (int e = 0; e < b.exponent; ++e) letters.push_back(b.letter);
    }
    blocks_ = run_length(least_rotation(std::move(letters)));
    // A least rotation never splits a run across the wrap unless the word is a
    // single letter; merge the wrap explicitly to keep blocks alternating.
    if (blocks_.size() > 1 && blocks_.front().letter == blocks_.back().letter) {
        blocks_.front().exponent += blocks_.back().exponent;
        blocks_.pop_back();
    }
}

Word Word::from_letters(const std::vector<int>& letters, int alphabet_size) {
    std::vector<Block> blocks;
    for (int c : letters) blocks.push_back({c, 1});
    return Word(blocks, alphabet_size);
}

Word Word::parse(std::string_view text, int alphabet_size) {
    Parser p{text, 0, alphabet_size};
    auto letters = p.sequence();
    if (p.pos != text.size()) throw std::invalid_argument("word: unbalanced ')'");
    return from_letters(letters, alphabet_size);
}

int Word::length() const {
    int n = 0;
    for (const auto& b : blocks_) n += b.exponent;
    return n;
}

std::vector<int> Word::letters() const { return flatten(blocks_); }

std::string Word::str() const {
    std::string s;
    for (int c : letters()) s.push_back(static_cast<char>('A' + c));
    return s;
}

int Word::letter_power(int letter) const {
    int n = 0;
    for (const auto& b : blocks_)
        if (b.letter == letter) n += b.exponent;
    return n;
}

int Word::distinct_letters() const {
    std::vector<bool> seen(static_cast<std::size_t>(alphabet_), false);
    int count = 0;
    for (const auto& b : blocks_) {
        if (!seen[b.letter]) {
            seen[b.letter] = true;
            ++count;
        }
    }
    return count;
}

Word Word::reversed() const {
    auto l = letters();
    std::reverse(l.begin(), l.end());
    return from_letters(l, alphabet_);
}

std::uint64_t necklace_count(int n, int k) {
    if (n < 1 || k < 1) throw std::invalid_argument("necklace_count: need n >= 1 and k >= 1");
    std::uint64_t sum = 0;
    for (int d = 1; d <= n; ++d) {
        if (n % d != 0) continue;
        sum = checked_add(sum, checked_mul(static_cast<std::uint64_t>(totient(d)),
                                           checked_pow(static_cast<std::uint64_t>(k), n / d)));
    }
    return sum / static_cast<std::uint64_t>(n);
}

std::vector<Necklace> enumerate_necklaces(int n, int k) {
    if (n < 1 || k < 1) throw std::invalid_argument("enumerate_necklaces: need n >= 1 and k >= 1");
    // Fredricksen-Kessler-Maiorana / Sawada generation of prenecklaces; a
    // prenecklace a[1..n] whose Lyndon prefix length p divides n is a
    // necklace of smallest period p.
    std::vector<Necklace> out;
    std::vector<int> a(static_cast<std::size_t>(n) + 1, 0);
    auto gen = [&](auto&& self, int t, int p) -> void {
        if (t > n) {
            if (n % p == 0) {
                std::vector<int> letters(a.begin() + 1, a.end());
                out.push_back({Word::from_letters(letters, k), static_cast<std::uint64_t>(p)});
            }
            return;
        }
        a[t] = a[t - p];
        self(self, t + 1, p);
        for (int j = a[t - p] + 1; j < k; ++j) {
            a[t] = j;
            self(self, t + 1, t);
        }
    };
    gen(gen, 1, 1);
    return out;
}

std::uint64_t word_multiplicity(const Word& w) {
    if (w.empty()) throw std::invalid_argument("word_multiplicity: empty word");
    return static_cast<std::uint64_t>(smallest_period(w.letters()));
}

std::vector<Necklace> word_expansion(int n, int k, ExpansionOptions options) {
    auto necklaces = enumerate_necklaces(n, k);
    return options.fold_reflections ? fold_bracelets(necklaces) : necklaces;
}

std::vector<Necklace> fold_bracelets(const std::vector<Necklace>& necklaces) {
    std::map<std::vector<int>, Necklace> merged;
    for (const auto& nk : necklaces) {
        const Word mirror = nk.representative.reversed();
        const Word& key = std::min(nk.representative, mirror);
        auto [it, inserted] = merged.try_emplace(key.letters(), Necklace{key, 0});
        it->second.multiplicity += nk.multiplicity;
    }
    std::vector<Necklace> out;
    out.reserve(merged.size());
    for (auto& [_, nk] : merged) out.push_back(std::move(nk));
    return out;
}

}  // namespace pfree
