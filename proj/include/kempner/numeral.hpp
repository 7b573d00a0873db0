#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kempner {

// Digit sequences are most-significant-first vectors of int.

inline void require_base(int base) {
    if (base < 2) throw std::invalid_argument("base must be >= 2");
    if (base > 65536) throw std::invalid_argument("base too large (max 65536)");
}

/// Canonical base-B expansion of a nonnegative integer: no leading zeros,
/// empty for zero.
struct Expansion {
    int base = 10;
    std::vector<int> digits;

    mpz_class value() const {
        mpz_class v = 0;
        for (int d : digits) {
            v *= base;
            v += d;
        }
        return v;
    }
};

inline Expansion expand(const mpz_class& n, int base) {
    require_base(base);
    if (n < 0) throw std::invalid_argument("expand: negative input");
    Expansion e;
    e.base = base;
    mpz_class m = n;
    while (m > 0) {
        mpz_class q, r;
        mpz_fdiv_qr_ui(q.get_mpz_t(), r.get_mpz_t(), m.get_mpz_t(),
                       static_cast<unsigned long>(base));
        e.digits.push_back(static_cast<int>(r.get_ui()));
        m = q;
    }
    std::reverse(e.digits.begin(), e.digits.end());
    return e;
}

inline Expansion expand(unsigned long n, int base) { return expand(mpz_class(n), base); }

inline mpz_class value_of_digits(const std::vector<int>& digits, int base) {
    mpz_class v = 0;
    for (int d : digits) {
        v *= base;
        v += d;
    }
    return v;
}

inline unsigned long digit_sum(const mpz_class& n, int base) {
    require_base(base);
    if (n < 0) throw std::invalid_argument("digit_sum: negative input");
    unsigned long s = 0;
    mpz_class m = n;
    while (m > 0) {
        mpz_class q, r;
        mpz_fdiv_qr_ui(q.get_mpz_t(), r.get_mpz_t(), m.get_mpz_t(),
                       static_cast<unsigned long>(base));
        s += r.get_ui();
        m = q;
    }
    return s;
}

inline unsigned long digit_sum(unsigned long n, int base) { return digit_sum(mpz_class(n), base); }

/// A digit block: a nonempty digit string over [0, base). Leading zeros are
/// legal and significant ("011" is a different block than "11").
struct Block {
    int base;
    std::vector<int> digits;

    Block(int base_, std::vector<int> digits_) : base(base_), digits(std::move(digits_)) {
        require_base(base);
        if (digits.empty()) throw std::invalid_argument("block must be nonempty");
        for (int d : digits)
            if (d < 0 || d >= base)
                throw std::invalid_argument("digit " + std::to_string(d) +
                                            " invalid for base " + std::to_string(base));
    }

    /// Parses "011" style strings; digits above 9 use bracketed decimal
    /// groups, e.g. "[10][3]" in base 12. Mixed forms are accepted.
    static Block parse(int base, const std::string& text) {
        require_base(base);
        std::vector<int> ds;
        for (std::size_t i = 0; i < text.size();) {
            char c = text[i];
            if (c == '[') {
                std::size_t j = text.find(']', i);
                if (j == std::string::npos)
                    throw std::invalid_argument("unterminated '[' in block \"" + text + "\"");
                std::string body = text.substr(i + 1, j - i - 1);
                if (body.empty() || body.find_first_not_of("0123456789") != std::string::npos)
                    throw std::invalid_argument("bad digit group \"[" + body + "]\"");
                long v = std::stol(body);
                if (v >= base)
                    throw std::invalid_argument("digit " + body + " invalid for base " +
                                                std::to_string(base));
                ds.push_back(static_cast<int>(v));
                i = j + 1;
            } else if (c >= '0' && c <= '9') {
                int v = c - '0';
                if (v >= base)
                    throw std::invalid_argument(std::string("digit ") + c + " invalid for base " +
                                                std::to_string(base));
                ds.push_back(v);
                ++i;
            } else {
                throw std::invalid_argument(std::string("unexpected character '") + c +
                                            "' in block");
            }
        }
        return Block(base, std::move(ds));
    }

    std::size_t size() const { return digits.size(); }

    bool zero_block() const {
        for (int d : digits)
            if (d != 0) return false;
        return true;
    }

    bool leading_zero() const { return digits.front() == 0; }

    mpz_class value() const { return value_of_digits(digits, base); }

    std::string str() const {
        std::string s;
        for (int d : digits) {
            if (base <= 10)
                s += static_cast<char>('0' + d);
            else
                s += "[" + std::to_string(d) + "]";
        }
        return s;
    }

    bool operator==(const Block&) const = default;
};

inline mpz_class value_of(const Block& w) { return w.value(); }

/// Number of (possibly overlapping) occurrences of w in the canonical
/// expansion of n, by direct substring scan. Zero has an empty expansion,
/// so every count at zero is zero.
inline unsigned long count_occurrences_naive(const mpz_class& n, const Block& w) {
    Expansion e = expand(n, w.base);
    if (e.digits.size() < w.size()) return 0;
    unsigned long c = 0;
    for (std::size_t i = 0; i + w.size() <= e.digits.size(); ++i) {
        bool match = true;
        for (std::size_t j = 0; j < w.size(); ++j)
            if (e.digits[i + j] != w.digits[j]) {
                match = false;
                break;
            }
        if (match) ++c;
    }
    return c;
}

inline unsigned long count_occurrences_naive(unsigned long n, const Block& w) {
    return count_occurrences_naive(mpz_class(n), w);
}

/// Deterministic matcher for one block. States 0..|w| record the longest
/// prefix of w matched so far; after a completed match the state follows the
/// longest proper border of w, so overlapping occurrences all count.
struct OccurrenceAutomaton {
    Block block;
    std::vector<int> next;           // states() * base
    std::vector<unsigned char> emit; // states() * base, 1 when a match completes

    int states() const { return static_cast<int>(block.size()) + 1; }

    std::pair<int, int> step(int q, int digit) const {
        std::size_t idx = static_cast<std::size_t>(q) * block.base + digit;
        return {next[idx], emit[idx]};
    }

    unsigned long count(const std::vector<int>& digits) const {
        int q = 0;
        unsigned long c = 0;
        for (int d : digits) {
            auto [q2, e] = step(q, d);
            q = q2;
            c += e;
        }
        return c;
    }

    unsigned long count_value(const mpz_class& n) const {
        return count(expand(n, block.base).digits);
    }
};

/// Standard failure-function construction.
inline OccurrenceAutomaton build_automaton(const Block& w) {
    const int m = static_cast<int>(w.size());
    const int B = w.base;

    // prefix function: pi[i] = longest proper border of w[0..i]
    std::vector<int> pi(m, 0);
    for (int i = 1; i < m; ++i) {
        int k = pi[i - 1];
        while (k > 0 && w.digits[i] != w.digits[k]) k = pi[k - 1];
        if (w.digits[i] == w.digits[k]) ++k;
        pi[i] = k;
    }

    OccurrenceAutomaton aut{w, {}, {}};
    aut.next.assign(static_cast<std::size_t>(m + 1) * B, 0);
    aut.emit.assign(static_cast<std::size_t>(m + 1) * B, 0);

    for (int q = 0; q < m; ++q) {
        for (int j = 0; j < B; ++j) {
            int k = q;
            while (k > 0 && w.digits[k] != j) k = pi[k - 1];
            if (w.digits[k] == j) ++k;
            std::size_t idx = static_cast<std::size_t>(q) * B + j;
            if (k == m) {
                aut.emit[idx] = 1;
                aut.next[idx] = pi[m - 1];  // continue from the longest border
            } else {
                aut.next[idx] = k;
            }
        }
    }
    // the "just matched" state behaves like its border
    int b = pi[m - 1];
    for (int j = 0; j < B; ++j) {
        std::size_t from = static_cast<std::size_t>(b) * B + j;
        std::size_t to = static_cast<std::size_t>(m) * B + j;
        aut.next[to] = aut.next[from];
        aut.emit[to] = aut.emit[from];
    }
    return aut;
}

/// Uniform digit-driven counting system: either a block-occurrence automaton
/// (each step adds 0 or 1) or a digit-sum accumulator (each step adds the
/// digit value). Count tables and constrained enumeration run on this one
/// interface.
struct DigitCounter {
    int base = 2;
    int states = 1;
    std::vector<int> next;          // states * base
    std::vector<unsigned int> add;  // states * base
    std::string label;

    static DigitCounter block_counter(const Block& w) {
        OccurrenceAutomaton aut = build_automaton(w);
        DigitCounter c;
        c.base = w.base;
        c.states = aut.states();
        c.next = aut.next;
        c.add.assign(aut.emit.begin(), aut.emit.end());
        c.label = "block " + w.str() + " base " + std::to_string(w.base);
        return c;
    }

    static DigitCounter digit_sum_counter(int base) {
        require_base(base);
        DigitCounter c;
        c.base = base;
        c.states = 1;
        c.next.assign(static_cast<std::size_t>(base), 0);
        c.add.resize(static_cast<std::size_t>(base));
        for (int j = 0; j < base; ++j) c.add[static_cast<std::size_t>(j)] = static_cast<unsigned>(j);
        c.label = "digit-sum base " + std::to_string(base);
        return c;
    }

    unsigned int max_step_add() const {
        unsigned int m = 0;
        for (unsigned int a : add)
            if (a > m) m = a;
        return m;
    }

    unsigned long count_value(const mpz_class& n) const {
        Expansion e = expand(n, base);
        int q = 0;
        unsigned long c = 0;
        for (int d : e.digits) {
            std::size_t idx = static_cast<std::size_t>(q) * base + d;
            c += add[idx];
            q = next[idx];
        }
        return c;
    }
};

}  // namespace kempner
