#pragma once

#include "kempner/numeral.hpp"
#include "kempner/real.hpp"

#include <json.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kempner {

/// One signed logarithmic term: mult copies of log_B((A n + t) / (A n + t + 1))
/// with A = base^scale_exp and 0 <= t < A. The term at argument zero is zero.
struct LogTerm {
    long mult;
    unsigned scale_exp;
    mpz_class offset;

    bool operator==(const LogTerm&) const = default;
};

/// A log term together with the congruence condition it is summed under:
/// occurrences counted at base^cond_exp * n + cond_offset. The condition
/// offset is always the leading cond_exp digits of the term offset, and a
/// node with cond_exp == 0 is fully reduced.
struct ReductionNode {
    LogTerm term;
    unsigned cond_exp;
    mpz_class cond_offset;

    bool leaf() const { return cond_exp == 0; }
};

/// The derived signed multiset of log terms for one block. Summed over the
/// exact-count set starting at `start`, the terms add up to -1; `start` is 1
/// for all-zero blocks and 0 otherwise.
struct TermSet {
    Block block;
    int start = 0;
    std::vector<LogTerm> terms;  // merged, sorted by (scale_exp, offset)

    /// Exact value of sum mult * base^-scale_exp.
    mpq_class first_order() const {
        mpq_class s = 0;
        for (const LogTerm& t : terms) {
            mpz_class p;
            mpz_ui_pow_ui(p.get_mpz_t(), static_cast<unsigned long>(block.base), t.scale_exp);
            s += mpq_class(t.mult) / mpq_class(p);
        }
        s.canonicalize();
        return s;
    }
};

/// log_B(n / (n + 1)) for n >= 1, zero at n = 0. Accurate to well under
/// 2 ulp at the requested precision.
inline Real log_ratio(const mpz_class& n, int base, mpfr_prec_t prec) {
    require_base(base);
    if (n < 0) throw std::invalid_argument("log_ratio: negative input");
    Real out(prec);
    if (n == 0) return out;
    mpfr_prec_t wp = prec + 32;
    Real t(wp), lb(wp);
    mpz_class np1 = n + 1;
    mpfr_set_z(t.raw(), np1.get_mpz_t(), MPFR_RNDN);
    mpfr_ui_div(t.raw(), 1, t.raw(), MPFR_RNDN);
    mpfr_neg(t.raw(), t.raw(), MPFR_RNDN);
    mpfr_log1p(t.raw(), t.raw(), MPFR_RNDN);  // ln(n/(n+1))
    mpfr_set_ui(lb.raw(), static_cast<unsigned long>(base), MPFR_RNDN);
    mpfr_log(lb.raw(), lb.raw(), MPFR_RNDN);
    mpfr_div(t.raw(), t.raw(), lb.raw(), MPFR_RNDN);
    mpfr_set(out.raw(), t.raw(), MPFR_RNDN);
    return out;
}

inline Real log_ratio(unsigned long n, int base, mpfr_prec_t prec) {
    return log_ratio(mpz_class(n), base, prec);
}

namespace detail {

inline mpz_class pow_ui(int base, unsigned e) {
    mpz_class p;
    mpz_ui_pow_ui(p.get_mpz_t(), static_cast<unsigned long>(base), e);
    return p;
}

/// Digits of t written with exactly `width` digits (leading zeros kept).
inline std::vector<int> padded_digits(const mpz_class& t, int base, unsigned width) {
    Expansion e = expand(t, base);
    std::vector<int> out(width, 0);
    if (e.digits.size() > width) throw std::logic_error("padded_digits: value too wide");
    std::copy(e.digits.begin(), e.digits.end(), out.begin() + (width - e.digits.size()));
    return out;
}

}  // namespace detail

/// Initial node for a block w: term log_B((B^|w|) n + v(w)) under the
/// condition with exponent |w| - 1 and offset floor(v(w) / B).
inline ReductionNode root_node(const Block& w) {
    const unsigned m = static_cast<unsigned>(w.size());
    mpz_class t = w.value();
    ReductionNode node;
    node.term = LogTerm{+1, m, t};
    node.cond_exp = m - 1;
    node.cond_offset = t / w.base;
    return node;
}

/// One reduction step. If the leading cond_exp digits of the term offset do
/// not form a suffix of w the condition simply loses a digit; otherwise the
/// node splits into B children, the leading-digit-dropped term plus one
/// sign-flipped term per replacement leading digit.
inline std::vector<ReductionNode> reduce_node(const ReductionNode& node, const Block& w) {
    if (node.leaf()) throw std::invalid_argument("reduce_node: node is already reduced");
    const int B = w.base;
    const unsigned s = node.term.scale_exp;
    const unsigned r = node.cond_exp;
    const mpz_class& t = node.term.offset;

    std::vector<int> tdigits = detail::padded_digits(t, B, s);
    bool is_suffix = true;
    for (unsigned i = 0; i < r; ++i)
        if (tdigits[i] != w.digits[w.size() - r + i]) {
            is_suffix = false;
            break;
        }

    std::vector<ReductionNode> children;
    if (!is_suffix) {
        ReductionNode c;
        c.term = node.term;
        c.cond_exp = r - 1;
        c.cond_offset = t / detail::pow_ui(B, s - r + 1);
        children.push_back(std::move(c));
        return children;
    }

    const int b1 = tdigits[0];
    mpz_class low = t % detail::pow_ui(B, s - 1);  // drop the leading digit

    ReductionNode keep;
    keep.term = LogTerm{node.term.mult, s - 1, low};
    keep.cond_exp = r - 1;
    keep.cond_offset = low / detail::pow_ui(B, s - r);
    children.push_back(std::move(keep));

    for (int j = 0; j < B; ++j) {
        if (j == b1) continue;
        mpz_class tj = mpz_class(j) * detail::pow_ui(B, s - 1) + low;
        ReductionNode c;
        c.term = LogTerm{-node.term.mult, s, tj};
        c.cond_exp = r - 1;
        c.cond_offset = tj / detail::pow_ui(B, s - r + 1);
        children.push_back(std::move(c));
    }
    return children;
}

struct DeriveStats {
    unsigned long leaves = 0;
    unsigned depth = 0;
};

/// Full reduction: expands the root node until every node is fully reduced
/// and merges equal (scale, offset) terms with integer multiplicities.
inline TermSet derive_term_set(const Block& w, DeriveStats* stats = nullptr) {
    std::map<std::pair<unsigned, mpz_class>, long> merged;
    unsigned long leaves = 0;

    std::vector<ReductionNode> stack;
    stack.push_back(root_node(w));
    const unsigned root_exp = stack.back().cond_exp;
    while (!stack.empty()) {
        ReductionNode node = std::move(stack.back());
        stack.pop_back();
        if (node.leaf()) {
            ++leaves;
            merged[{node.term.scale_exp, node.term.offset}] += node.term.mult;
            continue;
        }
        for (auto& c : reduce_node(node, w)) stack.push_back(std::move(c));
    }

    TermSet ts{w, w.zero_block() ? 1 : 0, {}};
    for (auto& [key, mult] : merged) {
        if (mult == 0) continue;
        ts.terms.push_back(LogTerm{mult, key.first, key.second});
    }
    if (stats) {
        stats->leaves = leaves;
        stats->depth = root_exp;
    }
    return ts;
}

/// Exact product form at n, with zero arguments contributing a factor of 1.
inline mpq_class rational_value(const TermSet& ts, const mpz_class& n) {
    mpq_class prod = 1;
    for (const LogTerm& t : ts.terms) {
        mpz_class a = detail::pow_ui(ts.block.base, t.scale_exp) * n + t.offset;
        if (a == 0) continue;
        mpq_class f(a, a + 1);
        f.canonicalize();
        long e = t.mult >= 0 ? t.mult : -t.mult;
        mpq_class p = 1;
        for (long i = 0; i < e; ++i) p *= f;
        if (t.mult < 0) p = 1 / p;
        prod *= p;
    }
    prod.canonicalize();
    return prod;
}

/// Term-by-term evaluation of sum mult * log_B(arg / (arg + 1)) at n.
inline Real term_set_log(const TermSet& ts, const mpz_class& n, mpfr_prec_t prec) {
    mpfr_prec_t wp = prec + 32;
    Real acc(wp), one(wp);
    for (const LogTerm& t : ts.terms) {
        mpz_class a = detail::pow_ui(ts.block.base, t.scale_exp) * n + t.offset;
        Real l = log_ratio(a, ts.block.base, wp);
        mpfr_mul_si(one.raw(), l.raw(), t.mult, MPFR_RNDN);
        mpfr_add(acc.raw(), acc.raw(), one.raw(), MPFR_RNDN);
    }
    Real out(prec);
    mpfr_set(out.raw(), acc.raw(), MPFR_RNDN);
    return out;
}

/// Fast evaluator for ln of the product form and for the residual.
/// All rationals involved are 1 + delta with tiny delta, so ln(1 + delta)
/// is computed by a Horner-evaluated series at prec + 32 guard bits; error
/// per evaluated value stays below one ulp of the requested precision.
class TermSetEvaluator {
public:
    TermSetEvaluator(const TermSet& ts, mpfr_prec_t prec)
        : base_(ts.block.base),
          wp_(prec + 32),
          delta_(wp_), horner_(wp_), fden_(wp_), fdiff_(wp_), t1_(wp_), t2_(wp_) {
        pow_m_ = detail::pow_ui(base_, static_cast<unsigned>(ts.block.size()));
        for (const LogTerm& t : ts.terms) {
            terms_.push_back({detail::pow_ui(base_, t.scale_exp), t.offset, t.mult});
        }
        inv_.reserve(kMaxSeries + 1);
        inv_.emplace_back(wp_);  // unused slot 0
        for (int j = 1; j <= kMaxSeries; ++j) {
            Real r(wp_);
            mpfr_set_ui(r.raw(), 1, MPFR_RNDN);
            mpfr_div_ui(r.raw(), r.raw(), static_cast<unsigned long>(j), MPFR_RNDN);
            inv_.push_back(std::move(r));
        }
    }

    mpfr_prec_t working_prec() const { return wp_; }
    const mpz_class& base_power() const { return pow_m_; }

    /// out := ln of the product form at n (natural log), at working precision.
    void ln_value(const mpz_t n, mpfr_t out) {
        mpz_set_ui(num_.get_mpz_t(), 1);
        mpz_set_ui(den_.get_mpz_t(), 1);
        for (const Term& t : terms_) {
            mpz_mul(arg_.get_mpz_t(), t.pow.get_mpz_t(), n);
            mpz_add(arg_.get_mpz_t(), arg_.get_mpz_t(), t.off.get_mpz_t());
            if (mpz_sgn(arg_.get_mpz_t()) == 0) continue;
            mpz_add_ui(argp1_.get_mpz_t(), arg_.get_mpz_t(), 1);
            long e = t.mult >= 0 ? t.mult : -t.mult;
            mpz_class& up = t.mult >= 0 ? num_ : den_;
            mpz_class& down = t.mult >= 0 ? den_ : num_;
            for (long i = 0; i < e; ++i) {
                mpz_mul(up.get_mpz_t(), up.get_mpz_t(), arg_.get_mpz_t());
                mpz_mul(down.get_mpz_t(), down.get_mpz_t(), argp1_.get_mpz_t());
            }
        }
        mpz_sub(diff_.get_mpz_t(), num_.get_mpz_t(), den_.get_mpz_t());
        if (mpz_sgn(diff_.get_mpz_t()) == 0) {
            mpfr_set_zero(out, 1);
            return;
        }
        mpfr_set_z(fden_.raw(), den_.get_mpz_t(), MPFR_RNDN);
        mpfr_set_z(fdiff_.raw(), diff_.get_mpz_t(), MPFR_RNDN);
        mpfr_div(delta_.raw(), fdiff_.raw(), fden_.raw(), MPFR_RNDN);
        long e = -mpfr_get_exp(delta_.raw());
        if (e < 6) {
            mpfr_log1p(out, delta_.raw(), MPFR_RNDN);
            return;
        }
        int terms = static_cast<int>((wp_ + 20) / e) + 1;
        if (terms > kMaxSeries) terms = kMaxSeries;
        mpfr_set(horner_.raw(), inv_[terms].raw(), MPFR_RNDN);
        for (int j = terms - 1; j >= 1; --j) {
            mpfr_mul(horner_.raw(), horner_.raw(), delta_.raw(), MPFR_RNDN);
            mpfr_sub(horner_.raw(), inv_[j].raw(), horner_.raw(), MPFR_RNDN);
        }
        mpfr_mul(out, horner_.raw(), delta_.raw(), MPFR_RNDN);
    }

    /// out := -(B^|w|) * ln_value(n) - 1/n, for n >= 1.
    void residual_value(const mpz_t n, mpfr_t out) {
        ln_value(n, t1_.raw());
        mpfr_mul_z(t1_.raw(), t1_.raw(), pow_m_.get_mpz_t(), MPFR_RNDN);
        mpfr_set_z(t2_.raw(), n, MPFR_RNDN);
        mpfr_ui_div(t2_.raw(), 1, t2_.raw(), MPFR_RNDN);
        mpfr_add(t1_.raw(), t1_.raw(), t2_.raw(), MPFR_RNDN);
        mpfr_neg(out, t1_.raw(), MPFR_RNDN);
    }

private:
    static constexpr int kMaxSeries = 64;
    struct Term {
        mpz_class pow;
        mpz_class off;
        long mult;
    };
    int base_;
    mpfr_prec_t wp_;
    mpz_class pow_m_;
    std::vector<Term> terms_;
    std::vector<Real> inv_;
    mpz_class num_, den_, arg_, argp1_, diff_;
    Real delta_, horner_, fden_, fdiff_, t1_, t2_;
};

/// rho(n) = -(B^|w|) ln b(n) - 1/n at precision `prec`; O(1/n^2) in n.
inline Real residual(const TermSet& ts, const mpz_class& n, mpfr_prec_t prec) {
    if (n < 1) throw std::invalid_argument("residual: n must be >= 1");
    TermSetEvaluator ev(ts, prec);
    Real tmp(ev.working_prec());
    ev.residual_value(n.get_mpz_t(), tmp.raw());
    Real out(prec);
    mpfr_set(out.raw(), tmp.raw(), MPFR_RNDN);
    return out;
}

/// Exact constant C with |rho(n)| <= C / n^2 for all n >= 1, from the
/// per-term bound |ln((An+t)/(An+t+1)) + 1/(An)| <= (2t+3) / (2 A^2 n^2).
inline mpq_class residual_bound_constant(const TermSet& ts) {
    const int B = ts.block.base;
    mpq_class c = 0;
    for (const LogTerm& t : ts.terms) {
        mpz_class a2 = detail::pow_ui(B, 2 * t.scale_exp);
        long am = t.mult >= 0 ? t.mult : -t.mult;
        c += mpq_class(am * (2 * t.offset + 3)) / mpq_class(2 * a2);
    }
    c *= detail::pow_ui(B, static_cast<unsigned>(ts.block.size()));
    c.canonicalize();
    return c;
}

/// Rendering like "((2n+1)/(2n+2))*((4n+2)/(4n+1))"; negative multiplicities
/// print with numerator and denominator swapped.
inline std::string factored_form(const TermSet& ts) {
    auto affine = [&](const mpz_class& coeff, const mpz_class& off) {
        std::string s = coeff.get_str() + "n";
        if (off > 0) s += "+" + off.get_str();
        return s;
    };
    std::string out;
    for (const LogTerm& t : ts.terms) {
        mpz_class a = detail::pow_ui(ts.block.base, t.scale_exp);
        std::string lo = affine(a, t.offset);
        std::string hi = affine(a, t.offset + 1);
        if (!out.empty()) out += "*";
        out += "((";
        out += (t.mult > 0) ? lo : hi;
        out += ")/(";
        out += (t.mult > 0) ? hi : lo;
        out += "))";
        long e = t.mult >= 0 ? t.mult : -t.mult;
        if (e > 1) out += "^" + std::to_string(e);
    }
    return out;
}

inline nlohmann::ordered_json term_set_to_json(const TermSet& ts) {
    nlohmann::ordered_json j;
    j["base"] = ts.block.base;
    j["block"] = ts.block.str();
    j["start"] = ts.start;
    j["terms"] = nlohmann::ordered_json::array();
    for (const LogTerm& t : ts.terms) {
        nlohmann::ordered_json e;
        e["mult"] = std::to_string(t.mult);
        e["s"] = std::to_string(t.scale_exp);
        e["t"] = t.offset.get_str();
        j["terms"].push_back(std::move(e));
    }
    return j;
}

inline TermSet term_set_from_json(const nlohmann::ordered_json& j) {
    Block w = Block::parse(j.at("base").get<int>(), j.at("block").get<std::string>());
    TermSet ts{w, j.at("start").get<int>(), {}};
    for (const auto& e : j.at("terms")) {
        LogTerm t;
        t.mult = std::stol(e.at("mult").get<std::string>());
        t.scale_exp = static_cast<unsigned>(std::stoul(e.at("s").get<std::string>()));
        t.offset = mpz_class(e.at("t").get<std::string>());
        ts.terms.push_back(std::move(t));
    }
    return ts;
}

}  // namespace kempner
