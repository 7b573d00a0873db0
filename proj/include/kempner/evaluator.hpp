#pragma once

#include "kempner/counting.hpp"
#include "kempner/numeral.hpp"
#include "kempner/real.hpp"
#include "kempner/reducer.hpp"

#include <atomic>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

namespace kempner {

struct EvalOptions {
    mpfr_prec_t precision = 128;
    int threads = 1;
};

/// Depth giving roughly 2^24 integers below base^depth.
inline int default_depth(int base) {
    require_base(base);
    int d = static_cast<int>(std::lround(24.0 * std::log(2.0) / std::log(double(base))));
    return d < 1 ? 1 : d;
}

/// Prefix length for the refined tail enclosure, about 2^12 leading groups.
inline int tail_prefix_len(int base, int depth) {
    int l = static_cast<int>(std::lround(12.0 * std::log(2.0) / std::log(double(base))));
    if (l < 1) l = 1;
    if (l > depth) l = depth;
    return l;
}

/// A certified enclosure: the true value lies within estimate +- error_radius
/// whenever the underlying tail bounds are sound. Degenerate empty summation
/// sets are flagged explicitly.
struct ApproxValue {
    Real estimate;
    Real radius;
    bool empty_set = false;
};

/// A summation constraint: exact block-occurrence count or exact digit sum.
struct Constraint {
    enum class Kind { block, digit_sum };
    Kind kind;
    int base;
    std::optional<Block> block;
    unsigned long k = 0;

    static Constraint block_count(Block w, unsigned long k) {
        return Constraint{Kind::block, w.base, std::move(w), k};
    }
    static Constraint digit_sum_is(int base, unsigned long k) {
        require_base(base);
        return Constraint{Kind::digit_sum, base, std::nullopt, k};
    }
    DigitCounter counter() const {
        return kind == Kind::block ? DigitCounter::block_counter(*block)
                                   : DigitCounter::digit_sum_counter(base);
    }
};

struct LimitRow {
    unsigned long k;
    ApproxValue sum;
    Real limit_value;
    Real certified_distance;
};

namespace detail {

struct SumOutcome {
    Real sum;       // working precision
    Real max_abs;   // working precision
    unsigned long terms = 0;
};

/// Fixed chunk-root prefix length: enough digits for a few hundred subtrees,
/// independent of the thread count so results never depend on scheduling.
inline int chunk_prefix_len(int base, int depth) {
    int l = 1;
    long roots = base - 1;
    while (roots < 256 && l < depth) {
        roots *= base;
        ++l;
    }
    return l;
}

template <class OnAccept, class OnFrontier>
void dfs_walk(const DigitCounter& sys, unsigned long k, int max_len, int min_len,
              std::vector<mpz_class>& val, int len, int q, unsigned long c,
              int frontier_len, OnAccept&& on_accept, OnFrontier&& on_frontier) {
    if (c == k && len >= min_len) on_accept(val[static_cast<std::size_t>(len)], len);
    if (len == frontier_len) {
        on_frontier(val[static_cast<std::size_t>(len)], q, c);
        return;
    }
    if (len == max_len) return;
    const int B = sys.base;
    const unsigned long madd = sys.max_step_add();
    const unsigned long remaining = static_cast<unsigned long>(max_len - len - 1);
    for (int j = 0; j < B; ++j) {
        std::size_t idx = static_cast<std::size_t>(q) * B + j;
        unsigned long c2 = c + sys.add[idx];
        if (c2 > k) continue;
        if (c2 + remaining * madd < k) continue;
        mpz_class& nv = val[static_cast<std::size_t>(len + 1)];
        mpz_mul_ui(nv.get_mpz_t(), val[static_cast<std::size_t>(len)].get_mpz_t(),
                   static_cast<unsigned long>(B));
        mpz_add_ui(nv.get_mpz_t(), nv.get_mpz_t(), static_cast<unsigned long>(j));
        dfs_walk(sys, k, max_len, min_len, val, len + 1, sys.next[idx], c2, frontier_len,
                 on_accept, on_frontier);
    }
}

struct ChunkRoot {
    mpz_class value;
    int state;
    unsigned long count;
};

/// Depth-first sum of eval(n) over {n >= 1, min_len <= digits(n) <= depth,
/// counter(n) == k}, optionally restricted to n > *value_floor. The walk is
/// split at a fixed prefix length into chunks combined in lexicographic
/// order, so the result is bit-identical for every thread count.
template <class MakeEval>
SumOutcome constrained_sum(const DigitCounter& sys, unsigned long k, int depth, int min_len,
                           mpfr_prec_t prec, int threads, MakeEval&& make_eval,
                           const mpz_class* value_floor = nullptr) {
    if (depth < 1) throw std::invalid_argument("constrained_sum: depth must be >= 1");
    const mpfr_prec_t wp = prec + 32;
    SumOutcome out{Real(wp), Real(wp), 0};

    const int lc = chunk_prefix_len(sys.base, depth);
    const int frontier = lc < depth ? lc : -1;

    std::vector<ChunkRoot> roots;
    {
        auto ev = make_eval();
        Real term(wp);
        std::vector<mpz_class> val(static_cast<std::size_t>(lc) + 1);
        auto accept = [&](const mpz_class& n, int) {
            if (value_floor && n <= *value_floor) return;
            ev.value(n.get_mpz_t(), term.raw());
            mpfr_add(out.sum.raw(), out.sum.raw(), term.raw(), MPFR_RNDN);
            if (mpfr_cmpabs(term.raw(), out.max_abs.raw()) > 0)
                mpfr_abs(out.max_abs.raw(), term.raw(), MPFR_RNDN);
            ++out.terms;
        };
        auto frontier_hook = [&](const mpz_class& v, int q, unsigned long c) {
            roots.push_back({v, q, c});
        };
        for (int j = 1; j < sys.base; ++j) {
            std::size_t idx = static_cast<std::size_t>(j);
            unsigned long c = sys.add[idx];
            if (c > k) continue;
            val[1] = j;
            // full depth as pruning horizon; the frontier stops the descent
            dfs_walk(sys, k, depth, min_len, val, 1, sys.next[idx], c, frontier, accept,
                     frontier_hook);
        }
    }

    if (frontier < 0 || roots.empty()) {
        Real s(wp), m(wp);
        mpfr_set(s.raw(), out.sum.raw(), MPFR_RNDN);
        mpfr_set(m.raw(), out.max_abs.raw(), MPFR_RNDN);
        return SumOutcome{std::move(s), std::move(m), out.terms};
    }

    struct Slot {
        Real sum;
        Real max_abs;
        unsigned long terms = 0;
        Slot(mpfr_prec_t p) : sum(p), max_abs(p) {}
    };
    std::vector<Slot> slots;
    slots.reserve(roots.size());
    for (std::size_t i = 0; i < roots.size(); ++i) slots.emplace_back(wp);

    std::atomic<std::size_t> next_chunk{0};
    auto worker = [&]() {
        auto ev = make_eval();
        Real term(wp);
        std::vector<mpz_class> val(static_cast<std::size_t>(depth) + 1);
        for (;;) {
            std::size_t i = next_chunk.fetch_add(1);
            if (i >= roots.size()) break;
            const ChunkRoot& root = roots[i];
            Slot& slot = slots[i];
            auto accept = [&](const mpz_class& n, int) {
                if (value_floor && n <= *value_floor) return;
                ev.value(n.get_mpz_t(), term.raw());
                mpfr_add(slot.sum.raw(), slot.sum.raw(), term.raw(), MPFR_RNDN);
                if (mpfr_cmpabs(term.raw(), slot.max_abs.raw()) > 0)
                    mpfr_abs(slot.max_abs.raw(), term.raw(), MPFR_RNDN);
                ++slot.terms;
            };
            auto no_frontier = [](const mpz_class&, int, unsigned long) {};
            val[static_cast<std::size_t>(lc)] = root.value;
            // expand the root's children; the root itself was accepted in
            // the prefix walk
            const int B = sys.base;
            const unsigned long madd = sys.max_step_add();
            for (int j = 0; j < B; ++j) {
                std::size_t idx = static_cast<std::size_t>(root.state) * B + j;
                unsigned long c2 = root.count + sys.add[idx];
                if (c2 > k) continue;
                if (lc + 1 <= depth) {
                    unsigned long remaining = static_cast<unsigned long>(depth - lc - 1);
                    if (c2 + remaining * madd < k) continue;
                    mpz_class& nv = val[static_cast<std::size_t>(lc) + 1];
                    mpz_mul_ui(nv.get_mpz_t(), val[static_cast<std::size_t>(lc)].get_mpz_t(),
                               static_cast<unsigned long>(B));
                    mpz_add_ui(nv.get_mpz_t(), nv.get_mpz_t(), static_cast<unsigned long>(j));
                    dfs_walk(sys, k, depth, min_len, val, lc + 1, sys.next[idx], c2, -1,
                             accept, no_frontier);
                }
            }
        }
    };

    int nthreads = threads < 1 ? 1 : threads;
    if (static_cast<std::size_t>(nthreads) > roots.size())
        nthreads = static_cast<int>(roots.size());
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (Slot& s : slots) {
        mpfr_add(out.sum.raw(), out.sum.raw(), s.sum.raw(), MPFR_RNDN);
        if (mpfr_cmpabs(s.max_abs.raw(), out.max_abs.raw()) > 0)
            mpfr_set(out.max_abs.raw(), s.max_abs.raw(), MPFR_RNDN);
        out.terms += s.terms;
    }
    return out;
}

/// Dense scan over n = 1..limit in fixed 2^16 blocks (deterministic for any
/// thread count); adds eval(n) whenever counter(n) == k.
template <class MakeEval>
SumOutcome dense_sum(const DigitCounter& sys, unsigned long k, unsigned long limit,
                     mpfr_prec_t prec, int threads, MakeEval&& make_eval) {
    const mpfr_prec_t wp = prec + 32;
    const unsigned long chunk = 1ul << 16;
    const std::size_t nchunks = static_cast<std::size_t>((limit + chunk - 1) / chunk);

    struct Slot {
        Real sum;
        Real max_abs;
        unsigned long terms = 0;
        Slot(mpfr_prec_t p) : sum(p), max_abs(p) {}
    };
    std::vector<Slot> slots;
    slots.reserve(nchunks);
    for (std::size_t i = 0; i < nchunks; ++i) slots.emplace_back(wp);

    std::atomic<std::size_t> next_chunk{0};
    auto worker = [&]() {
        auto ev = make_eval();
        Real term(wp);
        mpz_class nz;
        int digits[64];
        for (;;) {
            std::size_t i = next_chunk.fetch_add(1);
            if (i >= nchunks) break;
            Slot& slot = slots[i];
            unsigned long lo = static_cast<unsigned long>(i) * chunk + 1;
            unsigned long hi = lo + chunk - 1 < limit ? lo + chunk - 1 : limit;
            for (unsigned long n = lo; n <= hi; ++n) {
                int len = 0;
                unsigned long m = n;
                while (m > 0) {
                    digits[len++] = static_cast<int>(m % sys.base);
                    m /= sys.base;
                }
                int q = 0;
                unsigned long c = 0;
                for (int d = len - 1; d >= 0 && c <= k; --d) {
                    std::size_t idx = static_cast<std::size_t>(q) * sys.base + digits[d];
                    c += sys.add[idx];
                    q = sys.next[idx];
                }
                if (c != k) continue;
                nz = n;
                ev.value(nz.get_mpz_t(), term.raw());
                mpfr_add(slot.sum.raw(), slot.sum.raw(), term.raw(), MPFR_RNDN);
                if (mpfr_cmpabs(term.raw(), slot.max_abs.raw()) > 0)
                    mpfr_abs(slot.max_abs.raw(), term.raw(), MPFR_RNDN);
                ++slot.terms;
            }
        }
    };

    int nthreads = threads < 1 ? 1 : threads;
    if (static_cast<std::size_t>(nthreads) > nchunks) nthreads = static_cast<int>(nchunks);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SumOutcome out{Real(wp), Real(wp), 0};
    for (Slot& s : slots) {
        mpfr_add(out.sum.raw(), out.sum.raw(), s.sum.raw(), MPFR_RNDN);
        if (mpfr_cmpabs(s.max_abs.raw(), out.max_abs.raw()) > 0)
            mpfr_set(out.max_abs.raw(), s.max_abs.raw(), MPFR_RNDN);
        out.terms += s.terms;
    }
    return out;
}

/// Summand ln b(n) for the identity partial sums.
struct LnBEval {
    TermSetEvaluator ev;
    LnBEval(const TermSet& ts, mpfr_prec_t prec) : ev(ts, prec) {}
    void value(const mpz_t n, mpfr_t out) { ev.ln_value(n, out); }
};

/// Summand rho(n) for accelerated sums.
struct RhoEval {
    TermSetEvaluator ev;
    RhoEval(const TermSet& ts, mpfr_prec_t prec) : ev(ts, prec) {}
    void value(const mpz_t n, mpfr_t out) { ev.residual_value(n, out); }
};

/// Summand 1/n.
struct RecipEval {
    Real t;
    RecipEval(mpfr_prec_t prec) : t(prec + 32) {}
    void value(const mpz_t n, mpfr_t out) {
        mpfr_set_z(t.raw(), n, MPFR_RNDN);
        mpfr_ui_div(out, 1, t.raw(), MPFR_RNDN);
    }
};

/// Summand ln((n+1) / (B * floor(n/B) + B)), the digit-sum identity kernel.
/// Same series scheme as the term-set evaluator: the ratio is 1 + delta with
/// delta = (r + 1 - B) / (B floor(n/B) + B) for the last digit r.
struct DigitSumIdentityEval {
    int base;
    mpfr_prec_t wp;
    mpz_class num, den, diff, q;
    Real delta, horner, fden, fdiff;
    std::vector<Real> inv;
    static constexpr int kMaxSeries = 64;

    DigitSumIdentityEval(int b, mpfr_prec_t prec)
        : base(b), wp(prec + 32), delta(wp), horner(wp), fden(wp), fdiff(wp) {
        inv.reserve(kMaxSeries + 1);
        inv.emplace_back(wp);
        for (int j = 1; j <= kMaxSeries; ++j) {
            Real r(wp);
            mpfr_set_ui(r.raw(), 1, MPFR_RNDN);
            mpfr_div_ui(r.raw(), r.raw(), static_cast<unsigned long>(j), MPFR_RNDN);
            inv.push_back(std::move(r));
        }
    }

    void value(const mpz_t n, mpfr_t out) {
        mpz_fdiv_q_ui(q.get_mpz_t(), n, static_cast<unsigned long>(base));
        mpz_add_ui(q.get_mpz_t(), q.get_mpz_t(), 1);
        mpz_mul_ui(den.get_mpz_t(), q.get_mpz_t(), static_cast<unsigned long>(base));
        mpz_set(num.get_mpz_t(), n);
        mpz_add_ui(num.get_mpz_t(), num.get_mpz_t(), 1);
        mpz_sub(diff.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
        if (mpz_sgn(diff.get_mpz_t()) == 0) {
            mpfr_set_zero(out, 1);
            return;
        }
        mpfr_set_z(fden.raw(), den.get_mpz_t(), MPFR_RNDN);
        mpfr_set_z(fdiff.raw(), diff.get_mpz_t(), MPFR_RNDN);
        mpfr_div(delta.raw(), fdiff.raw(), fden.raw(), MPFR_RNDN);
        long e = -mpfr_get_exp(delta.raw());
        if (e < 6) {
            mpfr_log1p(out, delta.raw(), MPFR_RNDN);
            return;
        }
        int terms = static_cast<int>((wp + 20) / e) + 1;
        if (terms > kMaxSeries) terms = kMaxSeries;
        mpfr_set(horner.raw(), inv[static_cast<std::size_t>(terms)].raw(), MPFR_RNDN);
        for (int j = terms - 1; j >= 1; --j) {
            mpfr_mul(horner.raw(), horner.raw(), delta.raw(), MPFR_RNDN);
            mpfr_sub(horner.raw(), inv[static_cast<std::size_t>(j)].raw(), horner.raw(),
                     MPFR_RNDN);
        }
        mpfr_mul(out, horner.raw(), delta.raw(), MPFR_RNDN);
    }
};

/// The ln-scale constant carried by the k = 0 summation set: the n = 0 value
/// of the term set, corrected for blocks with a leading zero. Canonical
/// expansions strip leading zeros, so for such blocks the initial node's
/// zero term never completes an occurrence and ln(v(w)/(v(w)+1)) must be
/// taken back out; for all-zero blocks that correction is zero by the
/// zero-argument convention and the plain n = 0 value already carries the
/// sign-flipped branches' zero terms.
inline void k0_zero_term(const TermSet& ts, mpfr_prec_t prec, mpfr_t out) {
    TermSetEvaluator ev0(ts, prec);
    mpz_class zero = 0;
    ev0.ln_value(zero.get_mpz_t(), out);
    if (ts.block.leading_zero()) {
        mpz_class v = ts.block.value();
        if (v > 0) {
            Real t(prec + 32), u(prec + 32);
            mpz_class vp1 = v + 1;
            mpfr_set_z(t.raw(), v.get_mpz_t(), MPFR_RNDN);
            mpfr_set_z(u.raw(), vp1.get_mpz_t(), MPFR_RNDN);
            mpfr_div(t.raw(), t.raw(), u.raw(), MPFR_RNDN);
            mpfr_log(t.raw(), t.raw(), MPFR_RNDN);
            mpfr_sub(out, out, t.raw(), MPFR_RNDN);
        }
    }
}

}  // namespace detail

/// Rounding-error part of a radius: terms * 4 ulp of the largest magnitude
/// involved (never less than 1).
inline Real rounding_radius(mpfr_prec_t prec, unsigned long terms, const Real& max_abs,
                            const Real& estimate) {
    Real m(prec);
    mpfr_set_ui(m.raw(), 1, MPFR_RNDU);
    if (mpfr_cmpabs(max_abs.raw(), m.raw()) > 0) mpfr_abs(m.raw(), max_abs.raw(), MPFR_RNDU);
    if (mpfr_cmpabs(estimate.raw(), m.raw()) > 0) mpfr_abs(m.raw(), estimate.raw(), MPFR_RNDU);
    Real r(prec);
    mpfr_set_ui(r.raw(), terms == 0 ? 1 : terms, MPFR_RNDU);
    mpfr_mul_ui(r.raw(), r.raw(), 4, MPFR_RNDU);
    mpfr_mul_2si(r.raw(), r.raw(), -static_cast<long>(prec), MPFR_RNDU);
    mpfr_mul(r.raw(), r.raw(), m.raw(), MPFR_RNDU);
    return r;
}

namespace detail {

/// Builds the count table for a tail request, retrying with a deeper table
/// until the certificate succeeds or the budget runs out.
template <class Fn>
auto with_tail_table(const DigitCounter& sys, unsigned long k, int depth, Fn&& fn) {
    int extra = 192;
    CountTable table(sys, k, depth + extra);
    for (;;) {
        try {
            return fn(table);
        } catch (const CertificationFailure&) {
            if (extra >= 4096) throw;
            extra *= 2;
            table.extend(depth + extra);
        }
    }
}

}  // namespace detail

/// Certified upper bound for sum n^-p over the exact-count set beyond
/// base^depth.
inline Real certified_tail(const DigitCounter& sys, unsigned long k, int depth, int p,
                           mpfr_prec_t prec = 128) {
    return detail::with_tail_table(sys, k, depth,
                                   [&](const CountTable& t) { return tail_bound(t, k, depth, p, prec); });
}

/// Partial sums of log_B b(n) over the exact-count set below base^depth plus
/// a certified correction for the omitted tail. The enclosure contains -1
/// whenever the derivation is sound.
inline ApproxValue identity_check(const Block& w, unsigned long k, int depth,
                                  const EvalOptions& opt = {}) {
    if (depth < 1) throw std::invalid_argument("identity_check: depth must be >= 1");
    const mpfr_prec_t prec = opt.precision;
    const mpfr_prec_t wp = prec + 32;
    const int B = w.base;

    TermSet ts = derive_term_set(w);
    DigitCounter sys = DigitCounter::block_counter(w);

    detail::SumOutcome part = detail::constrained_sum(
        sys, k, depth, 1, prec, opt.threads,
        [&] { return detail::LnBEval(ts, prec); });

    unsigned long extra_terms = 0;
    Real sum_ln(wp);
    mpfr_set(sum_ln.raw(), part.sum.raw(), MPFR_RNDN);
    if (k == 0) {
        Real t0(wp);
        detail::k0_zero_term(ts, prec, t0.raw());
        mpfr_add(sum_ln.raw(), sum_ln.raw(), t0.raw(), MPFR_RNDN);
        if (mpfr_cmpabs(t0.raw(), part.max_abs.raw()) > 0)
            mpfr_abs(part.max_abs.raw(), t0.raw(), MPFR_RNDN);
        extra_terms = 2;
    }

    // Tail of the ln-sum beyond base^depth: -(T1 + sum of residuals)/B^m with
    // T1 enclosed by refined counting and the residual part bounded by C_w
    // times the p = 2 tail.
    TailEnclosure t1{Real(prec), Real(prec), false, 0};
    Real t2(prec);
    detail::with_tail_table(sys, k, depth, [&](const CountTable& table) {
        t1 = first_order_tail(table, k, depth, tail_prefix_len(B, depth), prec);
        t2 = tail_bound(table, k, depth, 2, prec);
        return 0;
    });

    mpz_class bm = detail::pow_ui(B, static_cast<unsigned>(w.size()));
    Real cw = Real::from_q(residual_bound_constant(ts), prec, MPFR_RNDU);
    Real rho_tail = mul(cw, t2, MPFR_RNDU);

    // ln-units tail interval [lo_ln, hi_ln]
    Real hi_ln(wp), lo_ln(wp);
    mpfr_add(lo_ln.raw(), t1.hi.raw(), rho_tail.raw(), MPFR_RNDU);
    mpfr_div_z(lo_ln.raw(), lo_ln.raw(), bm.get_mpz_t(), MPFR_RNDU);
    mpfr_neg(lo_ln.raw(), lo_ln.raw(), MPFR_RNDN);  // exact
    mpfr_sub(hi_ln.raw(), rho_tail.raw(), t1.lo.raw(), MPFR_RNDU);
    mpfr_div_z(hi_ln.raw(), hi_ln.raw(), bm.get_mpz_t(), MPFR_RNDU);

    Real lnb_lo = ln_base(B, wp, MPFR_RNDD);

    ApproxValue out{Real(prec), Real(prec), false};
    {
        Real mid(wp), half(wp), lnb(wp);
        mpfr_add(mid.raw(), lo_ln.raw(), hi_ln.raw(), MPFR_RNDN);
        mpfr_div_2ui(mid.raw(), mid.raw(), 1, MPFR_RNDN);
        mpfr_add(mid.raw(), mid.raw(), sum_ln.raw(), MPFR_RNDN);
        lnb = ln_base(B, wp, MPFR_RNDN);
        mpfr_div(mid.raw(), mid.raw(), lnb.raw(), MPFR_RNDN);
        mpfr_set(out.estimate.raw(), mid.raw(), MPFR_RNDN);

        mpfr_sub(half.raw(), hi_ln.raw(), lo_ln.raw(), MPFR_RNDU);
        mpfr_div_2ui(half.raw(), half.raw(), 1, MPFR_RNDU);
        mpfr_div(half.raw(), half.raw(), lnb_lo.raw(), MPFR_RNDU);

        Real max_logb(prec);
        mpfr_div(max_logb.raw(), part.max_abs.raw(), lnb_lo.raw(), MPFR_RNDU);
        Real rr = rounding_radius(prec, part.terms + extra_terms + 8, max_logb, out.estimate);
        mpfr_add(out.radius.raw(), half.raw(), rr.raw(), MPFR_RNDU);
    }
    out.empty_set = (part.terms + extra_terms == 0) && t1.empty;
    return out;
}

/// Plain ascending partial sum of 1/n over the constraint, no tail.
inline Real harmonic_sum_bruteforce(const Constraint& c, unsigned long limit,
                                    const EvalOptions& opt = {}) {
    if (limit < 1) throw std::invalid_argument("harmonic_sum_bruteforce: limit must be >= 1");
    DigitCounter sys = c.counter();
    detail::SumOutcome s = detail::dense_sum(sys, c.k, limit, opt.precision, opt.threads,
                                             [&] { return detail::RecipEval(opt.precision); });
    Real out(opt.precision);
    mpfr_set(out.raw(), s.sum.raw(), MPFR_RNDN);
    return out;
}

/// Brute-force partial sum plus a counted tail: sound but wide. The tail is
/// taken from the largest power of the base not exceeding the cutoff, which
/// over-covers the gap between the cutoff and that power.
inline ApproxValue brute_sum_enclosure(const Constraint& c, unsigned long limit,
                                       const EvalOptions& opt = {}) {
    const mpfr_prec_t prec = opt.precision;
    if (limit < static_cast<unsigned long>(c.base))
        throw std::invalid_argument("brute_sum_enclosure: limit must be at least the base");
    DigitCounter sys = c.counter();
    detail::SumOutcome s = detail::dense_sum(sys, c.k, limit, prec, opt.threads,
                                             [&] { return detail::RecipEval(prec); });
    int dstar = 1;
    {
        mpz_class p = sys.base;
        while (p * sys.base <= limit) {
            p *= sys.base;
            ++dstar;
        }
    }
    Real tail = certified_tail(sys, c.k, dstar, 1, prec);

    ApproxValue out{Real(prec), Real(prec), false};
    Real half(prec);
    mpfr_div_2ui(half.raw(), tail.raw(), 1, MPFR_RNDU);
    mpfr_add(out.estimate.raw(), s.sum.raw(), half.raw(), MPFR_RNDN);
    Real rr = rounding_radius(prec, s.terms + 2, s.max_abs, out.estimate);
    mpfr_add(out.radius.raw(), half.raw(), rr.raw(), MPFR_RNDU);
    out.empty_set = (s.terms == 0) && tail.is_zero();
    return out;
}

/// Accelerated sum: B^|w| ln B minus the residual sum over the constrained
/// set below base^depth, with the residual tail certified through the p = 2
/// counted bound. Encloses the true value of the constrained harmonic sum.
inline ApproxValue harmonic_sum_accelerated(const Block& w, unsigned long k, int depth,
                                            const EvalOptions& opt = {}) {
    if (depth < 1) throw std::invalid_argument("harmonic_sum_accelerated: depth must be >= 1");
    const mpfr_prec_t prec = opt.precision;
    const mpfr_prec_t wp = prec + 32;
    const int B = w.base;

    TermSet ts = derive_term_set(w);
    DigitCounter sys = DigitCounter::block_counter(w);
    mpz_class bm = detail::pow_ui(B, static_cast<unsigned>(w.size()));

    detail::SumOutcome part = detail::constrained_sum(
        sys, k, depth, 1, prec, opt.threads,
        [&] { return detail::RhoEval(ts, prec); });

    Real base_ln(wp);
    {
        Real lnb = ln_base(B, wp, MPFR_RNDN);
        mpfr_mul_z(base_ln.raw(), lnb.raw(), bm.get_mpz_t(), MPFR_RNDN);
        if (k == 0) {
            // shift the constant by B^|w| times the k = 0 zero term
            Real t0(wp);
            detail::k0_zero_term(ts, prec, t0.raw());
            mpfr_mul_z(t0.raw(), t0.raw(), bm.get_mpz_t(), MPFR_RNDN);
            mpfr_add(base_ln.raw(), base_ln.raw(), t0.raw(), MPFR_RNDN);
        }
    }

    Real t2 = certified_tail(sys, k, depth, 2, prec);
    Real cw = Real::from_q(residual_bound_constant(ts), prec, MPFR_RNDU);
    Real rho_tail = mul(cw, t2, MPFR_RNDU);

    ApproxValue out{Real(prec), Real(prec), false};
    Real est(wp);
    mpfr_sub(est.raw(), base_ln.raw(), part.sum.raw(), MPFR_RNDN);
    mpfr_set(out.estimate.raw(), est.raw(), MPFR_RNDN);
    Real rr = rounding_radius(prec, part.terms + 8, part.max_abs, out.estimate);
    mpfr_add(out.radius.raw(), rho_tail.raw(), rr.raw(), MPFR_RNDU);
    out.empty_set = (part.terms == 0) && t2.is_zero() && out.estimate.is_zero();
    return out;
}

/// Digit-sum identity partial sum below base^depth; the enclosure contains
/// -ln(base) for every attainable k >= 1. The k = 0 set is empty and is
/// returned flagged.
inline ApproxValue digitsum_identity_check(int base, unsigned long k, int depth,
                                           const EvalOptions& opt = {}) {
    require_base(base);
    if (depth < 1) throw std::invalid_argument("digitsum_identity_check: depth must be >= 1");
    const mpfr_prec_t prec = opt.precision;
    if (k == 0) return ApproxValue{Real(prec), Real(prec), true};

    DigitCounter sys = DigitCounter::digit_sum_counter(base);
    detail::SumOutcome part = detail::constrained_sum(
        sys, k, depth, 1, prec, opt.threads,
        [&] { return detail::DigitSumIdentityEval(base, prec); });

    Real t1 = certified_tail(sys, k, depth, 1, prec);
    Real tail(prec);
    mpfr_mul_ui(tail.raw(), t1.raw(), static_cast<unsigned long>(base), MPFR_RNDU);

    ApproxValue out{Real(prec), Real(prec), false};
    mpfr_set(out.estimate.raw(), part.sum.raw(), MPFR_RNDN);
    Real rr = rounding_radius(prec, part.terms + 2, part.max_abs, out.estimate);
    mpfr_add(out.radius.raw(), tail.raw(), rr.raw(), MPFR_RNDU);
    out.empty_set = (part.terms == 0) && tail.is_zero();
    return out;
}

/// Dense sum to the cutoff, exact depth-first continuation to a digit
/// boundary deep enough for a small counted tail, then the certified tail.
inline ApproxValue digitsum_sum_enclosure(int base, unsigned long k, unsigned long limit,
                                          const EvalOptions& opt = {}) {
    require_base(base);
    if (limit < 1) throw std::invalid_argument("digitsum_sum_enclosure: limit must be >= 1");
    const mpfr_prec_t prec = opt.precision;
    const mpfr_prec_t wp = prec + 32;
    if (k == 0) return ApproxValue{Real(prec), Real(prec), true};

    DigitCounter sys = DigitCounter::digit_sum_counter(base);
    detail::SumOutcome dense = detail::dense_sum(sys, k, limit, prec, opt.threads,
                                                 [&] { return detail::RecipEval(prec); });

    const int d0 = static_cast<int>(expand(mpz_class(limit), base).digits.size());
    mpz_class floor_val(limit);

    Real gap(wp), gap_max(wp);
    unsigned long gap_terms = 0;
    {
        detail::SumOutcome g = detail::constrained_sum(
            sys, k, d0, d0, prec, opt.threads, [&] { return detail::RecipEval(prec); },
            &floor_val);
        mpfr_add(gap.raw(), gap.raw(), g.sum.raw(), MPFR_RNDN);
        gap_max = g.max_abs;
        gap_terms = g.terms;
    }

    // extend whole digit rows until the counted tail is small
    int d2 = d0;
    Real tail(prec);
    for (;;) {
        tail = certified_tail(sys, k, d2, 1, prec);
        if (mpfr_cmp_d(tail.raw(), 5e-3) <= 0 || d2 >= d0 + 12) break;
        ++d2;
        detail::SumOutcome row = detail::constrained_sum(
            sys, k, d2, d2, prec, opt.threads, [&] { return detail::RecipEval(prec); });
        mpfr_add(gap.raw(), gap.raw(), row.sum.raw(), MPFR_RNDN);
        if (mpfr_cmpabs(row.max_abs.raw(), gap_max.raw()) > 0) gap_max = row.max_abs;
        gap_terms += row.terms;
    }

    ApproxValue out{Real(prec), Real(prec), false};
    Real half(prec);
    mpfr_div_2ui(half.raw(), tail.raw(), 1, MPFR_RNDU);
    Real est(wp);
    mpfr_add(est.raw(), dense.sum.raw(), gap.raw(), MPFR_RNDN);
    mpfr_add(est.raw(), est.raw(), half.raw(), MPFR_RNDN);
    mpfr_set(out.estimate.raw(), est.raw(), MPFR_RNDN);
    Real mx = max_val(dense.max_abs, gap_max);
    Real rr = rounding_radius(prec, dense.terms + gap_terms + 4, mx, out.estimate);
    mpfr_add(out.radius.raw(), half.raw(), rr.raw(), MPFR_RNDU);
    out.empty_set = (dense.terms + gap_terms == 0) && tail.is_zero();
    return out;
}

enum class SumMethod { brute, accelerated };

struct TableRequest {
    Constraint::Kind kind = Constraint::Kind::block;
    int base = 2;
    std::optional<Block> block;
    unsigned long k_lo = 0;
    unsigned long k_hi = 0;
    SumMethod method = SumMethod::accelerated;
    int depth = 0;             // accelerated; 0 means default for the base
    unsigned long limit = 1000000;  // brute cutoff
};

/// Limit constant for a constraint family: B^|w| ln B for blocks,
/// 2 ln B / (B - 1) for digit sums.
inline Real family_limit_value(Constraint::Kind kind, int base,
                               const std::optional<Block>& block, mpfr_prec_t prec) {
    Real lnb = ln_base(base, prec + 16, MPFR_RNDN);
    Real out(prec);
    if (kind == Constraint::Kind::block) {
        mpz_class bm = detail::pow_ui(base, static_cast<unsigned>(block->size()));
        Real t(prec + 16);
        mpfr_mul_z(t.raw(), lnb.raw(), bm.get_mpz_t(), MPFR_RNDN);
        mpfr_set(out.raw(), t.raw(), MPFR_RNDN);
    } else {
        Real t(prec + 16);
        mpfr_mul_2ui(t.raw(), lnb.raw(), 1, MPFR_RNDN);
        mpfr_div_ui(t.raw(), t.raw(), static_cast<unsigned long>(base - 1), MPFR_RNDN);
        mpfr_set(out.raw(), t.raw(), MPFR_RNDN);
    }
    return out;
}

/// One row per k. Block families use the requested method; digit-sum
/// families use brute force plus counted tails, except base 2 where the
/// digit-sum count equals the occurrence count of the block "1" and rows are
/// produced by the identical accelerated path.
inline std::vector<LimitRow> limit_table(const TableRequest& req, const EvalOptions& opt = {}) {
    if (req.k_hi < req.k_lo) throw std::invalid_argument("limit_table: bad k range");
    const mpfr_prec_t prec = opt.precision;
    int depth = req.depth > 0 ? req.depth : default_depth(req.base);

    std::vector<LimitRow> rows;
    Real limit = family_limit_value(req.kind, req.base, req.block, prec);
    for (unsigned long k = req.k_lo; k <= req.k_hi; ++k) {
        ApproxValue v{Real(prec), Real(prec), false};
        if (req.kind == Constraint::Kind::block) {
            if (req.method == SumMethod::accelerated)
                v = harmonic_sum_accelerated(*req.block, k, depth, opt);
            else
                v = brute_sum_enclosure(Constraint::block_count(*req.block, k), req.limit, opt);
        } else if (req.base == 2) {
            v = harmonic_sum_accelerated(Block(2, {1}), k, depth, opt);
        } else {
            v = digitsum_sum_enclosure(req.base, k, req.limit, opt);
        }
        LimitRow row{k, std::move(v), limit, Real(prec)};
        Real d(prec);
        mpfr_sub(d.raw(), row.sum.estimate.raw(), limit.raw(), MPFR_RNDU);
        mpfr_abs(d.raw(), d.raw(), MPFR_RNDU);
        mpfr_add(row.certified_distance.raw(), d.raw(), row.sum.radius.raw(), MPFR_RNDU);
        rows.push_back(std::move(row));
    }
    return rows;
}

/// True when the interval [estimate - radius, estimate + radius] contains x.
inline bool encloses(const ApproxValue& v, const Real& x) {
    Real d(combined_prec(v.estimate, x));
    mpfr_sub(d.raw(), v.estimate.raw(), x.raw(), MPFR_RNDN);
    mpfr_abs(d.raw(), d.raw(), MPFR_RNDN);
    return mpfr_cmp(d.raw(), v.radius.raw()) <= 0;
}

/// True when two enclosures intersect.
inline bool enclosures_intersect(const ApproxValue& a, const ApproxValue& b) {
    Real d(combined_prec(a.estimate, b.estimate));
    mpfr_sub(d.raw(), a.estimate.raw(), b.estimate.raw(), MPFR_RNDN);
    mpfr_abs(d.raw(), d.raw(), MPFR_RNDN);
    Real s = add(a.radius, b.radius, MPFR_RNDU);
    // tiny slack for the midpoint subtraction rounding
    mpfr_nextabove(s.raw());
    mpfr_nextabove(s.raw());
    return mpfr_cmp(d.raw(), s.raw()) <= 0;
}

}  // namespace kempner
