#pragma once

#include "kempner/numeral.hpp"
#include "kempner/real.hpp"

#include <deque>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace kempner {

/// Thrown when a tail bound cannot be certified within the available table
/// depth. Callers retry with a deeper table or give up and report it.
struct CertificationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Exact counts N(k, d) of d-digit integers whose counter value is exactly k,
/// for 0 <= k <= max_k, with an overflow bucket per d keeping row totals
/// checkable: sum_k N(k, d) + overflow(d) = (B-1) * B^(d-1).
class CountTable {
public:
    CountTable(DigitCounter sys, unsigned long max_k, int max_d)
        : sys_(std::move(sys)), max_k_(max_k) {
        if (max_d < 1) throw std::invalid_argument("count table needs max_d >= 1");
        dp_.assign(static_cast<std::size_t>(sys_.states) * (max_k_ + 2), 0);
        extend(max_d);
    }

    const DigitCounter& system() const { return sys_; }
    unsigned long max_k() const { return max_k_; }
    int max_d() const { return max_d_; }

    const mpz_class& at(unsigned long k, int d) const {
        if (k > max_k_ || d < 1 || d > max_d_) throw std::out_of_range("count table index");
        return counts_[static_cast<std::size_t>(d - 1) * (max_k_ + 1) + k];
    }

    const mpz_class& overflow(int d) const {
        if (d < 1 || d > max_d_) throw std::out_of_range("count table index");
        return over_[static_cast<std::size_t>(d - 1)];
    }

    mpz_class row_total(int d) const {
        mpz_class s = overflow(d);
        for (unsigned long k = 0; k <= max_k_; ++k) s += at(k, d);
        return s;
    }

    /// Grows the table in place; the DP layer is kept between calls.
    void extend(int new_max_d) {
        while (max_d_ < new_max_d) step_row();
    }

    void to_csv(std::ostream& os) const {
        os << "k,d,count\n";
        for (unsigned long k = 0; k <= max_k_; ++k)
            for (int d = 1; d <= max_d_; ++d)
                os << k << "," << d << "," << at(k, d).get_str() << "\n";
    }

private:
    // dp_[q * (max_k_+2) + c] counts length-d prefixes in state q with counter
    // value c; slot max_k_+1 holds everything past max_k_.
    void step_row() {
        const int B = sys_.base;
        const std::size_t W = max_k_ + 2;
        std::vector<mpz_class> nxt(static_cast<std::size_t>(sys_.states) * W, 0);
        if (max_d_ == 0) {
            for (int j = 1; j < B; ++j) {
                std::size_t idx = static_cast<std::size_t>(j);
                unsigned long c = sys_.add[idx];
                std::size_t slot = c > max_k_ ? max_k_ + 1 : c;
                nxt[static_cast<std::size_t>(sys_.next[idx]) * W + slot] += 1;
            }
        } else {
            for (int q = 0; q < sys_.states; ++q) {
                for (std::size_t c = 0; c < W; ++c) {
                    const mpz_class& v = dp_[static_cast<std::size_t>(q) * W + c];
                    if (v == 0) continue;
                    for (int j = 0; j < B; ++j) {
                        std::size_t idx = static_cast<std::size_t>(q) * B + j;
                        std::size_t c2 = c;
                        if (c2 <= max_k_) {
                            c2 += sys_.add[idx];
                            if (c2 > max_k_) c2 = max_k_ + 1;
                        }
                        nxt[static_cast<std::size_t>(sys_.next[idx]) * W + c2] += v;
                    }
                }
            }
        }
        dp_.swap(nxt);
        ++max_d_;
        for (unsigned long k = 0; k <= max_k_; ++k) {
            mpz_class s = 0;
            for (int q = 0; q < sys_.states; ++q) s += dp_[static_cast<std::size_t>(q) * W + k];
            counts_.push_back(std::move(s));
        }
        mpz_class o = 0;
        for (int q = 0; q < sys_.states; ++q) o += dp_[static_cast<std::size_t>(q) * W + max_k_ + 1];
        over_.push_back(std::move(o));
    }

    DigitCounter sys_;
    unsigned long max_k_;
    int max_d_ = 0;
    std::vector<mpz_class> counts_;
    std::vector<mpz_class> over_;
    std::vector<mpz_class> dp_;
};

inline CountTable build_count_table(const DigitCounter& sys, unsigned long max_k, int max_d) {
    return CountTable(sys, max_k, max_d);
}

inline CountTable block_count_table(const Block& w, unsigned long max_k, int max_d) {
    return CountTable(DigitCounter::block_counter(w), max_k, max_d);
}

inline CountTable digitsum_count_table(int base, unsigned long max_k, int max_d) {
    return CountTable(DigitCounter::digit_sum_counter(base), max_k, max_d);
}

/// Row index that certifies emptiness: any reachable exact count k has a
/// witness no longer than the product-state count, and a positive row stays
/// positive (some digit never adds to the count), so a zero row here proves
/// the whole tail is zero.
inline int emptiness_horizon(const DigitCounter& sys, unsigned long k) {
    unsigned long h = static_cast<unsigned long>(sys.states) * (k + 1) + 2;
    return static_cast<int>(h);
}

namespace detail {

// Window certificate over the coarse row bounds u_d = N(k,d) * B^(-p(d-1)):
// eight consecutive exact ratios below 19/20, closed by a geometric tail at
// the observed maximum ratio. Shared by tail_bound and first_order_tail.
struct TailScan {
    bool satisfied = false;
    int stop_d = 0;              // last accumulated row
    mpq_class close_ratio;       // max ratio over the final window
};

}  // namespace detail

/// Upper bound for sum n^-p over integers with more than `depth` digits and
/// counter value exactly k, p in {1, 2}. The row scan must certify geometric
/// decay within the table; otherwise CertificationFailure is thrown.
inline Real tail_bound(const CountTable& table, unsigned long k, int depth, int p,
                       mpfr_prec_t prec = 128) {
    if (p != 1 && p != 2) throw std::invalid_argument("tail_bound: p must be 1 or 2");
    if (depth < 1) throw std::invalid_argument("tail_bound: depth must be >= 1");
    if (k > table.max_k()) throw std::invalid_argument("tail_bound: k beyond table");
    const int B = table.system().base;

    const int H = emptiness_horizon(table.system(), k);
    int empty_check = depth + 1 > H ? depth + 1 : H;
    if (empty_check > table.max_d())
        throw CertificationFailure("table too shallow for emptiness check");
    if (table.at(k, empty_check) == 0) return Real(prec);  // certified empty tail

    mpz_class bp;
    mpz_ui_pow_ui(bp.get_mpz_t(), static_cast<unsigned long>(B), static_cast<unsigned long>(p));

    // fpow tracks an upper rounding of B^(-p(d-1))
    Real fpow(prec), bound(prec), udev(prec), best(prec), tmp(prec);
    {
        mpz_class b0;
        mpz_pow_ui(b0.get_mpz_t(), bp.get_mpz_t(), static_cast<unsigned long>(depth));
        mpfr_set_z(tmp.raw(), b0.get_mpz_t(), MPFR_RNDD);
        mpfr_ui_div(fpow.raw(), 1, tmp.raw(), MPFR_RNDU);
    }

    const mpq_class limit_ratio(19, 20);
    std::deque<mpq_class> window;
    bool have_best = false;
    bool seen_pos = false;

    for (int d = depth + 1; d <= table.max_d(); ++d) {
        const mpz_class& nd = table.at(k, d);
        mpfr_set_z(udev.raw(), nd.get_mpz_t(), MPFR_RNDU);
        mpfr_mul(udev.raw(), udev.raw(), fpow.raw(), MPFR_RNDU);
        mpfr_add(bound.raw(), bound.raw(), udev.raw(), MPFR_RNDU);

        if (nd > 0) {
            seen_pos = true;
            if (d + 1 > table.max_d()) break;
            mpq_class ratio(table.at(k, d + 1), nd * bp);
            ratio.canonicalize();
            window.push_back(ratio);
            if (window.size() > 8) window.pop_front();
            if (window.size() == 8) {
                mpq_class r = window.front();
                bool ok = true;
                for (const mpq_class& q : window) {
                    if (q > limit_ratio) { ok = false; break; }
                    if (q > r) r = q;
                }
                if (ok) {
                    mpq_class geo = r / (1 - r);
                    Real closure(prec);
                    mpfr_set_q(closure.raw(), geo.get_mpq_t(), MPFR_RNDU);
                    mpfr_mul(closure.raw(), closure.raw(), udev.raw(), MPFR_RNDU);
                    Real cand = add(bound, closure, MPFR_RNDU);
                    if (!have_best || cand < best) best = cand;
                    have_best = true;
                    // keep tightening until the closure is negligible
                    mpfr_mul_2si(tmp.raw(), bound.raw(), -24, MPFR_RNDU);
                    Real floor_tol(prec);
                    mpfr_set_ui_2exp(floor_tol.raw(), 1, -(prec / 2), MPFR_RNDU);
                    mpfr_add(tmp.raw(), tmp.raw(), floor_tol.raw(), MPFR_RNDU);
                    if (closure < tmp) return best;
                }
            }
        } else if (seen_pos) {
            throw std::logic_error("count row returned to zero after being positive");
        }
        mpfr_div_z(fpow.raw(), fpow.raw(), bp.get_mpz_t(), MPFR_RNDU);
    }
    if (have_best) return best;
    throw CertificationFailure("no geometric domination within table budget (" +
                               table.system().label + ")");
}

struct TailEnclosure {
    Real lo;
    Real hi;
    bool empty = false;
    int rows = 0;
};

/// Two-sided enclosure of sum 1/n over integers with more than `depth`
/// digits and counter value exactly k. Rows are refined by length-prefix_len
/// leading-digit groups, so the enclosure width is roughly B^(1-prefix_len)
/// relative; far rows and the geometric closure fall back on coarse bounds.
inline TailEnclosure first_order_tail(const CountTable& table, unsigned long k, int depth,
                                      int prefix_len, mpfr_prec_t prec = 128) {
    if (depth < 1) throw std::invalid_argument("first_order_tail: depth must be >= 1");
    if (k > table.max_k()) throw std::invalid_argument("first_order_tail: k beyond table");
    const DigitCounter& sys = table.system();
    const int B = sys.base;

    TailEnclosure out{Real(prec), Real(prec), false, 0};

    const int H = emptiness_horizon(sys, k);
    int empty_check = depth + 1 > H ? depth + 1 : H;
    if (empty_check > table.max_d())
        throw CertificationFailure("table too shallow for emptiness check");
    if (table.at(k, empty_check) == 0) {
        out.empty = true;
        return out;
    }

    int pl = prefix_len;
    if (pl < 1) pl = 1;
    if (pl > depth) pl = depth;

    // All length-pl prefixes (leading digit nonzero) that can still reach
    // exactly k, with their automaton state and running count.
    struct Prefix {
        unsigned long value;
        int state;
        unsigned long count;
        Real inv_hi;  // upper rounding of 1/value
        Real inv_lo;  // lower rounding of 1/(value+1)
    };
    std::vector<Prefix> prefixes;
    {
        struct Frame {
            unsigned long value;
            int state;
            unsigned long count;
            int len;
        };
        std::vector<Frame> stack;
        for (int j = B - 1; j >= 1; --j) {
            std::size_t idx = static_cast<std::size_t>(j);
            unsigned long c = sys.add[idx];
            if (c <= k) stack.push_back({static_cast<unsigned long>(j), sys.next[idx], c, 1});
        }
        Real tmp(prec);
        while (!stack.empty()) {
            Frame f = stack.back();
            stack.pop_back();
            if (f.len == pl) {
                Prefix p{f.value, f.state, f.count, Real(prec), Real(prec)};
                mpfr_set_ui(tmp.raw(), f.value, MPFR_RNDD);
                mpfr_ui_div(p.inv_hi.raw(), 1, tmp.raw(), MPFR_RNDU);
                mpfr_set_ui(tmp.raw(), f.value + 1, MPFR_RNDU);
                mpfr_ui_div(p.inv_lo.raw(), 1, tmp.raw(), MPFR_RNDD);
                prefixes.push_back(std::move(p));
                continue;
            }
            for (int j = B - 1; j >= 0; --j) {
                std::size_t idx = static_cast<std::size_t>(f.state) * B + j;
                unsigned long c2 = f.count + sys.add[idx];
                if (c2 <= k)
                    stack.push_back({f.value * B + j, sys.next[idx], c2, f.len + 1});
            }
        }
    }

    // Suffix counts S[x][q * (k+1) + j]: strings of length x from state q
    // adding exactly j. Layers are built on demand.
    const std::size_t SW = k + 1;
    std::vector<std::vector<mpz_class>> suffix;
    suffix.emplace_back(static_cast<std::size_t>(sys.states) * SW, 0);
    for (int q = 0; q < sys.states; ++q) suffix[0][static_cast<std::size_t>(q) * SW] = 1;
    auto ensure_layer = [&](std::size_t x) {
        while (suffix.size() <= x) {
            const std::vector<mpz_class>& prev = suffix.back();
            std::vector<mpz_class> layer(static_cast<std::size_t>(sys.states) * SW, 0);
            for (int q = 0; q < sys.states; ++q) {
                for (int j = 0; j < B; ++j) {
                    std::size_t idx = static_cast<std::size_t>(q) * B + j;
                    unsigned long a = sys.add[idx];
                    int q2 = sys.next[idx];
                    for (unsigned long c = a; c <= k; ++c)
                        layer[static_cast<std::size_t>(q) * SW + c] +=
                            prev[static_cast<std::size_t>(q2) * SW + (c - a)];
                }
            }
            suffix.push_back(std::move(layer));
        }
    };

    const int refine_cap = 1024;
    const mpq_class limit_ratio(19, 20);
    mpz_class bz(B);

    // powx_hi/lo bracket B^(-x) for the current row, fpow_hi brackets
    // B^(-(d-1)) for the coarse certificate rows.
    Real powx_hi(prec), powx_lo(prec), fpow_hi(prec), fpow_lo(prec);
    Real row_hi(prec), row_lo(prec), cell(prec), tmp(prec), best_closure(prec);
    {
        mpz_class b0;
        mpz_ui_pow_ui(b0.get_mpz_t(), static_cast<unsigned long>(B),
                      static_cast<unsigned long>(depth + 1 - pl));
        mpfr_set_z(tmp.raw(), b0.get_mpz_t(), MPFR_RNDD);
        mpfr_ui_div(powx_hi.raw(), 1, tmp.raw(), MPFR_RNDU);
        mpfr_set_z(tmp.raw(), b0.get_mpz_t(), MPFR_RNDU);
        mpfr_ui_div(powx_lo.raw(), 1, tmp.raw(), MPFR_RNDD);
        mpz_ui_pow_ui(b0.get_mpz_t(), static_cast<unsigned long>(B),
                      static_cast<unsigned long>(depth));
        mpfr_set_z(tmp.raw(), b0.get_mpz_t(), MPFR_RNDD);
        mpfr_ui_div(fpow_hi.raw(), 1, tmp.raw(), MPFR_RNDU);
        mpfr_set_z(tmp.raw(), b0.get_mpz_t(), MPFR_RNDU);
        mpfr_ui_div(fpow_lo.raw(), 1, tmp.raw(), MPFR_RNDD);
    }

    std::deque<mpq_class> window;
    bool have_closure = false;
    bool seen_pos = false;

    for (int d = depth + 1; d <= table.max_d(); ++d) {
        const mpz_class& nd = table.at(k, d);
        if (nd > 0 || seen_pos) {
            if (d - depth <= refine_cap) {
                std::size_t x = static_cast<std::size_t>(d - pl);
                ensure_layer(x);
                const std::vector<mpz_class>& layer = suffix[x];
                row_hi.set_zero();
                row_lo.set_zero();
                for (const Prefix& p : prefixes) {
                    const mpz_class& cnt =
                        layer[static_cast<std::size_t>(p.state) * SW + (k - p.count)];
                    if (cnt == 0) continue;
                    mpfr_set_z(cell.raw(), cnt.get_mpz_t(), MPFR_RNDU);
                    mpfr_mul(cell.raw(), cell.raw(), p.inv_hi.raw(), MPFR_RNDU);
                    mpfr_mul(cell.raw(), cell.raw(), powx_hi.raw(), MPFR_RNDU);
                    mpfr_add(row_hi.raw(), row_hi.raw(), cell.raw(), MPFR_RNDU);
                    mpfr_set_z(cell.raw(), cnt.get_mpz_t(), MPFR_RNDD);
                    mpfr_mul(cell.raw(), cell.raw(), p.inv_lo.raw(), MPFR_RNDD);
                    mpfr_mul(cell.raw(), cell.raw(), powx_lo.raw(), MPFR_RNDD);
                    mpfr_add(row_lo.raw(), row_lo.raw(), cell.raw(), MPFR_RNDD);
                }
            } else {
                // coarse brackets: every d-digit n lies in [B^(d-1), B^d)
                mpfr_set_z(row_hi.raw(), nd.get_mpz_t(), MPFR_RNDU);
                mpfr_mul(row_hi.raw(), row_hi.raw(), fpow_hi.raw(), MPFR_RNDU);
                mpfr_set_z(row_lo.raw(), nd.get_mpz_t(), MPFR_RNDD);
                mpfr_mul(row_lo.raw(), row_lo.raw(), fpow_lo.raw(), MPFR_RNDD);
                mpfr_div_z(row_lo.raw(), row_lo.raw(), bz.get_mpz_t(), MPFR_RNDD);
            }
            mpfr_add(out.hi.raw(), out.hi.raw(), row_hi.raw(), MPFR_RNDU);
            mpfr_add(out.lo.raw(), out.lo.raw(), row_lo.raw(), MPFR_RNDD);
            ++out.rows;
        }

        if (nd > 0) {
            seen_pos = true;
            if (d + 1 > table.max_d()) break;
            mpq_class ratio(table.at(k, d + 1), nd * bz);
            ratio.canonicalize();
            window.push_back(ratio);
            if (window.size() > 8) window.pop_front();
            if (window.size() == 8) {
                mpq_class r = window.front();
                bool ok = true;
                for (const mpq_class& q : window) {
                    if (q > limit_ratio) { ok = false; break; }
                    if (q > r) r = q;
                }
                if (ok) {
                    // closure from the coarse row bound, which dominates
                    mpfr_set_z(cell.raw(), nd.get_mpz_t(), MPFR_RNDU);
                    mpfr_mul(cell.raw(), cell.raw(), fpow_hi.raw(), MPFR_RNDU);
                    mpq_class geo = r / (1 - r);
                    mpfr_set_q(tmp.raw(), geo.get_mpq_t(), MPFR_RNDU);
                    mpfr_mul(cell.raw(), cell.raw(), tmp.raw(), MPFR_RNDU);
                    best_closure = cell;
                    have_closure = true;
                    mpfr_mul_2si(tmp.raw(), out.hi.raw(), -24, MPFR_RNDU);
                    Real floor_tol(prec);
                    mpfr_set_ui_2exp(floor_tol.raw(), 1, -(prec / 2), MPFR_RNDU);
                    mpfr_add(tmp.raw(), tmp.raw(), floor_tol.raw(), MPFR_RNDU);
                    if (best_closure < tmp) break;
                }
            }
        }

        mpfr_div_z(powx_hi.raw(), powx_hi.raw(), bz.get_mpz_t(), MPFR_RNDU);
        mpfr_div_z(powx_lo.raw(), powx_lo.raw(), bz.get_mpz_t(), MPFR_RNDD);
        mpfr_div_z(fpow_hi.raw(), fpow_hi.raw(), bz.get_mpz_t(), MPFR_RNDU);
        mpfr_div_z(fpow_lo.raw(), fpow_lo.raw(), bz.get_mpz_t(), MPFR_RNDD);
    }

    if (!have_closure)
        throw CertificationFailure("no geometric domination within table budget (" +
                                   sys.label + ")");
    mpfr_add(out.hi.raw(), out.hi.raw(), best_closure.raw(), MPFR_RNDU);
    return out;
}

}  // namespace kempner
