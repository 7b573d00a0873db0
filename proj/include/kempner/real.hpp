#pragma once

#include <mpfr.h>
#include <gmpxx.h>

#include <string>
#include <utility>

namespace kempner {

/// RAII wrapper around an mpfr_t value. Precision is fixed at construction
/// and preserved by copies. Performance-critical kernels operate on raw
/// mpfr_t handles; this type stores and transports results.
class Real {
public:
    explicit Real(mpfr_prec_t prec = 128) {
        mpfr_init2(v_, prec);
        mpfr_set_zero(v_, 1);
    }

    Real(const Real& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }

    Real(Real&& o) noexcept {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_swap(v_, o.v_);
    }

    Real& operator=(const Real& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }

    Real& operator=(Real&& o) noexcept {
        if (this != &o) mpfr_swap(v_, o.v_);
        return *this;
    }

    ~Real() { mpfr_clear(v_); }

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }
    mpfr_prec_t prec() const { return mpfr_get_prec(v_); }

    void set_zero() { mpfr_set_zero(v_, 1); }
    void set_ui(unsigned long u) { mpfr_set_ui(v_, u, MPFR_RNDN); }
    void set_si(long s) { mpfr_set_si(v_, s, MPFR_RNDN); }
    void set_d(double d) { mpfr_set_d(v_, d, MPFR_RNDN); }
    void set_z(const mpz_class& z, mpfr_rnd_t rnd = MPFR_RNDN) { mpfr_set_z(v_, z.get_mpz_t(), rnd); }
    void set_q(const mpq_class& q, mpfr_rnd_t rnd = MPFR_RNDN) { mpfr_set_q(v_, q.get_mpq_t(), rnd); }

    double get_d() const { return mpfr_get_d(v_, MPFR_RNDN); }
    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }

    /// Decimal rendering with a fixed number of significant digits
    /// (deterministic for a given value and digit count).
    std::string str(int digits) const {
        char* s = nullptr;
        mpfr_asprintf(&s, "%.*Rg", digits, v_);
        std::string out(s);
        mpfr_free_str(s);
        return out;
    }

    static Real from_ui(unsigned long u, mpfr_prec_t prec) {
        Real r(prec);
        r.set_ui(u);
        return r;
    }
    static Real from_si(long s, mpfr_prec_t prec) {
        Real r(prec);
        r.set_si(s);
        return r;
    }
    static Real from_d(double d, mpfr_prec_t prec) {
        Real r(prec);
        r.set_d(d);
        return r;
    }
    static Real from_q(const mpq_class& q, mpfr_prec_t prec, mpfr_rnd_t rnd = MPFR_RNDN) {
        Real r(prec);
        r.set_q(q, rnd);
        return r;
    }

private:
    mpfr_t v_;
};

inline mpfr_prec_t combined_prec(const Real& a, const Real& b) {
    return a.prec() > b.prec() ? a.prec() : b.prec();
}

inline Real add(const Real& a, const Real& b, mpfr_rnd_t rnd = MPFR_RNDN) {
    Real r(combined_prec(a, b));
    mpfr_add(r.raw(), a.raw(), b.raw(), rnd);
    return r;
}
inline Real sub(const Real& a, const Real& b, mpfr_rnd_t rnd = MPFR_RNDN) {
    Real r(combined_prec(a, b));
    mpfr_sub(r.raw(), a.raw(), b.raw(), rnd);
    return r;
}
inline Real mul(const Real& a, const Real& b, mpfr_rnd_t rnd = MPFR_RNDN) {
    Real r(combined_prec(a, b));
    mpfr_mul(r.raw(), a.raw(), b.raw(), rnd);
    return r;
}
inline Real div(const Real& a, const Real& b, mpfr_rnd_t rnd = MPFR_RNDN) {
    Real r(combined_prec(a, b));
    mpfr_div(r.raw(), a.raw(), b.raw(), rnd);
    return r;
}

inline Real operator+(const Real& a, const Real& b) { return add(a, b); }
inline Real operator-(const Real& a, const Real& b) { return sub(a, b); }
inline Real operator*(const Real& a, const Real& b) { return mul(a, b); }
inline Real operator/(const Real& a, const Real& b) { return div(a, b); }

inline Real operator-(const Real& a) {
    Real r(a.prec());
    mpfr_neg(r.raw(), a.raw(), MPFR_RNDN);
    return r;
}

inline Real abs_val(const Real& a) {
    Real r(a.prec());
    mpfr_abs(r.raw(), a.raw(), MPFR_RNDN);
    return r;
}

inline Real max_val(const Real& a, const Real& b) {
    Real r(combined_prec(a, b));
    mpfr_max(r.raw(), a.raw(), b.raw(), MPFR_RNDN);
    return r;
}

inline int cmp(const Real& a, const Real& b) { return mpfr_cmp(a.raw(), b.raw()); }
inline bool operator<(const Real& a, const Real& b) { return cmp(a, b) < 0; }
inline bool operator>(const Real& a, const Real& b) { return cmp(a, b) > 0; }
inline bool operator<=(const Real& a, const Real& b) { return cmp(a, b) <= 0; }
inline bool operator>=(const Real& a, const Real& b) { return cmp(a, b) >= 0; }
inline bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.raw(), b.raw()) != 0; }

/// Natural log of an integer base, rounded in the requested direction.
inline Real ln_base(int base, mpfr_prec_t prec, mpfr_rnd_t rnd = MPFR_RNDN) {
    Real r(prec);
    mpfr_set_ui(r.raw(), static_cast<unsigned long>(base), MPFR_RNDN);
    mpfr_log(r.raw(), r.raw(), rnd);
    return r;
}

/// Number of significant decimal digits carried by `prec` binary digits.
inline int decimal_digits(mpfr_prec_t prec) {
    int d = static_cast<int>(static_cast<double>(prec) * 0.3010299956639812);
    return d < 2 ? 2 : d;
}

}  // namespace kempner
