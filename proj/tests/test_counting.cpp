#include "kempner/counting.hpp"

#include <catch2/catch.hpp>

#include <sstream>

using namespace kempner;

namespace {

mpz_class binom(unsigned long n, unsigned long k) {
    mpz_class r;
    if (k > n) return 0;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

mpz_class brute_count(const DigitCounter& sys, unsigned long k, int d) {
    mpz_class lo;
    mpz_ui_pow_ui(lo.get_mpz_t(), static_cast<unsigned long>(sys.base),
                  static_cast<unsigned long>(d - 1));
    mpz_class hi = lo * sys.base;
    mpz_class c = 0;
    mpz_class n = d == 1 ? mpz_class(1) : lo;
    for (; n < hi; ++n)
        if (sys.count_value(n) == k) ++c;
    return c;
}

}  // namespace

TEST_CASE("single-bit counts are binomials") {
    CountTable t = block_count_table(Block(2, {1}), 6, 10);
    for (int d = 1; d <= 10; ++d)
        for (unsigned long k = 1; k <= 6; ++k)
            CHECK(t.at(k, d) == binom(static_cast<unsigned long>(d) - 1, k - 1));
    CHECK(t.at(2, 3) == 2);  // 101 and 110
    CHECK(t.at(0, 5) == 0);
}

TEST_CASE("avoiding the zero digit leaves one integer per length") {
    CountTable t = block_count_table(Block(2, {0}), 3, 12);
    for (int d = 1; d <= 12; ++d) CHECK(t.at(0, d) == 1);
}

TEST_CASE("digit-sum counts, base 2 popcount and base 10 anchor") {
    CountTable t2 = digitsum_count_table(2, 6, 10);
    for (int d = 1; d <= 10; ++d)
        for (unsigned long k = 1; k <= 6; ++k)
            CHECK(t2.at(k, d) == binom(static_cast<unsigned long>(d) - 1, k - 1));
    CountTable t10 = digitsum_count_table(10, 3, 4);
    CHECK(t10.at(1, 1) == 1);  // only n = 1
}

TEST_CASE("row totals are exactly the d-digit counts") {
    for (int base : {2, 3, 10}) {
        CountTable t(DigitCounter::digit_sum_counter(base), 4, 8);
        CountTable b(DigitCounter::block_counter(Block(base, {1})), 4, 8);
        mpz_class expect = base - 1;
        for (int d = 1; d <= 8; ++d) {
            CHECK(t.row_total(d) == expect);
            CHECK(b.row_total(d) == expect);
            expect *= base;
        }
    }
}

TEST_CASE("tables match brute-force enumeration") {
    std::vector<DigitCounter> systems;
    for (int base : {2, 3}) {
        for (int a = 0; a < base; ++a) {
            systems.push_back(DigitCounter::block_counter(Block(base, {a})));
            for (int b = 0; b < base; ++b)
                systems.push_back(DigitCounter::block_counter(Block(base, {a, b})));
        }
        systems.push_back(DigitCounter::digit_sum_counter(base));
    }
    for (const auto& sys : systems) {
        int dmax = 5;
        CountTable t(sys, 4, dmax);
        for (int d = 1; d <= dmax; ++d)
            for (unsigned long k = 0; k <= 4; ++k) {
                if (t.at(k, d) != brute_count(sys, k, d)) {
                    CAPTURE(sys.label, k, d);
                    REQUIRE(t.at(k, d) == brute_count(sys, k, d));
                }
            }
    }
    // base 10 spot checks at shallow depth
    for (const auto& sys : {DigitCounter::block_counter(Block(10, {9})),
                            DigitCounter::block_counter(Block(10, {0})),
                            DigitCounter::digit_sum_counter(10)}) {
        CountTable t(sys, 3, 4);
        for (int d = 1; d <= 4; ++d)
            for (unsigned long k = 0; k <= 3; ++k) REQUIRE(t.at(k, d) == brute_count(sys, k, d));
    }
}

TEST_CASE("csv export shape") {
    CountTable t = block_count_table(Block(2, {1}), 1, 2);
    std::ostringstream os;
    t.to_csv(os);
    CHECK(os.str() == "k,d,count\n0,1,0\n0,2,0\n1,1,1\n1,2,1\n");
}

TEST_CASE("tail bound dominates the true tail for the all-ones set") {
    // integers avoiding 0 in base 2 are 2^m - 1; true tail beyond 4 digits is
    // sum over m >= 5 of 1/(2^m - 1)
    CountTable t = block_count_table(Block(2, {0}), 0, 80);
    Real bound = tail_bound(t, 0, 4, 1);
    Real truth(192);
    Real term(192);
    for (int m = 5; m <= 200; ++m) {
        mpz_class d = (mpz_class(1) << m) - 1;
        mpfr_set_z(term.raw(), d.get_mpz_t(), MPFR_RNDN);
        mpfr_ui_div(term.raw(), 1, term.raw(), MPFR_RNDN);
        mpfr_add(truth.raw(), truth.raw(), term.raw(), MPFR_RNDN);
    }
    CHECK(mpfr_cmp(bound.raw(), truth.raw()) >= 0);
    CHECK(mpfr_cmp_d(bound.raw(), 0.13) <= 0);  // 1/16 + 1/32 + ... = 1/8, plus closure slack
}

TEST_CASE("tail bound properties") {
    CountTable t = block_count_table(Block(2, {1, 1}), 3, 200);
    // monotone nonincreasing in the depth
    Real b8 = tail_bound(t, 2, 8, 1);
    Real b10 = tail_bound(t, 2, 10, 1);
    Real b14 = tail_bound(t, 2, 14, 1);
    CHECK(b10 <= b8);
    CHECK(b14 <= b10);
    // squares are smaller than first powers
    for (int depth : {4, 8, 12}) {
        Real p1 = tail_bound(t, 2, depth, 1);
        Real p2 = tail_bound(t, 2, depth, 2);
        CHECK(p2 <= p1);
    }
}

TEST_CASE("empty tails are certified as exactly zero") {
    // no integer has zero ones in base 2
    CountTable t = block_count_table(Block(2, {1}), 0, 40);
    Real b = tail_bound(t, 0, 6, 1);
    CHECK(b.is_zero());
    TailEnclosure e = first_order_tail(t, 0, 6, 3);
    CHECK(e.empty);
    CHECK(e.lo.is_zero());
    CHECK(e.hi.is_zero());
    // digit sum zero is unreachable for n >= 1
    CountTable ds = digitsum_count_table(3, 0, 40);
    CHECK(tail_bound(ds, 0, 5, 1).is_zero());
}

TEST_CASE("certification failure on too-small budgets") {
    CountTable t = block_count_table(Block(2, {1, 1}), 3, 12);
    CHECK_THROWS_AS(tail_bound(t, 3, 4, 1), CertificationFailure);
}

TEST_CASE("refined tail encloses exact sparse tails") {
    // exactly one 1-bit: n = 2^i, tail beyond depth six is sum 2^-i, i >= 6
    CountTable t = block_count_table(Block(2, {1}), 1, 220);
    TailEnclosure e = first_order_tail(t, 1, 6, 4);
    CHECK_FALSE(e.empty);
    Real truth(160);
    mpfr_set_ui_2exp(truth.raw(), 1, -5, MPFR_RNDN);  // 2^-6 + 2^-7 + ... = 2^-5
    CHECK(mpfr_cmp(e.lo.raw(), truth.raw()) <= 0);
    CHECK(mpfr_cmp(e.hi.raw(), truth.raw()) >= 0);
    // all-ones integers again, tighter than the coarse bound
    CountTable z = block_count_table(Block(2, {0}), 0, 220);
    TailEnclosure ez = first_order_tail(z, 0, 4, 4);
    Real truth2(192);
    Real term(192);
    for (int m = 5; m <= 250; ++m) {
        mpz_class d = (mpz_class(1) << m) - 1;
        mpfr_set_z(term.raw(), d.get_mpz_t(), MPFR_RNDN);
        mpfr_ui_div(term.raw(), 1, term.raw(), MPFR_RNDN);
        mpfr_add(truth2.raw(), truth2.raw(), term.raw(), MPFR_RNDN);
    }
    CHECK(mpfr_cmp(ez.lo.raw(), truth2.raw()) <= 0);
    CHECK(mpfr_cmp(ez.hi.raw(), truth2.raw()) >= 0);
    // width is controlled by the prefix refinement
    Real width = sub(ez.hi, ez.lo, MPFR_RNDU);
    Real rel = div(width, truth2, MPFR_RNDU);
    CHECK(mpfr_cmp_d(rel.raw(), 0.09) < 0);
}

TEST_CASE("emptiness horizon is conservative") {
    DigitCounter sys = DigitCounter::block_counter(Block(2, {1, 1}));
    CHECK(emptiness_horizon(sys, 0) >= 3);
    CHECK(emptiness_horizon(sys, 3) >= 12);
}
