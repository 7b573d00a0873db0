#include "kempner/numeral.hpp"

#include <catch2/catch.hpp>

#include <random>

using namespace kempner;

TEST_CASE("expand produces canonical digits") {
    CHECK(expand(13ul, 10).digits == std::vector<int>{1, 3});
    CHECK(expand(0ul, 2).digits.empty());
    CHECK(expand(7ul, 2).digits == std::vector<int>{1, 1, 1});
    CHECK_THROWS_AS(expand(5ul, 1), std::invalid_argument);
}

TEST_CASE("expansion value round-trips") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 200; ++i) {
        int base = 2 + static_cast<int>(rng() % 40);
        mpz_class n = 0;
        int limbs = 1 + static_cast<int>(rng() % 5);
        for (int l = 0; l < limbs; ++l) n = n * 1000003 + static_cast<unsigned long>(rng() % 1000003);
        Expansion e = expand(n, base);
        CHECK(e.value() == n);
        if (n > 0) CHECK(e.digits.front() != 0);
    }
}

TEST_CASE("value_of keeps leading zeros out of the value") {
    CHECK(value_of(Block(2, {0, 1, 1})) == 3);
    CHECK(value_of(Block(10, {9})) == 9);
    CHECK(value_of(Block(2, {1, 1})) == 3);
}

TEST_CASE("digit_sum basics") {
    CHECK(digit_sum(7ul, 2) == 3);
    CHECK(digit_sum(0ul, 10) == 0);
    CHECK(digit_sum(999ul, 10) == 27);
    CHECK_THROWS_AS(digit_sum(3ul, 0), std::invalid_argument);
}

TEST_CASE("digit_sum adds over carry-free concatenation") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        int base = 2 + static_cast<int>(rng() % 14);
        // left part with nonzero leading digit, right part arbitrary digits
        std::vector<int> left, right;
        int ll = 1 + static_cast<int>(rng() % 8);
        int rl = 1 + static_cast<int>(rng() % 8);
        for (int j = 0; j < ll; ++j) left.push_back(static_cast<int>(rng() % base));
        if (left[0] == 0) left[0] = 1;
        for (int j = 0; j < rl; ++j) right.push_back(static_cast<int>(rng() % base));
        mpz_class bp;
        mpz_ui_pow_ui(bp.get_mpz_t(), static_cast<unsigned long>(base),
                      static_cast<unsigned long>(rl));
        mpz_class joined = value_of_digits(left, base) * bp + value_of_digits(right, base);
        unsigned long lhs = digit_sum(joined, base);
        unsigned long rhs =
            digit_sum(value_of_digits(left, base), base) + digit_sum(value_of_digits(right, base), base);
        CHECK(lhs == rhs);
    }
}

TEST_CASE("naive occurrence counts") {
    CHECK(count_occurrences_naive(7ul, Block(2, {1, 1})) == 2);
    CHECK(count_occurrences_naive(0ul, Block(2, {0})) == 0);
    // 18 = 10010 in base 2: "10" occurs at the first and fourth positions
    CHECK(count_occurrences_naive(18ul, Block(2, {1, 0})) == 2);
}

TEST_CASE("blocks with leading zeros are distinct") {
    Block a(2, {0, 1, 1});
    Block b(2, {1, 1});
    CHECK(a.size() == 3);
    CHECK(a.value() == b.value());
    CHECK_FALSE(a == b);
    // 0b1011 = 11 contains "011" once but "11" once too
    CHECK(count_occurrences_naive(11ul, a) == 1);
    CHECK(count_occurrences_naive(11ul, b) == 1);
    CHECK(count_occurrences_naive(7ul, a) == 0);  // 111 has no zero
}

TEST_CASE("block parser") {
    CHECK(Block::parse(2, "011").digits == std::vector<int>{0, 1, 1});
    CHECK(Block::parse(12, "[10][3]").digits == std::vector<int>{10, 3});
    CHECK(Block::parse(16, "9[15]").digits == std::vector<int>{9, 15});
    CHECK_THROWS_WITH(Block::parse(2, "21"), Catch::Contains("digit 2 invalid for base 2"));
    CHECK_THROWS_AS(Block::parse(12, "[12]"), std::invalid_argument);
    CHECK_THROWS_AS(Block::parse(10, ""), std::invalid_argument);
    CHECK_THROWS_AS(Block::parse(12, "[7"), std::invalid_argument);
}

TEST_CASE("automaton border behavior after a match") {
    OccurrenceAutomaton aut = build_automaton(Block(2, {1, 1}));
    // state walk over 111: 0 ->1 ->2(emit) ->2(emit, via border 1)
    auto [q1, e1] = aut.step(0, 1);
    CHECK(q1 == 1);
    CHECK(e1 == 0);
    auto [q2, e2] = aut.step(q1, 1);
    CHECK(e2 == 1);
    CHECK(q2 == 1);  // longest proper border of "11"
    auto [q3, e3] = aut.step(q2, 1);
    CHECK(e3 == 1);
    CHECK(aut.count(std::vector<int>{1, 1, 1}) == 2);
}

static std::vector<Block> small_block_corpus() {
    std::vector<Block> out;
    for (int base : {2, 3}) {
        for (int a = 0; a < base; ++a) {
            out.emplace_back(base, std::vector<int>{a});
            for (int b = 0; b < base; ++b) out.emplace_back(base, std::vector<int>{a, b});
        }
    }
    out.emplace_back(10, std::vector<int>{9});
    out.emplace_back(10, std::vector<int>{0});
    out.emplace_back(10, std::vector<int>{4, 2});
    return out;
}

TEST_CASE("automaton equals naive scan") {
    for (const Block& w : small_block_corpus()) {
        OccurrenceAutomaton aut = build_automaton(w);
        for (unsigned long n = 0; n < 20000; ++n) {
            if (aut.count_value(n) != count_occurrences_naive(n, w)) {
                CAPTURE(w.str(), w.base, n);
                REQUIRE(aut.count_value(n) == count_occurrences_naive(n, w));
            }
        }
    }
}

TEST_CASE("automaton equals naive scan on random longer blocks") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 12; ++trial) {
        int base = (trial % 3 == 0) ? 10 : (trial % 3 == 1 ? 3 : 2);
        int len = 3 + static_cast<int>(rng() % 3);
        std::vector<int> ds;
        for (int i = 0; i < len; ++i) ds.push_back(static_cast<int>(rng() % base));
        Block w(base, ds);
        OccurrenceAutomaton aut = build_automaton(w);
        for (int i = 0; i < 3000; ++i) {
            unsigned long n = rng() % 1000000;
            REQUIRE(aut.count_value(n) == count_occurrences_naive(n, w));
        }
    }
}

TEST_CASE("a block without leading zero occurs in its own value") {
    for (const Block& w : small_block_corpus()) {
        if (w.leading_zero()) continue;
        CHECK(count_occurrences_naive(w.value(), w) >= 1);
    }
}

TEST_CASE("digit counter matches naive semantics") {
    DigitCounter ds = DigitCounter::digit_sum_counter(10);
    CHECK(ds.count_value(999) == 27);
    CHECK(ds.count_value(0) == 0);
    DigitCounter bc = DigitCounter::block_counter(Block(2, {1, 1}));
    CHECK(bc.count_value(7) == 2);
    CHECK(bc.max_step_add() == 1);
    CHECK(DigitCounter::digit_sum_counter(10).max_step_add() == 9);
}
