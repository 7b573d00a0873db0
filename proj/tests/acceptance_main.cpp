// Acceptance suite: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include "kempner/evaluator.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

using namespace kempner;

namespace {

const char* cli_path = "tools/kempner";
int worker_threads = 2;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

int failures = 0;

void report(int id, bool pass, const std::string& detail, double secs) {
    std::printf("%s criterion %2d: %s [%.1f s]\n", pass ? "PASS" : "FAIL", id, detail.c_str(),
                secs);
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::vector<Block> acceptance_grid() {
    std::vector<Block> out;
    auto all_blocks = [&](int base, int len) {
        std::vector<int> d(static_cast<std::size_t>(len), 0);
        for (;;) {
            out.emplace_back(base, d);
            int i = len - 1;
            while (i >= 0 && ++d[static_cast<std::size_t>(i)] == base) {
                d[static_cast<std::size_t>(i)] = 0;
                --i;
            }
            if (i < 0) break;
        }
    };
    for (int len = 1; len <= 3; ++len) all_blocks(2, len);  // 14 blocks
    for (int len = 1; len <= 2; ++len) all_blocks(3, len);  // 12 blocks
    out.emplace_back(10, std::vector<int>{9});
    out.emplace_back(10, std::vector<int>{0});
    return out;  // 28 blocks, including the zero blocks "0" and "00"
}

bool value_in(const ApproxValue& v, const Real& x) { return encloses(v, x); }

Real certified_distance(const ApproxValue& v, const Real& target) {
    Real d = sub(v.estimate, target, MPFR_RNDU);
    mpfr_abs(d.raw(), d.raw(), MPFR_RNDU);
    return add(d, v.radius, MPFR_RNDU);
}

std::string run_command(const std::string& args, int* status) {
    std::string cmd = std::string(cli_path) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) {
        *status = -1;
        return {};
    }
    std::string out;
    std::array<char, 4096> buf;
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), got);
    int rc = pclose(p);
    *status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return out;
}

// ---- criterion 1: identity suite over the published grid ----
void criterion_identity_suite() {
    Timer t;
    EvalOptions opt{128, worker_threads};
    std::vector<Block> grid = acceptance_grid();
    Real target = Real::from_si(-1, 128);
    int cells = 0;
    double worst_radius = 0, worst_miss = 0;
    bool ok = true;
    std::string first_bad;
    for (const Block& w : grid) {
        int depth = default_depth(w.base);
        for (unsigned long k = 0; k <= 3; ++k) {
            ApproxValue v = identity_check(w, k, depth, opt);
            ++cells;
            Real miss = sub(v.estimate, target);
            mpfr_abs(miss.raw(), miss.raw(), MPFR_RNDN);
            double m = miss.get_d(), r = v.radius.get_d();
            if (m > worst_miss) worst_miss = m;
            if (r > worst_radius) worst_radius = r;
            if (!value_in(v, target) || !(r < 1e-3)) {
                ok = false;
                if (first_bad.empty())
                    first_bad = " first failure at base " + std::to_string(w.base) + " block " +
                                w.str() + " k " + std::to_string(k);
            }
        }
    }
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "identity suite: %d cells enclose -1, max radius %.2e (< 1e-3), max miss %.2e%s",
                  cells, worst_radius, worst_miss, first_bad.c_str());
    report(1, ok, buf, t.seconds());
}

void criterion_exact_k0() {
    Timer t;
    ApproxValue v = identity_check(Block(2, {1}), 0, 24, EvalOptions{128, worker_threads});
    Real target = Real::from_si(-1, 128);
    bool ok = value_in(v, target) && mpfr_cmp_d(v.radius.raw(), 1e-30) < 0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "exact k=0 case: estimate %s, radius %s (< 1e-30)",
                  v.estimate.str(8).c_str(), v.radius.str(3).c_str());
    report(2, ok, buf, t.seconds());
}

void criterion_first_order() {
    Timer t;
    bool ok = true;
    for (const Block& w : acceptance_grid()) {
        TermSet ts = derive_term_set(w);
        mpz_class bm;
        mpz_ui_pow_ui(bm.get_mpz_t(), static_cast<unsigned long>(w.base),
                      static_cast<unsigned long>(w.size()));
        if (ts.first_order() != mpq_class(1) / mpq_class(bm)) ok = false;
    }
    report(3, ok, "first-order coefficient equals base^-|w| exactly on all grid blocks",
           t.seconds());
}

void criterion_limit_base2() {
    Timer t;
    ApproxValue v = harmonic_sum_accelerated(Block(2, {1}), 8, 24, EvalOptions{128, worker_threads});
    Real target = mul(Real::from_ui(2, 160), ln_base(2, 160));
    Real dist = certified_distance(v, target);
    bool ok = mpfr_cmp_d(dist.raw(), 1e-2) < 0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "single-bit sum at k=8 vs 2 ln 2: certified distance %.3e (< 1e-2)",
                  dist.get_d());
    report(4, ok, buf, t.seconds());
}

void criterion_limit_nines() {
    Timer t;
    ApproxValue v = harmonic_sum_accelerated(Block(10, {9}), 3, 7, EvalOptions{128, worker_threads});
    Real target = mul(Real::from_ui(10, 160), ln_base(10, 160));
    Real dist = certified_distance(v, target);
    bool ok = mpfr_cmp_d(dist.raw(), 1e-2) < 0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "three-nines sum vs 10 ln 10 = 23.0258509299: certified distance %.3e (< 1e-2)",
                  dist.get_d());
    report(5, ok, buf, t.seconds());
}

void criterion_block_table() {
    Timer t;
    TableRequest req;
    req.kind = Constraint::Kind::block;
    req.base = 2;
    req.block = Block(2, {1, 1});
    req.k_lo = 0;
    req.k_hi = 8;
    req.depth = 24;
    auto rows = limit_table(req, EvalOptions{128, worker_threads});
    bool ok = rows.size() == 9;
    double final_dist = rows.back().certified_distance.get_d();
    if (!(final_dist < 1e-2)) ok = false;
    for (std::size_t i = 4; i < rows.size(); ++i)
        if (!(rows[i].certified_distance < rows[i - 1].certified_distance)) ok = false;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "table for block 11 base 2, k=0..8 vs 4 ln 2: final distance %.3e (< 1e-2), "
                  "decreasing from k=3",
                  final_dist);
    report(6, ok, buf, t.seconds());
}

void criterion_digitsum_identity() {
    Timer t;
    EvalOptions opt{128, worker_threads};
    bool ok = true;
    double worst = 0;
    for (int base : {2, 3, 10}) {
        int depth = base == 2 ? 28 : (base == 3 ? 17 : 8);
        Real target = -ln_base(base, 128);
        for (unsigned long k = 1; k <= 5; ++k) {
            ApproxValue v = digitsum_identity_check(base, k, depth, opt);
            double r = v.radius.get_d();
            if (r > worst) worst = r;
            if (!value_in(v, target) || !(r < 1e-2)) ok = false;
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "digit-sum identity encloses -ln B for B in {2,3,10}, k=1..5, max radius %.2e "
                  "(< 1e-2)",
                  worst);
    report(7, ok, buf, t.seconds());
}

void criterion_digitsum_limit() {
    Timer t;
    EvalOptions opt{128, worker_threads};
    ApproxValue v = digitsum_sum_enclosure(3, 10, 10000000, opt);
    Real ln3 = ln_base(3, 160);
    Real dist = certified_distance(v, ln3);
    bool ok = mpfr_cmp_d(dist.raw(), 5e-2) < 0;

    // base-2 digit-sum rows must match the block-"1" rows bit for bit
    TableRequest ds;
    ds.kind = Constraint::Kind::digit_sum;
    ds.base = 2;
    ds.k_lo = 1;
    ds.k_hi = 6;
    ds.depth = 24;
    auto drows = limit_table(ds, opt);
    TableRequest b1 = ds;
    b1.kind = Constraint::Kind::block;
    b1.block = Block(2, {1});
    auto brows = limit_table(b1, opt);
    bool bits = drows.size() == brows.size();
    for (std::size_t i = 0; bits && i < drows.size(); ++i)
        bits = mpfr_equal_p(drows[i].sum.estimate.raw(), brows[i].sum.estimate.raw()) &&
               mpfr_equal_p(drows[i].sum.radius.raw(), brows[i].sum.radius.raw());
    ok = ok && bits;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "digit-sum limit base 3, k=10, N=1e7: certified |T(10) - ln 3| = %.3e (< 5e-2); "
                  "base-2 rows bit-equal: %s",
                  dist.get_d(), bits ? "yes" : "no");
    report(8, ok, buf, t.seconds());
}

void criterion_oracles() {
    Timer t;
    bool ok = true;
    std::vector<Block> grid = acceptance_grid();
    // automaton vs naive scan for all n < 1e5, one expansion per n
    for (int base : {2, 3, 10}) {
        std::vector<const Block*> blocks;
        std::vector<OccurrenceAutomaton> auts;
        for (const Block& w : grid)
            if (w.base == base) {
                blocks.push_back(&w);
                auts.push_back(build_automaton(w));
            }
        for (unsigned long n = 0; n < 100000; ++n) {
            Expansion e = expand(n, base);
            for (std::size_t i = 0; i < blocks.size(); ++i) {
                if (auts[i].count(e.digits) != count_occurrences_naive(n, *blocks[i])) {
                    ok = false;
                    std::printf("  oracle mismatch at n=%lu block=%s\n", n, blocks[i]->str().c_str());
                }
            }
        }
    }
    // count tables vs brute enumeration, and exact row sums
    auto check_table = [&](const DigitCounter& sys, int dmax) {
        CountTable tbl(sys, 4, dmax);
        mpz_class pos = 0;
        mpz_class expect = sys.base - 1;
        for (int d = 1; d <= dmax; ++d) {
            if (tbl.row_total(d) != expect) ok = false;
            expect *= sys.base;
        }
        mpz_class lo = 1;
        for (int d = 1; d <= dmax; ++d) {
            std::vector<mpz_class> counts(5, 0);
            mpz_class overflow = 0;
            mpz_class hi = lo * sys.base;
            for (mpz_class n = d == 1 ? mpz_class(1) : lo; n < hi; ++n) {
                unsigned long c = sys.count_value(n);
                if (c <= 4)
                    ++counts[static_cast<std::size_t>(c)];
                else
                    ++overflow;
            }
            for (unsigned long k = 0; k <= 4; ++k)
                if (tbl.at(k, d) != counts[static_cast<std::size_t>(k)]) ok = false;
            if (tbl.overflow(d) != overflow) ok = false;
            lo = hi;
        }
        (void)pos;
    };
    for (const Block& w : grid)
        if (w.base != 10) check_table(DigitCounter::block_counter(w), 5);
    check_table(DigitCounter::digit_sum_counter(2), 5);
    check_table(DigitCounter::digit_sum_counter(3), 5);
    check_table(DigitCounter::block_counter(Block(10, {9})), 4);
    check_table(DigitCounter::block_counter(Block(10, {0})), 4);
    check_table(DigitCounter::digit_sum_counter(10), 4);
    report(9, ok,
           "oracle equivalence: automaton == naive scan for n < 1e5; tables == brute counts "
           "(d<=5 for B=2,3; d<=4 for B=10); exact row sums",
           t.seconds());
}

void criterion_cross_method() {
    Timer t;
    EvalOptions opt{128, worker_threads};
    bool ok = true;
    int cells = 0;
    std::string first_bad;
    for (const Block& w : acceptance_grid()) {
        int depth = default_depth(w.base) - 8;
        if (depth < 4) depth = 4;
        for (unsigned long k = 0; k <= 3; ++k) {
            ApproxValue accel = harmonic_sum_accelerated(w, k, depth, opt);
            ApproxValue brute = brute_sum_enclosure(Constraint::block_count(w, k), 1000000, opt);
            ++cells;
            if (!enclosures_intersect(accel, brute)) {
                ok = false;
                if (first_bad.empty())
                    first_bad = " first failure at base " + std::to_string(w.base) + " block " +
                                w.str() + " k " + std::to_string(k);
            }
        }
    }
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "cross-method: brute (N=1e6) + counted tail intersects accelerated enclosure "
                  "on %d cells%s",
                  cells, first_bad.c_str());
    report(10, ok, buf, t.seconds());
}

void criterion_telescoping() {
    Timer t;
    bool ok = true;
    for (int base : {2, 3, 10}) {
        for (unsigned long n = 0; n <= 1000; ++n) {
            Real lhs = log_ratio(n, base, 128);
            for (int j = 0; j < base; ++j)
                lhs = sub(lhs, log_ratio(mpz_class(base) * n + j, base, 128));
            if (n == 0) lhs = sub(lhs, Real::from_ui(1, 128));
            mpfr_abs(lhs.raw(), lhs.raw(), MPFR_RNDN);
            if (mpfr_cmp_d(lhs.raw(), 1e-30) >= 0) ok = false;
        }
    }
    report(11, ok,
           "telescoping: L(n) - sum_j L(Bn+j) is 0 for 1<=n<=1e3 and 1 at n=0, within 1e-30 at "
           "128 bits, B in {2,3,10}",
           t.seconds());
}

void criterion_cli_determinism() {
    Timer t;
    const std::string cmds[] = {
        "derive --base 2 --block 11",
        "derive --base 10 --block 9",
        "check --base 2 --block 1 --k 0 --depth 20",
        "check-digitsum --base 10 --k 5 --depth 7",
        "sum --base 2 --block 1 --k 1 --method brute --limit 10",
        "sum --base 2 --block 11 --k 2 --depth 18",
        "sum-digitsum --base 3 --k 4 --limit 100000",
        "table --base 10 --block 9 --k 0..3 --method accel --depth 5 --format csv",
        "count --base 2 --block 1 --max-k 4 --max-d 6 --format csv",
    };
    bool ok = true;
    for (const std::string& c : cmds) {
        int s1 = 0, s2 = 0;
        std::string a = run_command(c, &s1);
        std::string b = run_command(c, &s2);
        if (s1 != 0 || s2 != 0 || a != b || a.empty()) {
            ok = false;
            std::printf("  nondeterministic or failing command: %s\n", c.c_str());
        }
        if (c.rfind("derive", 0) == 0 || c.rfind("count", 0) == 0) continue;
        int s3 = 0;
        std::string threaded = run_command(c + " --threads 2", &s3);
        if (s3 != 0 || threaded != a) {
            ok = false;
            std::printf("  --threads changed output of: %s\n", c.c_str());
        }
    }
    report(12, ok, "determinism: byte-identical CLI output across runs and --threads settings",
           t.seconds());
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) cli_path = argv[1];
#ifdef KEMPNER_CLI_PATH
    else
        cli_path = KEMPNER_CLI_PATH;
#endif
    if (const char* env = std::getenv("ACCEPT_THREADS")) worker_threads = std::atoi(env);
    if (worker_threads < 1) worker_threads = 1;

    std::printf("acceptance grid: all blocks of length <= 3 in base 2, length <= 2 in base 3, "
                "plus 9 and 0 in base 10 (28 blocks)\n");
    std::printf("worker threads: %d\n\n", worker_threads);
    std::fflush(stdout);

    Timer total;
    criterion_identity_suite();
    criterion_exact_k0();
    criterion_first_order();
    criterion_limit_base2();
    criterion_limit_nines();
    criterion_block_table();
    criterion_digitsum_identity();
    criterion_digitsum_limit();
    criterion_oracles();
    criterion_cross_method();
    criterion_telescoping();
    criterion_cli_determinism();

    std::printf("\n%d of 12 criteria passed [total %.1f s]\n", 12 - failures, total.seconds());
    return failures == 0 ? 0 : 1;
}
