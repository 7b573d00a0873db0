// Walkthrough: derive the product form for the digit 9 in base 10, check the
// identity, and print how the exact-count sums approach 10 ln 10.

#include "kempner/evaluator.hpp"

#include <cstdio>

int main() {
    using namespace kempner;

    Block nine(10, {9});
    TermSet ts = derive_term_set(nine);
    std::printf("product form for one digit 9: %s\n", factored_form(ts).c_str());
    std::printf("first-order coefficient: %s (expect 1/10)\n\n",
                ts.first_order().get_str().c_str());

    EvalOptions opt;
    opt.threads = 2;

    ApproxValue id = identity_check(nine, 1, 6, opt);
    std::printf("identity partial (k=1, depth 6): %s +- %s (target -1)\n\n",
                id.estimate.str(12).c_str(), id.radius.str(3).c_str());

    std::printf("%2s  %-22s  %-10s\n", "k", "sum over exactly-k nines", "radius");
    for (unsigned long k = 0; k <= 4; ++k) {
        ApproxValue s = harmonic_sum_accelerated(nine, k, 6, opt);
        std::printf("%2lu  %-22s  %-10s\n", k, s.estimate.str(12).c_str(),
                    s.radius.str(3).c_str());
    }
    Real target = mul(Real::from_ui(10, 128), ln_base(10, 128));
    std::printf("\nlimit 10 ln 10 = %s\n", target.str(12).c_str());
    return 0;
}
