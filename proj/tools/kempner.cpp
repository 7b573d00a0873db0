// Command-line front end: derivation of the product forms, identity checks,
// constrained harmonic sums, convergence tables, and count tables, with
// byte-reproducible text/csv/json output.

#include "kempner/evaluator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using nlohmann::ordered_json;

struct CommonOpts {
    int base = 10;
    mpfr_prec_t precision = 128;
    int threads = 1;
    std::string format = "text";
    std::string output;
};

std::string fmt_real(const kempner::Real& x) {
    return x.str(kempner::decimal_digits(x.prec()));
}

void add_common(CLI::App* cmd, CommonOpts& c, bool with_threads = true) {
    cmd->add_option("--base", c.base, "numeral base (>= 2)")->required();
    cmd->add_option("--precision", c.precision, "working precision in bits")
        ->default_val(128)
        ->check(CLI::Range(24, 16384));
    if (with_threads)
        cmd->add_option("--threads", c.threads, "worker threads (output is identical)")
            ->default_val(1)
            ->check(CLI::Range(1, 256));
    cmd->add_option("--format", c.format, "text, csv or json")
        ->default_val("text")
        ->check(CLI::IsMember({"text", "csv", "json"}));
    cmd->add_option("--output", c.output, "write output to a file instead of stdout");
}

void parse_k_range(const std::string& s, unsigned long& lo, unsigned long& hi) {
    auto pos = s.find("..");
    if (pos == std::string::npos) {
        lo = hi = std::stoul(s);
        return;
    }
    lo = std::stoul(s.substr(0, pos));
    hi = std::stoul(s.substr(pos + 2));
    if (hi < lo) throw std::invalid_argument("bad k range \"" + s + "\"");
}

void emit(const CommonOpts& c, const std::string& text) {
    if (c.output.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
        std::fflush(stdout);
    } else {
        std::ofstream f(c.output, std::ios::binary);
        if (!f) throw std::invalid_argument("cannot open output file " + c.output);
        f.write(text.data(), static_cast<std::streamsize>(text.size()));
    }
}

std::string status_of(const kempner::ApproxValue& v, const kempner::Real& target) {
    if (v.empty_set) return "DEGENERATE";
    return kempner::encloses(v, target) ? "PASS" : "FAIL";
}

ordered_json enclosure_json(const kempner::ApproxValue& v) {
    ordered_json j;
    j["estimate"] = fmt_real(v.estimate);
    j["radius"] = fmt_real(v.radius);
    j["empty_set"] = v.empty_set;
    return j;
}

int run_check(const CommonOpts& c, const kempner::ApproxValue& v, const kempner::Real& target,
              ordered_json meta) {
    std::string status = status_of(v, target);
    std::ostringstream out;
    if (c.format == "text") {
        out << "estimate " << fmt_real(v.estimate) << "\n";
        out << "radius " << fmt_real(v.radius) << "\n";
        out << "target " << fmt_real(target) << "\n";
        out << "status " << status << "\n";
    } else if (c.format == "csv") {
        out << "estimate,radius,target,status\n";
        out << fmt_real(v.estimate) << "," << fmt_real(v.radius) << "," << fmt_real(target)
            << "," << status << "\n";
    } else {
        ordered_json j = std::move(meta);
        j["estimate"] = fmt_real(v.estimate);
        j["radius"] = fmt_real(v.radius);
        j["target"] = fmt_real(target);
        j["status"] = status;
        out << j.dump() << "\n";
    }
    emit(c, out.str());
    return status == "FAIL" ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"certified computation of digit-constrained harmonic series"};
    app.require_subcommand(1);

    // ---- derive ----
    CommonOpts dc;
    std::string d_block;
    CLI::App* derive = app.add_subcommand("derive", "derive the product form for a block");
    add_common(derive, dc, false);
    derive->add_option("--block", d_block, "digit block, e.g. 011 or [10][3]")->required();

    // ---- check ----
    CommonOpts cc;
    std::string c_block;
    unsigned long c_k = 0;
    int c_depth = 0;
    CLI::App* check = app.add_subcommand("check", "identity check for a block and count");
    add_common(check, cc);
    check->add_option("--block", c_block)->required();
    check->add_option("--k", c_k, "exact occurrence count")->required();
    check->add_option("--depth", c_depth, "digit depth (default: ~2^24 integers)");

    // ---- check-digitsum ----
    CommonOpts dsc;
    unsigned long ds_k = 0;
    int ds_depth = 0;
    CLI::App* check_ds = app.add_subcommand("check-digitsum", "digit-sum identity check");
    add_common(check_ds, dsc);
    check_ds->add_option("--k", ds_k, "exact digit sum")->required();
    check_ds->add_option("--depth", ds_depth);

    // ---- sum ----
    CommonOpts sc;
    std::string s_block;
    unsigned long s_k = 0;
    int s_depth = 0;
    unsigned long s_limit = 1000000;
    std::string s_method = "accel";
    CLI::App* sum = app.add_subcommand("sum", "constrained harmonic sum for a block");
    add_common(sum, sc);
    sum->add_option("--block", s_block)->required();
    sum->add_option("--k", s_k)->required();
    sum->add_option("--method", s_method)->check(CLI::IsMember({"brute", "accel"}))
        ->default_val("accel");
    sum->add_option("--limit", s_limit, "brute-force cutoff")->default_val(1000000);
    sum->add_option("--depth", s_depth, "accelerated digit depth");

    // ---- sum-digitsum ----
    CommonOpts ssc;
    unsigned long ss_k = 0;
    unsigned long ss_limit = 1000000;
    int ss_depth = 0;
    CLI::App* sum_ds = app.add_subcommand("sum-digitsum", "digit-sum constrained harmonic sum");
    add_common(sum_ds, ssc);
    sum_ds->add_option("--k", ss_k)->required();
    sum_ds->add_option("--limit", ss_limit)->default_val(1000000);
    sum_ds->add_option("--depth", ss_depth, "digit depth (base 2 accelerated path)");

    // ---- table ----
    CommonOpts tc;
    std::string t_block;
    std::string t_krange;
    std::string t_method = "accel";
    int t_depth = 0;
    unsigned long t_limit = 1000000;
    CLI::App* table = app.add_subcommand(
        "table", "limit table over a k range (block family with --block, else digit-sum)");
    add_common(table, tc);
    table->add_option("--block", t_block);
    table->add_option("--k", t_krange, "k range, e.g. 0..8")->required();
    table->add_option("--method", t_method)->check(CLI::IsMember({"brute", "accel"}))
        ->default_val("accel");
    table->add_option("--depth", t_depth);
    table->add_option("--limit", t_limit)->default_val(1000000);

    // ---- count ----
    CommonOpts nc;
    std::string n_block;
    unsigned long n_max_k = 0;
    int n_max_d = 0;
    CLI::App* count = app.add_subcommand(
        "count", "count table (block family with --block, else digit-sum)");
    add_common(count, nc, false);
    count->add_option("--block", n_block);
    count->add_option("--max-k", n_max_k)->required();
    count->add_option("--max-d", n_max_d)->required()->check(CLI::Range(1, 4096));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (derive->parsed()) {
            kempner::Block w = kempner::Block::parse(dc.base, d_block);
            kempner::TermSet ts = kempner::derive_term_set(w);
            std::ostringstream out;
            if (dc.format == "text") {
                out << kempner::factored_form(ts) << "\n";
                out << kempner::term_set_to_json(ts).dump() << "\n";
            } else if (dc.format == "json") {
                out << kempner::term_set_to_json(ts).dump() << "\n";
            } else {
                out << "mult,s,t\n";
                for (const auto& t : ts.terms)
                    out << t.mult << "," << t.scale_exp << "," << t.offset.get_str() << "\n";
            }
            emit(dc, out.str());
            return 0;
        }

        if (check->parsed()) {
            kempner::Block w = kempner::Block::parse(cc.base, c_block);
            int depth = c_depth > 0 ? c_depth : kempner::default_depth(cc.base);
            kempner::EvalOptions opt{cc.precision, cc.threads};
            kempner::ApproxValue v = kempner::identity_check(w, c_k, depth, opt);
            kempner::Real target = kempner::Real::from_si(-1, cc.precision);
            ordered_json meta;
            meta["command"] = "check";
            meta["base"] = cc.base;
            meta["block"] = w.str();
            meta["k"] = c_k;
            meta["depth"] = depth;
            meta["precision"] = static_cast<long>(cc.precision);
            return run_check(cc, v, target, std::move(meta));
        }

        if (check_ds->parsed()) {
            int depth = ds_depth > 0 ? ds_depth : kempner::default_depth(dsc.base);
            kempner::EvalOptions opt{dsc.precision, dsc.threads};
            kempner::ApproxValue v =
                kempner::digitsum_identity_check(dsc.base, ds_k, depth, opt);
            kempner::Real target = -kempner::ln_base(dsc.base, dsc.precision);
            ordered_json meta;
            meta["command"] = "check-digitsum";
            meta["base"] = dsc.base;
            meta["k"] = ds_k;
            meta["depth"] = depth;
            meta["precision"] = static_cast<long>(dsc.precision);
            return run_check(dsc, v, target, std::move(meta));
        }

        if (sum->parsed()) {
            kempner::Block w = kempner::Block::parse(sc.base, s_block);
            kempner::EvalOptions opt{sc.precision, sc.threads};
            std::ostringstream out;
            if (s_method == "brute") {
                kempner::Real v = kempner::harmonic_sum_bruteforce(
                    kempner::Constraint::block_count(w, s_k), s_limit, opt);
                if (sc.format == "text") {
                    out << fmt_real(v) << "\n";
                } else if (sc.format == "csv") {
                    out << "k,sum\n" << s_k << "," << fmt_real(v) << "\n";
                } else {
                    ordered_json j;
                    j["command"] = "sum";
                    j["method"] = "brute";
                    j["base"] = sc.base;
                    j["block"] = w.str();
                    j["k"] = s_k;
                    j["limit"] = s_limit;
                    j["sum"] = fmt_real(v);
                    out << j.dump() << "\n";
                }
            } else {
                int depth = s_depth > 0 ? s_depth : kempner::default_depth(sc.base);
                kempner::ApproxValue v = kempner::harmonic_sum_accelerated(w, s_k, depth, opt);
                if (sc.format == "text") {
                    out << "estimate " << fmt_real(v.estimate) << "\n";
                    out << "radius " << fmt_real(v.radius) << "\n";
                    if (v.empty_set) out << "empty set\n";
                } else if (sc.format == "csv") {
                    out << "k,estimate,radius\n";
                    out << s_k << "," << fmt_real(v.estimate) << "," << fmt_real(v.radius)
                        << "\n";
                } else {
                    ordered_json j;
                    j["command"] = "sum";
                    j["method"] = "accel";
                    j["base"] = sc.base;
                    j["block"] = w.str();
                    j["k"] = s_k;
                    j["depth"] = depth;
                    j.update(enclosure_json(v));
                    out << j.dump() << "\n";
                }
            }
            emit(sc, out.str());
            return 0;
        }

        if (sum_ds->parsed()) {
            kempner::EvalOptions opt{ssc.precision, ssc.threads};
            kempner::ApproxValue v;
            int depth = ss_depth > 0 ? ss_depth : kempner::default_depth(ssc.base);
            if (ssc.base == 2)
                v = kempner::harmonic_sum_accelerated(kempner::Block(2, {1}), ss_k, depth, opt);
            else
                v = kempner::digitsum_sum_enclosure(ssc.base, ss_k, ss_limit, opt);
            std::ostringstream out;
            if (ssc.format == "text") {
                out << "estimate " << fmt_real(v.estimate) << "\n";
                out << "radius " << fmt_real(v.radius) << "\n";
                if (v.empty_set) out << "empty set\n";
            } else if (ssc.format == "csv") {
                out << "k,estimate,radius\n";
                out << ss_k << "," << fmt_real(v.estimate) << "," << fmt_real(v.radius) << "\n";
            } else {
                ordered_json j;
                j["command"] = "sum-digitsum";
                j["base"] = ssc.base;
                j["k"] = ss_k;
                j["limit"] = ss_limit;
                j.update(enclosure_json(v));
                out << j.dump() << "\n";
            }
            emit(ssc, out.str());
            return 0;
        }

        if (table->parsed()) {
            kempner::TableRequest req;
            req.base = tc.base;
            if (!t_block.empty()) {
                req.kind = kempner::Constraint::Kind::block;
                req.block = kempner::Block::parse(tc.base, t_block);
            } else {
                req.kind = kempner::Constraint::Kind::digit_sum;
            }
            parse_k_range(t_krange, req.k_lo, req.k_hi);
            req.method = t_method == "brute" ? kempner::SumMethod::brute
                                             : kempner::SumMethod::accelerated;
            req.depth = t_depth;
            req.limit = t_limit;
            kempner::EvalOptions opt{tc.precision, tc.threads};
            std::vector<kempner::LimitRow> rows = kempner::limit_table(req, opt);
            std::ostringstream out;
            if (tc.format == "text") {
                out << "k estimate radius limit certified_distance\n";
                for (const auto& r : rows) {
                    out << r.k << " " << fmt_real(r.sum.estimate) << " "
                        << fmt_real(r.sum.radius) << " " << fmt_real(r.limit_value) << " "
                        << fmt_real(r.certified_distance);
                    if (r.sum.empty_set) out << " (empty set)";
                    out << "\n";
                }
            } else if (tc.format == "csv") {
                out << "k,estimate,radius,limit,certified_distance\n";
                for (const auto& r : rows)
                    out << r.k << "," << fmt_real(r.sum.estimate) << ","
                        << fmt_real(r.sum.radius) << "," << fmt_real(r.limit_value) << ","
                        << fmt_real(r.certified_distance) << "\n";
            } else {
                ordered_json j;
                j["command"] = "table";
                j["base"] = tc.base;
                if (req.block) j["block"] = req.block->str();
                j["family"] = req.kind == kempner::Constraint::Kind::block ? "block" : "digit-sum";
                j["rows"] = ordered_json::array();
                for (const auto& r : rows) {
                    ordered_json e;
                    e["k"] = r.k;
                    e["estimate"] = fmt_real(r.sum.estimate);
                    e["radius"] = fmt_real(r.sum.radius);
                    e["limit"] = fmt_real(r.limit_value);
                    e["certified_distance"] = fmt_real(r.certified_distance);
                    e["empty_set"] = r.sum.empty_set;
                    j["rows"].push_back(std::move(e));
                }
                out << j.dump() << "\n";
            }
            emit(tc, out.str());
            return 0;
        }

        if (count->parsed()) {
            kempner::DigitCounter sys;
            if (!n_block.empty())
                sys = kempner::DigitCounter::block_counter(kempner::Block::parse(nc.base, n_block));
            else
                sys = kempner::DigitCounter::digit_sum_counter(nc.base);
            kempner::CountTable tbl(sys, n_max_k, n_max_d);
            std::ostringstream out;
            if (nc.format == "json") {
                ordered_json j;
                j["command"] = "count";
                j["base"] = nc.base;
                j["constraint"] = sys.label;
                j["max_k"] = n_max_k;
                j["max_d"] = n_max_d;
                j["rows"] = ordered_json::array();
                for (unsigned long k = 0; k <= n_max_k; ++k)
                    for (int d = 1; d <= n_max_d; ++d) {
                        ordered_json e;
                        e["k"] = k;
                        e["d"] = d;
                        e["count"] = tbl.at(k, d).get_str();
                        j["rows"].push_back(std::move(e));
                    }
                out << j.dump() << "\n";
            } else {
                tbl.to_csv(out);
            }
            emit(nc, out.str());
            return 0;
        }
    } catch (const kempner::CertificationFailure& e) {
        std::cerr << "tail certification failed: " << e.what()
                  << " (increase --depth, or the series tail decays too slowly"
                     " for the counted certificate)\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
