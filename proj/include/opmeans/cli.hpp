#pragma once

// Subcommands of the opmeans tool, kept free of argument parsing so tests can
// drive them with in-memory streams. stdout carries only results and reports;
// diagnostics go to the error stream.
//
// Exit codes: 0 success / verdict pass, 1 verdict fail, 2 parse or input
// error, 3 dimension mismatch, 4 eps-limit did not converge, 5 evaluation error.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opmeans/connection.hpp"
#include "opmeans/matrix_json.hpp"
#include "opmeans/scalar.hpp"
#include "opmeans/verifier.hpp"

namespace opmeans::cli {

enum ExitCode : int { kOk = 0, kFail = 1, kParse = 2, kDimension = 3, kConvergence = 4, kEvaluation = 5 };

/// OPMEANS_SEED, when set to a valid unsigned integer.
[[nodiscard]] inline std::optional<std::uint64_t> seed_from_env() {
    const char* v = std::getenv("OPMEANS_SEED");
    if (v == nullptr || *v == '\0') return std::nullopt;
    std::uint64_t seed = 0;
    const char* end = v + std::char_traits<char>::length(v);
    auto [ptr, ec] = std::from_chars(v, end, seed);
    if (ec != std::errc{} || ptr != end) throw ParseError("OPMEANS_SEED is not an unsigned integer");
    return seed;
}

[[nodiscard]] inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
}

/// A matrix file is either a bare matrix object or a compute result {"result": matrix, ...}.
[[nodiscard]] inline HermitianMatrix read_matrix_file(const std::string& path) {
    const json j = read_json_file(path);
    return matrix_from_json(j.is_object() && j.contains("result") ? j["result"] : j);
}

/// Writes `text` to `path`, or to `out` when the path is empty.
inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError("cannot write '" + path + "'");
    f << text;
}

[[nodiscard]] inline std::string shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

struct ComputeArgs {
    std::string connection_path;
    std::string a_path;
    std::string b_path;
    std::string out_path;  ///< empty: stdout
    std::optional<EpsSchedule> eps;
};

/// Evaluates A sigma B and writes {"result": matrix, "trace": ..., "converged": bool}.
[[nodiscard]] inline int cmd_compute(const ComputeArgs& args, std::ostream& out, std::ostream& err) {
    try {
        Connection conn = connection_from_json(read_json_file(args.connection_path));
        if (args.eps) conn = conn.with_eps(*args.eps);
        const HermitianMatrix ha = read_matrix_file(args.a_path);
        const HermitianMatrix hb = read_matrix_file(args.b_path);
        if (ha.dim() != hb.dim()) {
            err << "error: dimension mismatch (" << ha.dim() << " vs " << hb.dim() << ")\n";
            return kDimension;
        }
        PsdMatrix a = PsdMatrix::assume(ha, 0.0);
        PsdMatrix b = PsdMatrix::assume(hb, 0.0);
        try {
            a = PsdMatrix::certify(ha);
            b = PsdMatrix::certify(hb);
        } catch (const SingularityError& e) {
            err << "error: input is not PSD: " << e.what() << '\n';
            return kParse;
        }
        try {
            auto r = eval(conn, a, b);
            const json doc = {{"result", matrix_to_json(r.value)}, {"trace", r.trace.to_json()}, {"converged", true}};
            emit(doc.dump(2) + "\n", args.out_path, out);
            return kOk;
        } catch (const ConvergenceError& e) {
            const json doc = {{"result", matrix_to_json(e.last_iterate())},
                              {"trace", e.trace().to_json()},
                              {"converged", false}};
            emit(doc.dump(2) + "\n", args.out_path, out);
            err << "error: " << e.what() << '\n';
            return kConvergence;
        }
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kParse;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return kParse;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << '\n';
        return kDimension;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kEvaluation;
    }
}

struct VerifyArgs {
    std::string connection_path;
    TrialConfig config;
    std::optional<EpsSchedule> eps;
    std::vector<std::string> checks;  ///< empty: all checks
    std::string out_path;
};

/// Runs the axiom suite; exit 0 when no violation is found, 1 otherwise.
[[nodiscard]] inline int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err) {
    try {
        Connection conn = connection_from_json(read_json_file(args.connection_path));
        if (args.eps) conn = conn.with_eps(*args.eps);
        std::vector<CheckKind> kinds;
        for (const auto& name : args.checks) {
            const auto k = parse_check_name(name);
            if (!k) throw ParseError("unknown check '" + name + "'");
            kinds.push_back(*k);
        }
        if (kinds.empty()) kinds.assign(std::begin(kAllChecks), std::end(kAllChecks));
        const VerificationReport rep = run_suite(conn, args.config, kinds);
        emit(rep.to_json().dump(2) + "\n", args.out_path, out);
        for (const auto& c : rep.checks)
            err << c.name << ": " << c.trials << " trials, " << c.violations << " violations, " << c.eval_failures
                << " evaluation failures\n";
        return rep.pass ? kOk : kFail;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kParse;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return kParse;
    }
}

/// One row per x: the four scalar means, whether they are strictly ordered,
/// and whether the row is the degenerate x = 1.
[[nodiscard]] inline int cmd_chain(const std::vector<double>& xs, const std::string& format, std::ostream& out,
                                   std::ostream& err) {
    if (format != "csv" && format != "json") {
        err << "error: unknown format '" << format << "'\n";
        return kParse;
    }
    struct Row {
        double x, h, g, l, a;
        bool ordered, degenerate;
    };
    std::vector<Row> rows;
    for (const double x : xs) {
        if (x == 1.0) {
            rows.push_back({1.0, 1.0, 1.0, 1.0, 1.0, false, true});
            continue;
        }
        try {
            const ChainValues c = scalar_chain_check(x);
            rows.push_back({x, c.harmonic, c.geometric, c.logarithmic, c.arithmetic, c.strictly_ordered(), false});
        } catch (const ParameterError& e) {
            err << "error: " << e.what() << '\n';
            return kParse;
        }
    }
    if (format == "csv") {
        out << "x,harmonic,geometric,logarithmic,arithmetic,ordered,degenerate\n";
        for (const auto& r : rows)
            out << shortest(r.x) << ',' << shortest(r.h) << ',' << shortest(r.g) << ',' << shortest(r.l) << ','
                << shortest(r.a) << ',' << (r.ordered ? "true" : "false") << ',' << (r.degenerate ? "true" : "false")
                << '\n';
    } else {
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back({{"x", r.x},
                           {"harmonic", r.h},
                           {"geometric", r.g},
                           {"logarithmic", r.l},
                           {"arithmetic", r.a},
                           {"ordered", r.ordered},
                           {"degenerate", r.degenerate}});
        out << arr.dump(2) << '\n';
    }
    return kOk;
}

[[nodiscard]] inline int cmd_list_means(std::ostream& out) {
    out << "arithmetic     t in [0,1] (default 0.5)   (1-t) + t x\n"
           "geometric      t in [0,1] (default 0.5)   x^t\n"
           "harmonic       t in [0,1] (default 0.5)   x / ((1-t) x + t)\n"
           "logarithmic                               (x-1)/log x\n"
           "power_quasi    p in [-1,1], alpha in [0,1] ((1-alpha) + alpha x^p)^(1/p)\n"
           "affine         alpha, beta >= 0           alpha + beta x\n"
           "sum                                       1 + x\n"
           "parallel_sum                              x / (1 + x)\n"
           "custom         name: square|cube|exp      negative controls (not connections)\n";
    return kOk;
}

}  // namespace opmeans::cli
