// opmeans: compute connections of PSD matrices, run the axiom suite, print the scalar chain.

#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "opmeans/cli.hpp"

int main(int argc, char** argv) {
    using namespace opmeans;
    CLI::App app{"Operator connections and means on PSD matrices"};
    app.require_subcommand(1);

    std::vector<double> eps;
    std::string out_path;

    cli::ComputeArgs compute;
    auto* c = app.add_subcommand("compute", "Evaluate A sigma B from JSON files");
    c->add_option("connection", compute.connection_path, "Connection descriptor (JSON)")->required();
    c->add_option("A", compute.a_path, "Left operand (matrix JSON)")->required();
    c->add_option("B", compute.b_path, "Right operand (matrix JSON)")->required();
    c->add_option("--eps", eps, "Override the eps schedule (strictly decreasing, ending <= 1e-8)");
    c->add_option("--out", out_path, "Output file (default stdout)");

    cli::VerifyArgs verify;
    std::optional<std::uint64_t> seed;
    std::vector<std::size_t> dims;
    std::optional<double> tol_abs, tol_rel;
    unsigned jobs = 1;
    bool no_shrink = false;
    auto* v = app.add_subcommand("verify", "Run the axiom suite on a connection");
    v->add_option("connection", verify.connection_path, "Connection descriptor (JSON)")->required();
    v->add_option("--seed", seed, "Seed (falls back to OPMEANS_SEED, then 0)");
    v->add_option("--trials", verify.config.trials_per_check, "Trials per check")->check(CLI::PositiveNumber);
    v->add_option("--dims", dims, "Dimensions sampled, e.g. --dims 1 2 3");
    v->add_option("--cond-max", verify.config.cond_max, "Largest condition number of PD draws");
    v->add_option("--tol-abs", tol_abs, "Absolute tolerance");
    v->add_option("--tol-rel", tol_rel, "Relative tolerance");
    v->add_option("--eps", eps, "Override the eps schedule");
    v->add_option("--checks", verify.checks, "Subset of checks (M1 M2 M3 M3' M3'' M4 M4' P F superadditivity)");
    v->add_option("--jobs", jobs, "Worker threads (0: hardware concurrency)");
    v->add_flag("--no-shrink", no_shrink, "Report counterexamples unshrunk");
    v->add_option("--out", out_path, "Report file (default stdout)");

    std::vector<double> xs;
    std::string format = "csv";
    auto* ch = app.add_subcommand("chain", "Harmonic <= geometric <= logarithmic <= arithmetic at each x");
    ch->add_option("x", xs, "Positive values")->required();
    ch->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    auto* lm = app.add_subcommand("list-means", "List the named families");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kParse;
    }

    try {
        if (c->parsed()) {
            if (!eps.empty()) compute.eps = eps;
            compute.out_path = out_path;
            return cli::cmd_compute(compute, std::cout, std::cerr);
        }
        if (v->parsed()) {
            if (!eps.empty()) verify.eps = eps;
            if (!dims.empty()) verify.config.dims = dims;
            if (tol_abs) verify.config.tol.abs = *tol_abs;
            if (tol_rel) verify.config.tol.rel = *tol_rel;
            verify.config.seed = seed ? *seed : cli::seed_from_env().value_or(0);
            verify.config.jobs = jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs;
            verify.config.shrink = !no_shrink;
            verify.out_path = out_path;
            return cli::cmd_verify(verify, std::cout, std::cerr);
        }
        if (ch->parsed()) return cli::cmd_chain(xs, format, std::cout, std::cerr);
        if (lm->parsed()) return cli::cmd_list_means(std::cout);
    } catch (const opmeans::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kParse;
    }
    return cli::kParse;
}
