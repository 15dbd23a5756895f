#include "bwadapt/config.hpp"
#include "bwadapt/sweep.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace
{
    enum ExitCode : int
    {
        kOk = 0,
        kConfigError = 1,
        kValidationFailure = 2,
        kRuntimeError = 3,
    };

    std::vector<bwadapt::SchemeKind> parse_schemes(const std::string &text)
    {
        std::vector<bwadapt::SchemeKind> out;
        std::size_t start = 0;
        while (start <= text.size())
        {
            auto comma = text.find(',', start);
            if (comma == std::string::npos)
            {
                comma = text.size();
            }
            const std::string name = text.substr(start, comma - start);
            auto scheme = bwadapt::parse_scheme(name);
            if (!scheme)
            {
                throw bwadapt::ConfigError("unknown scheme '" + name + "'");
            }
            out.push_back(*scheme);
            start = comma + 1;
        }
        return out;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Priority-based multi-level bandwidth adaptation: cell simulator and policy tools"};
    app.require_subcommand(1);

    std::string config_path;
    std::string lambda_grid;
    std::string schemes;
    std::size_t reps = 1;
    std::string out_path;
    double duration = 0.0;
    double warmup = -1.0;
    std::uint64_t seed = 0;
    bool check = false;

    auto *simulate = app.add_subcommand("simulate", "Sweep offered load across schemes and write CSV");
    simulate->add_option("--config", config_path, "Scenario file")->required();
    simulate->add_option("--lambda-grid", lambda_grid, "Comma-separated new-call arrival rates (calls/s)");
    simulate->add_option("--schemes", schemes,
                         "Comma-separated schemes (default: the config's scheme); "
                         "proposed_priority_multilevel, adaptive_non_priority, non_adaptive_non_priority");
    simulate->add_option("--reps", reps, "Replications per load point")->check(CLI::PositiveNumber);
    simulate->add_option("--out", out_path, "CSV output file (default: stdout)");
    simulate->add_option("--duration", duration, "Override simulated seconds");
    simulate->add_option("--warmup", warmup, "Override warm-up seconds");
    simulate->add_option("--seed", seed, "Override base seed");
    simulate->add_flag("--check-invariants", check, "Verify capacity and floor invariants after every event");

    std::uint64_t arrivals = 1'000'000;
    std::uint64_t validate_seed = 7;
    bool negative_control = false;
    auto *validate = app.add_subcommand("validate", "Compare the simulator against Erlang-B and Kaufman-Roberts");
    validate->add_option("--arrivals", arrivals, "Post-warm-up arrivals per scenario");
    validate->add_option("--seed", validate_seed, "Seed");
    validate->add_flag("--negative-control", negative_control,
                       "Deliberately mis-set the holding time; every comparison should fail");

    std::string table_config;
    std::string table_scheme;
    auto *table = app.add_subcommand("policy-table", "Print the degradation factors and floors");
    table->add_option("--config", table_config, "Scenario file")->required();
    table->add_option("--scheme", table_scheme, "Apply a comparison scheme first");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try
    {
        if (*table)
        {
            const auto config = bwadapt::load_config(table_config);
            auto matrix = bwadapt::PolicyMatrix(config.classes);
            if (!table_scheme.empty())
            {
                auto scheme = bwadapt::parse_scheme(table_scheme);
                if (!scheme)
                {
                    throw bwadapt::ConfigError("unknown scheme '" + table_scheme + "'");
                }
                matrix = bwadapt::apply_scheme(matrix, *scheme);
            }
            std::cout << bwadapt::format_policy_table(matrix);
            return kOk;
        }

        if (*validate)
        {
            bwadapt::ValidationOptions options;
            options.min_arrivals = arrivals;
            options.seed = validate_seed;
            options.negative_control = negative_control;
            const auto checks = bwadapt::validate_against_oracles(options);
            bool all = true;
            std::printf("%-24s %-12s %12s %12s %12s %9s %10s  %s\n", "scenario", "class", "simulated", "ci95",
                        "oracle", "rel_err", "arrivals", "result");
            for (const auto &c : checks)
            {
                std::printf("%-24s %-12s %12.6g %12.6g %12.6g %9.4f %10llu  %s\n", c.scenario.c_str(),
                            c.traffic_class.c_str(), c.simulated, c.half_width, c.oracle, c.relative_error,
                            static_cast<unsigned long long>(c.arrivals), c.pass ? "PASS" : "FAIL");
                all = all && c.pass;
            }
            return all ? kOk : kValidationFailure;
        }

        auto config = bwadapt::load_config(config_path);
        if (duration > 0.0)
        {
            config.duration_s = duration;
        }
        if (warmup >= 0.0)
        {
            config.warmup_s = warmup;
        }
        if (simulate->count("--seed") > 0)
        {
            config.seed = seed;
        }
        config.check_invariants = check;
        bwadapt::validate_config(config);

        bwadapt::SweepSpec spec;
        spec.base = config;
        spec.lambda_grid = lambda_grid.empty() ? std::vector<double>{config.lambda}
                                               : bwadapt::parse_double_list(lambda_grid);
        spec.schemes = schemes.empty() ? std::vector<bwadapt::SchemeKind>{config.scheme} : parse_schemes(schemes);
        spec.replications = reps;
        spec.workers = bwadapt::workers_from_env();
        const auto points = bwadapt::run_sweep(spec);

        std::uint64_t violations = 0;
        for (const auto &p : points)
        {
            violations += p.metrics.invariant_violations;
            for (const auto &w : p.metrics.warnings)
            {
                std::cerr << "warning: " << w << '\n';
            }
        }
        const auto csv = bwadapt::sweep_csv(points, bwadapt::PolicyMatrix(config.classes));
        if (out_path.empty())
        {
            std::cout << csv;
        }
        else
        {
            std::ofstream out(out_path, std::ios::binary);
            out << csv;
            if (!out)
            {
                throw std::runtime_error("cannot write " + out_path);
            }
        }
        if (violations > 0)
        {
            std::cerr << "error: " << violations << " invariant violations\n";
            return kRuntimeError;
        }
        return kOk;
    }
    catch (const bwadapt::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}
