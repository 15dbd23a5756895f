#pragma once

#include "bwadapt/engine.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bwadapt
{
    inline constexpr std::string_view kCsvHeader = "scheme,lambda,class,new_block_prob,new_block_ci,ho_drop_prob,"
                                                   "ho_drop_ci,forced_term_prob,forced_term_ci,mean_alloc_kbps,"
                                                   "utilization";

    struct SweepSpec
    {
        ScenarioConfig base;
        std::vector<double> lambda_grid;
        std::vector<SchemeKind> schemes{SchemeKind::ProposedPriorityMultilevel, SchemeKind::AdaptiveNonPriority,
                                        SchemeKind::NonAdaptiveNonPriority};
        std::size_t replications = 1;
        std::size_t workers = 1;
    };

    struct SweepPoint
    {
        SchemeKind scheme;
        double lambda = 0.0;
        // Replications pooled batch-wise.
        RunMetrics metrics;
    };

    // Seed shared by every scheme at one (load point, replication) so the
    // schemes see common random numbers.
    std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t lambda_index, std::size_t replication);

    // Worker count from BWADAPT_WORKERS, defaulting to the hardware thread count.
    std::size_t workers_from_env();

    // Runs every (scheme, lambda, replication) and returns points ordered by
    // scheme then lambda, independent of worker scheduling.
    std::vector<SweepPoint> run_sweep(const SweepSpec &spec);

    // One row per (scheme, lambda, class) followed by an "all" row per
    // (scheme, lambda). Undefined estimates print as NA.
    std::string sweep_csv(const std::vector<SweepPoint> &points, const PolicyMatrix &matrix);

    std::vector<double> parse_double_list(std::string_view text);

    struct ValidationCheck
    {
        std::string scenario;
        std::string traffic_class;
        double simulated = 0.0;
        double half_width = 0.0;
        double oracle = 0.0;
        double relative_error = 0.0;
        std::uint64_t arrivals = 0;
        bool pass = false;
    };

    struct ValidationOptions
    {
        std::uint64_t min_arrivals = 1'000'000;
        std::uint64_t seed = 7;
        // Simulates with twice the holding time the oracle assumes; every
        // comparison is then expected to fail.
        bool negative_control = false;
    };

    // Simulator in non-adaptive, no-handover mode against Erlang-B and
    // Kaufman-Roberts. A comparison passes when the relative error is at
    // most 5% or the oracle lies inside the 95% interval.
    std::vector<ValidationCheck> validate_against_oracles(const ValidationOptions &options = {});

    // Scenario definitions used by validate_against_oracles.
    ScenarioConfig erlang_check_scenario();
    ScenarioConfig two_class_check_scenario();
    ScenarioConfig three_class_check_scenario();
}
