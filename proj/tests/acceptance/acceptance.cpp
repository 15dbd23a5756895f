// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and scenario sizes are fixed below.

#include "bwadapt/config.hpp"
#include "bwadapt/oracle.hpp"
#include "bwadapt/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace bwadapt;

namespace
{
    constexpr double kFloorTolerance = 1e-9;
    constexpr double kCrossOracleTolerance = 1e-9;
    constexpr std::size_t kRandomMatrices = 1000;
    constexpr std::size_t kRandomSystems = 100;
    constexpr std::uint64_t kOracleArrivals = 1'000'000;

    // Load sweep on the four-class cell. The grid runs from moderate load
    // (offered bandwidth about 0.74 of capacity) to heavy overload (1.48).
    const std::vector<double> kLambdaGrid{0.4, 0.5, 0.6, 0.7, 0.8};
    constexpr double kSweepDuration = 40000.0;
    constexpr double kSweepWarmup = 2000.0;
    constexpr std::size_t kSweepReps = 2;
    constexpr std::uint64_t kSweepSeed = 20240601;

    constexpr std::uint64_t kMinCheckedEvents = 100000;

    struct Result
    {
        bool pass = false;
        std::string detail;
    };

    const std::string kSourceDir = BWADAPT_SOURCE_DIR;

    std::string fmt(const char *format, auto... args)
    {
        char buf[512];
        std::snprintf(buf, sizeof buf, format, args...);
        return buf;
    }

    Result policy_table()
    {
        const auto config = load_config(kSourceDir + "/configs/default.conf");
        const PolicyMatrix matrix(config.classes);
        const auto table = format_policy_table(matrix);
        bool ok = matrix.num_classes() == 4;
        ok = ok && matrix.gamma(2, 0) == 0.6 && matrix.gamma(3, 0) == 0.7 && matrix.gamma(4, 0) == 0.8;
        double worst_ratio = 0.0;
        double worst_floor = 0.0;
        for (std::size_t m = 1; m <= 4 && ok; ++m)
        {
            for (std::size_t p = 0; p <= 4; ++p)
            {
                if (m == 1)
                {
                    ok = ok && matrix.gamma(1, p) == 0.0;
                }
                if (p > 0)
                {
                    worst_ratio = std::max(worst_ratio, std::abs(matrix.gamma(m, p) - 0.95 * matrix.gamma(m, p - 1)));
                }
                const double floor = (1.0 - matrix.gamma(m, p)) * matrix.requested(m);
                worst_floor = std::max(worst_floor, std::abs(floor - matrix.floor(m, p)));
            }
        }
        ok = ok && worst_ratio <= 1e-15 && worst_floor <= kFloorTolerance;
        ok = ok && table.find("61.35555") != std::string::npos;
        return {ok, fmt("max |g_p - 0.95 g_(p-1)| = %.2g, max floor error = %.2g kbps", worst_ratio, worst_floor)};
    }

    Result matrix_properties()
    {
        const PolicyMatrix base(default_classes());
        bool ok = !validate_matrix(base).has_value();
        std::mt19937_64 gen(101);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        std::size_t perturbations = 0;
        std::size_t caught = 0;
        for (std::size_t m = 2; m <= 4; ++m)
        {
            for (std::size_t p = 1; p <= 4; ++p)
            {
                for (int k = 0; k < 25; ++k)
                {
                    auto classes = default_classes();
                    auto &g = classes[m - 1].gamma;
                    g[p] = std::min(0.999, g[p - 1] + 1e-9 + (0.999 - g[p - 1]) * unit(gen));
                    ++perturbations;
                    const auto v = validate_matrix(PolicyMatrix(classes));
                    caught += v && v->class_index == m && v->priority == p;
                }
            }
            for (double bad : {1.0, 1.2, -0.1})
            {
                auto classes = default_classes();
                classes[m - 1].gamma[0] = bad;
                ++perturbations;
                caught += validate_matrix(PolicyMatrix(classes)).has_value();
            }
        }

        double worst = 0.0;
        for (std::size_t trial = 0; trial < kRandomMatrices; ++trial)
        {
            const std::size_t num = 1 + gen() % 6;
            std::vector<TrafficClass> classes(num);
            for (std::size_t k = 0; k < num; ++k)
            {
                classes[k].name = "c" + std::to_string(k);
                classes[k].requested_kbps = 1.0 + 1000.0 * unit(gen);
                classes[k].elastic = true;
                classes[k].arrival_weight = 1.0;
                classes[k].mean_duration_s = 1.0;
                // Random non-increasing row in [0, 1).
                std::vector<double> row(num + 1);
                for (auto &x : row)
                {
                    x = 0.999 * unit(gen);
                }
                std::sort(row.begin(), row.end(), std::greater<>());
                classes[k].gamma = row;
            }
            const PolicyMatrix matrix(classes);
            if (validate_matrix(matrix))
            {
                ok = false;
                continue;
            }
            for (std::size_t m = 1; m <= num; ++m)
            {
                Call call;
                call.class_index = m;
                call.allocation_kbps = matrix.requested(m);
                for (std::size_t p = 0; p <= num; ++p)
                {
                    const double r = releasable_per_call(call, RequestPriority::new_call(p), matrix);
                    worst = std::max(worst, std::abs(r - matrix.gamma(m, p) * matrix.requested(m)));
                }
            }
        }
        ok = ok && caught == perturbations && worst <= 1e-9;
        return {ok, fmt("%zu/%zu perturbations rejected, max |releasable - g*C| = %.2g over %zu matrices", caught,
                        perturbations, worst, kRandomMatrices)};
    }

    Result oracle_equivalence()
    {
        ValidationOptions options;
        options.min_arrivals = kOracleArrivals;
        const auto checks = validate_against_oracles(options);
        bool ok = checks.size() == 6;
        std::ostringstream os;
        for (const auto &c : checks)
        {
            ok = ok && c.pass && c.arrivals >= kOracleArrivals;
            os << fmt("%s/%s %.4f vs %.4f; ", c.scenario.c_str(), c.traffic_class.c_str(), c.simulated, c.oracle);
        }
        return {ok, os.str()};
    }

    Result cross_oracle()
    {
        std::mt19937_64 gen(404);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double worst = 0.0;
        for (std::size_t trial = 0; trial < kRandomSystems; ++trial)
        {
            oracle::MultirateSystem sys;
            sys.capacity = 2 + gen() % 39;
            const std::size_t k = 1 + gen() % 3;
            for (std::size_t i = 0; i < k; ++i)
            {
                sys.classes.push_back({1 + gen() % sys.capacity, 0.05 + 4.0 * unit(gen), 0.1 + 10.0 * unit(gen)});
            }
            const auto kr = oracle::kaufman_roberts(sys);
            const auto ct = oracle::ctmc_blocking(sys);
            for (std::size_t i = 0; i < k; ++i)
            {
                worst = std::max(worst, std::abs(kr[i] - ct[i]));
            }
        }
        return {worst <= kCrossOracleTolerance, fmt("max |KR - CTMC| = %.2g over %zu systems", worst, kRandomSystems)};
    }

    // Load sweep shared by the trend criteria.
    struct Sweep
    {
        std::vector<SweepPoint> proposed;
        std::vector<SweepPoint> adaptive;
        std::vector<SweepPoint> non_adaptive;
    };

    Sweep run_trend_sweep()
    {
        SweepSpec spec;
        spec.base = load_config(kSourceDir + "/configs/default.conf");
        spec.base.duration_s = kSweepDuration;
        spec.base.warmup_s = kSweepWarmup;
        spec.base.seed = kSweepSeed;
        spec.lambda_grid = kLambdaGrid;
        spec.replications = kSweepReps;
        spec.workers = workers_from_env();
        const auto points = run_sweep(spec);
        Sweep s;
        for (const auto &p : points)
        {
            (p.scheme == SchemeKind::ProposedPriorityMultilevel ? s.proposed
             : p.scheme == SchemeKind::AdaptiveNonPriority      ? s.adaptive
                                                                : s.non_adaptive)
                .push_back(p);
        }
        return s;
    }

    double hw(const Estimate &e) { return std::isfinite(e.half_width) ? e.half_width : 0.0; }

    Result dropping_trend(const Sweep &s)
    {
        bool ok = true;
        std::ostringstream os;
        for (std::size_t i = 0; i < kLambdaGrid.size(); ++i)
        {
            const auto &pr = s.proposed[i].metrics.aggregate.handover_drop;
            const auto &ad = s.adaptive[i].metrics.aggregate.handover_drop;
            // CI-aware "no worse": any excess stays within the larger half-width.
            const bool le = pr.value - ad.value <= std::max(hw(pr), hw(ad));
            ok = ok && le;
            os << fmt("l=%.1f drop P %.4f A %.4f; ", kLambdaGrid[i], pr.value, ad.value);
        }
        // "Strictly higher" at the top load point: the gap exceeds the larger half-width.
        const auto higher = [](const Estimate &hi, const Estimate &lo) {
            return hi.value - lo.value > std::max(hw(hi), hw(lo));
        };
        const auto &top_na = s.non_adaptive.back().metrics;
        const auto &top_pr = s.proposed.back().metrics;
        const bool drop_higher = higher(top_na.aggregate.handover_drop, top_pr.aggregate.handover_drop);
        const bool voice_higher = higher(top_na.classes[0].new_block, top_pr.classes[0].new_block);
        os << fmt("top load non-adaptive drop %.4f+-%.4f vs %.4f+-%.4f, voice blocking %.4f+-%.4f vs %.4f+-%.4f",
                  top_na.aggregate.handover_drop.value, hw(top_na.aggregate.handover_drop),
                  top_pr.aggregate.handover_drop.value, hw(top_pr.aggregate.handover_drop),
                  top_na.classes[0].new_block.value, hw(top_na.classes[0].new_block),
                  top_pr.classes[0].new_block.value, hw(top_pr.classes[0].new_block));
        return {ok && drop_higher && voice_higher, os.str()};
    }

    Result forced_termination_trend(const Sweep &s)
    {
        bool ok = true;
        std::ostringstream os;
        for (std::size_t i = 0; i < kLambdaGrid.size(); ++i)
        {
            const auto &pr = s.proposed[i].metrics.aggregate.forced_termination;
            const auto &ad = s.adaptive[i].metrics.aggregate.forced_termination;
            const double bound = std::max(hw(pr), hw(ad));
            // Identical estimates (both zero at light load) count as equal.
            const double diff = std::abs(pr.value - ad.value);
            ok = ok && pr.defined && ad.defined && (diff < bound || diff == 0.0);
            os << fmt("l=%.1f P %.4f A %.4f (|d| %.4f, hw %.4f); ", kLambdaGrid[i], pr.value, ad.value,
                      std::abs(pr.value - ad.value), bound);
        }
        return {ok, os.str()};
    }

    Result web_allocation_trend(const Sweep &s)
    {
        const PolicyMatrix matrix(default_classes());
        bool ok = true;
        std::ostringstream os;
        for (std::size_t i = 0; i < kLambdaGrid.size(); ++i)
        {
            const auto &e = s.proposed[i].metrics.classes[1].mean_allocation_kbps;
            os << fmt("%.2f ", e.value);
            if (i > 0)
            {
                const auto &prev = s.proposed[i - 1].metrics.classes[1].mean_allocation_kbps;
                ok = ok && e.value <= prev.value + std::max(hw(e), hw(prev));
            }
        }

        // Highest load with every event checked: floors are never crossed,
        // and only handovers push web calls into the band below C_{2,1}.
        auto config = load_config(kSourceDir + "/configs/default.conf");
        config.lambda = kLambdaGrid.back();
        config.duration_s = kSweepDuration;
        config.warmup_s = kSweepWarmup;
        config.seed = kSweepSeed;
        config.check_invariants = true;
        const auto m = run(config);
        const double min_web = m.min_allocation_kbps[1];
        const double floor0 = matrix.floor(2, 0);
        const double floor1 = matrix.floor(2, 1);
        ok = ok && min_web >= floor0 - kBandwidthTolerance && min_web < floor1;
        ok = ok && m.handover_deep_degradations > 0 && m.invariant_violations == 0;
        os << fmt("kbps; top load min web %.4f (C20 %.1f, C21 %.2f), %llu handover degradations below C_(m,1), "
                  "%llu violations",
                  min_web, floor0, floor1, static_cast<unsigned long long>(m.handover_deep_degradations),
                  static_cast<unsigned long long>(m.invariant_violations));
        return {ok, os.str()};
    }

    Result determinism()
    {
        SweepSpec spec;
        spec.base = load_config(kSourceDir + "/configs/default.conf");
        spec.base.duration_s = 6000.0;
        spec.base.warmup_s = 1000.0;
        spec.lambda_grid = {0.5, 0.9};
        spec.replications = 2;
        const PolicyMatrix matrix(spec.base.classes);
        spec.workers = 1;
        const auto a = sweep_csv(run_sweep(spec), matrix);
        spec.workers = 3;
        const auto b = sweep_csv(run_sweep(spec), matrix);
        const bool identical = a == b;

        auto config = spec.base;
        config.lambda = 0.9;
        config.duration_s = 30000.0;
        config.check_invariants = true;
        std::uint64_t events = 0;
        std::uint64_t violations = 0;
        std::uint64_t checks = 0;
        for (auto scheme : {SchemeKind::ProposedPriorityMultilevel, SchemeKind::AdaptiveNonPriority,
                            SchemeKind::NonAdaptiveNonPriority})
        {
            config.scheme = scheme;
            const auto m = run(config);
            events += m.events_processed;
            violations += m.invariant_violations;
            checks += m.invariant_checks;
        }
        return {identical && events >= kMinCheckedEvents && violations == 0,
                fmt("CSV %s (%zu bytes); %llu events, %llu checks, %llu violations",
                    identical ? "byte-identical" : "DIFFERS", a.size(), static_cast<unsigned long long>(events),
                    static_cast<unsigned long long>(checks), static_cast<unsigned long long>(violations))};
    }

    bool report(int id, const char *name, const std::function<Result()> &check, double budget_s)
    {
        const auto start = std::chrono::steady_clock::now();
        Result r;
        try
        {
            r = check();
        }
        catch (const std::exception &e)
        {
            r = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= budget_s;
        const bool pass = r.pass && in_time;
        std::printf("[%s] %d %s (%.2f s, limit %.0f s): %s\n", pass ? "PASS" : "FAIL", id, name, secs, budget_s,
                    r.detail.c_str());
        std::fflush(stdout);
        return pass;
    }
}

int main()
{
    bool all = true;
    all &= report(1, "policy table", policy_table, 1.0);
    all &= report(2, "matrix ordering and releasable bandwidth", matrix_properties, 10.0);
    all &= report(3, "simulator vs Erlang-B and Kaufman-Roberts", oracle_equivalence, 120.0);
    all &= report(4, "Kaufman-Roberts vs CTMC", cross_oracle, 60.0);

    Sweep sweep;
    const auto start = std::chrono::steady_clock::now();
    std::string sweep_error;
    try
    {
        sweep = run_trend_sweep();
    }
    catch (const std::exception &e)
    {
        sweep_error = e.what();
    }
    const double sweep_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto with_sweep = [&](auto fn, double extra_s) {
        return [&, fn, extra_s]() -> Result {
            if (!sweep_error.empty())
            {
                return {false, "sweep failed: " + sweep_error};
            }
            const auto t0 = std::chrono::steady_clock::now();
            auto r = fn(sweep);
            const double own = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (sweep_s + own > extra_s)
            {
                r.pass = false;
                r.detail += fmt(" [sweep %.1f s over budget]", sweep_s);
            }
            return r;
        };
    };
    std::printf("load sweep: %zu points x 3 schemes x %zu replications, %.1f s\n", kLambdaGrid.size(), kSweepReps,
                sweep_s);
    all &= report(5, "handover dropping and blocking trend", with_sweep(dropping_trend, 600.0), 600.0);
    all &= report(6, "forced termination trend", with_sweep(forced_termination_trend, 600.0), 600.0);
    all &= report(7, "web allocation trend and floors", with_sweep(web_allocation_trend, 600.0), 600.0);
    all &= report(8, "determinism and conservation", determinism, 600.0);

    std::printf("%s\n", all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL");
    return all ? 0 : 1;
}
