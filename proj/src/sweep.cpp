#include "bwadapt/sweep.hpp"

#include "bwadapt/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace bwadapt
{
    std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t lambda_index, std::size_t replication)
    {
        // splitmix64 finalizer over the combined key
        std::uint64_t z = base_seed + 0x9e3779b97f4a7c15ULL * (1 + (static_cast<std::uint64_t>(lambda_index) << 20) +
                                                                replication);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::size_t workers_from_env()
    {
        if (const char *env = std::getenv("BWADAPT_WORKERS"))
        {
            std::size_t n = 0;
            const std::string_view s(env);
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
            if (ec == std::errc{} && ptr == s.data() + s.size() && n > 0)
            {
                return n;
            }
        }
        return std::max(1U, std::thread::hardware_concurrency());
    }

    std::vector<SweepPoint> run_sweep(const SweepSpec &spec)
    {
        if (spec.lambda_grid.empty())
        {
            throw ConfigError("lambda grid is empty");
        }
        if (spec.schemes.empty())
        {
            throw ConfigError("no schemes selected");
        }
        if (spec.replications == 0)
        {
            throw ConfigError("replications must be at least 1");
        }

        struct Job
        {
            std::size_t point;
            ScenarioConfig config;
        };
        std::vector<Job> jobs;
        for (std::size_t s = 0; s < spec.schemes.size(); ++s)
        {
            for (std::size_t i = 0; i < spec.lambda_grid.size(); ++i)
            {
                for (std::size_t r = 0; r < spec.replications; ++r)
                {
                    ScenarioConfig c = spec.base;
                    c.scheme = spec.schemes[s];
                    c.lambda = spec.lambda_grid[i];
                    c.seed = replication_seed(spec.base.seed, i, r);
                    validate_config(c);
                    jobs.push_back({s * spec.lambda_grid.size() + i, std::move(c)});
                }
            }
        }

        std::vector<RunMetrics> results(jobs.size());
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (std::size_t j = next++; j < jobs.size() && !failed; j = next++)
            {
                try
                {
                    results[j] = run(jobs[j].config);
                }
                catch (...)
                {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                    {
                        error = std::current_exception();
                    }
                    failed = true;
                }
            }
        };
        const std::size_t n_workers = std::clamp<std::size_t>(spec.workers, 1, jobs.size());
        if (n_workers == 1)
        {
            worker();
        }
        else
        {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < n_workers; ++w)
            {
                pool.emplace_back(worker);
            }
        }
        if (error)
        {
            std::rethrow_exception(error);
        }

        std::vector<SweepPoint> points;
        for (std::size_t s = 0; s < spec.schemes.size(); ++s)
        {
            for (std::size_t i = 0; i < spec.lambda_grid.size(); ++i)
            {
                const std::size_t first = (s * spec.lambda_grid.size() + i) * spec.replications;
                const std::span<const RunMetrics> reps(results.data() + first, spec.replications);
                points.push_back({spec.schemes[s], spec.lambda_grid[i], merge_runs(reps)});
            }
        }
        return points;
    }

    namespace
    {
        std::string num(double v)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.9g", v);
            return buf;
        }

        std::string est(const Estimate &e, bool half_width)
        {
            const double v = half_width ? e.half_width : e.value;
            return e.defined && std::isfinite(v) ? num(v) : "NA";
        }

        void row(std::ostringstream &os, const SweepPoint &p, const std::string &label, const ClassSummary &s)
        {
            os << to_string(p.scheme) << ',' << num(p.lambda) << ',' << label << ',' << est(s.new_block, false) << ','
               << est(s.new_block, true) << ',' << est(s.handover_drop, false) << ',' << est(s.handover_drop, true)
               << ',' << est(s.forced_termination, false) << ',' << est(s.forced_termination, true) << ','
               << est(s.mean_allocation_kbps, false) << ',' << est(p.metrics.utilization, false) << '\n';
        }
    }

    std::string sweep_csv(const std::vector<SweepPoint> &points, const PolicyMatrix &matrix)
    {
        std::ostringstream os;
        os << kCsvHeader << '\n';
        for (const auto &p : points)
        {
            for (std::size_t k = 0; k < p.metrics.classes.size(); ++k)
            {
                row(os, p, matrix.traffic_class(k + 1).name, p.metrics.classes[k]);
            }
            row(os, p, "all", p.metrics.aggregate);
        }
        return os.str();
    }

    std::vector<double> parse_double_list(std::string_view text)
    {
        std::vector<double> out;
        std::size_t start = 0;
        while (start <= text.size())
        {
            auto comma = text.find(',', start);
            if (comma == std::string_view::npos)
            {
                comma = text.size();
            }
            std::string_view item = text.substr(start, comma - start);
            while (!item.empty() && item.front() == ' ')
            {
                item.remove_prefix(1);
            }
            while (!item.empty() && item.back() == ' ')
            {
                item.remove_suffix(1);
            }
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
            if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size())
            {
                throw ConfigError("cannot parse number '" + std::string(item) + "' in list");
            }
            out.push_back(v);
            start = comma + 1;
        }
        return out;
    }

    namespace
    {
        TrafficClass fixed_rate_class(std::string name, double kbps, double weight, std::size_t num_classes)
        {
            TrafficClass c;
            c.name = std::move(name);
            c.requested_kbps = kbps;
            c.gamma.assign(num_classes + 1, 0.0);
            c.arrival_weight = weight;
            c.mean_duration_s = 120.0;
            c.elastic = false;
            return c;
        }

        ScenarioConfig loss_scenario(double capacity_kbps, std::vector<TrafficClass> classes, double total_lambda)
        {
            ScenarioConfig c;
            c.capacity_kbps = capacity_kbps;
            c.classes = std::move(classes);
            c.lambda = total_lambda;
            c.mean_dwell_s = std::numeric_limits<double>::infinity();
            c.scheme = SchemeKind::NonAdaptiveNonPriority;
            c.warmup_s = 2000.0;
            c.duration_s = 200000.0;
            c.batches = 20;
            return c;
        }

        // Offered loads in Erlangs for each class of a loss scenario.
        ScenarioConfig with_loads(double capacity_kbps, std::vector<TrafficClass> classes,
                                  const std::vector<double> &erlangs)
        {
            double total = 0.0;
            for (std::size_t k = 0; k < classes.size(); ++k)
            {
                classes[k].arrival_weight = erlangs[k];
                total += erlangs[k] / classes[k].mean_duration_s;
            }
            return loss_scenario(capacity_kbps, std::move(classes), total);
        }

        oracle::MultirateSystem as_multirate(const ScenarioConfig &c)
        {
            std::vector<double> kbps;
            for (const auto &cls : c.classes)
            {
                kbps.push_back(cls.requested_kbps);
            }
            kbps.push_back(c.capacity_kbps);
            const double unit = static_cast<double>(oracle::bandwidth_unit(kbps));
            oracle::MultirateSystem sys;
            sys.capacity = oracle::to_channels(c.capacity_kbps, unit);
            double weight = 0.0;
            for (const auto &cls : c.classes)
            {
                weight += cls.arrival_weight;
            }
            for (const auto &cls : c.classes)
            {
                const double lambda_k = c.lambda * cls.arrival_weight / weight;
                sys.classes.push_back({oracle::to_channels(cls.requested_kbps, unit), lambda_k * cls.mean_duration_s,
                                       cls.mean_duration_s});
            }
            return sys;
        }
    }

    ScenarioConfig erlang_check_scenario()
    {
        return with_loads(64.0, {fixed_rate_class("voice", 32.0, 1.0, 1)}, {1.0});
    }

    ScenarioConfig two_class_check_scenario()
    {
        // 4 kbps unit: capacity 40 units, voice 8, background 15.
        return with_loads(160.0, {fixed_rate_class("voice", 32.0, 1.0, 2), fixed_rate_class("background", 60.0, 1.0, 2)},
                          {2.0, 1.2});
    }

    ScenarioConfig three_class_check_scenario()
    {
        // 4 kbps unit: capacity 40 units, voice 8, background 15, web 30.
        return with_loads(160.0,
                          {fixed_rate_class("voice", 32.0, 1.0, 3), fixed_rate_class("background", 60.0, 1.0, 3),
                           fixed_rate_class("web", 120.0, 1.0, 3)},
                          {1.5, 0.8, 0.3});
    }

    std::vector<ValidationCheck> validate_against_oracles(const ValidationOptions &options)
    {
        struct Case
        {
            std::string name;
            ScenarioConfig config;
        };
        std::vector<Case> cases{{"erlang_b_2ch", erlang_check_scenario()},
                                {"kaufman_roberts_2class", two_class_check_scenario()},
                                {"kaufman_roberts_3class", three_class_check_scenario()}};

        std::vector<ValidationCheck> checks;
        for (auto &[name, config] : cases)
        {
            const auto sys = as_multirate(config);
            const auto expected = config.classes.size() == 1
                                      ? std::vector<double>{oracle::erlang_b(sys.capacity / sys.classes[0].channels,
                                                                             sys.classes[0].offered_erlangs)}
                                      : oracle::kaufman_roberts(sys);

            // Post-warmup window sized for the requested number of arrivals.
            config.seed = options.seed;
            config.duration_s =
                config.warmup_s + 1.02 * static_cast<double>(options.min_arrivals) / config.lambda;
            if (options.negative_control)
            {
                for (auto &cls : config.classes)
                {
                    cls.mean_duration_s *= 2.0;
                }
            }
            const auto metrics = run(config);
            for (std::size_t k = 0; k < config.classes.size(); ++k)
            {
                const auto &s = metrics.classes[k];
                ValidationCheck check;
                check.scenario = name;
                check.traffic_class = config.classes[k].name;
                check.simulated = s.new_block.value;
                check.half_width = s.new_block.half_width;
                check.oracle = expected[k];
                check.relative_error = std::abs(check.simulated - check.oracle) / check.oracle;
                check.arrivals = metrics.aggregate.totals.new_arrivals;
                check.pass = s.new_block.defined &&
                             (check.relative_error <= 0.05 || std::abs(check.simulated - check.oracle) <= check.half_width);
                checks.push_back(std::move(check));
            }
        }
        return checks;
    }
}
