#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace bwadapt
{
    struct Estimate
    {
        double value = std::numeric_limits<double>::quiet_NaN();
        // 95% Student-t half-width across batches.
        double half_width = std::numeric_limits<double>::quiet_NaN();
        std::size_t samples = 0;
        // False when every batch had a zero denominator.
        bool defined = false;
    };

    // Mean and 95% half-width of independent samples. One sample gives a
    // defined value with an undefined (NaN) half-width.
    Estimate batch_estimate(std::span<const double> samples);

    struct ClassCounters
    {
        std::uint64_t new_arrivals = 0;
        std::uint64_t new_blocks = 0;
        std::uint64_t handover_attempts = 0;
        std::uint64_t handover_drops = 0;
        std::uint64_t completions = 0;
        std::uint64_t admitted_roots = 0;
        std::uint64_t forced_terminations = 0;
        // Integrals over time of the class's summed allocation (kbps*s) and of
        // its live-call count (call*s).
        double allocation_integral = 0.0;
        double occupancy_integral = 0.0;

        ClassCounters &operator+=(const ClassCounters &other);
    };

    struct BatchRecord
    {
        std::vector<ClassCounters> classes;
        double allocated_integral = 0.0;
        double span_s = 0.0;
    };

    enum class Outcome : std::uint8_t
    {
        NewAdmitted,
        NewBlocked,
        HandoverAdmitted,
        HandoverDropped,
        Completed,
    };

    struct ClassSummary
    {
        ClassCounters totals;
        Estimate new_block;
        Estimate handover_drop;
        Estimate forced_termination;
        Estimate mean_allocation_kbps;
    };

    struct RunMetrics
    {
        double capacity_kbps = 0.0;
        std::vector<BatchRecord> batches;
        // Index k holds class k + 1.
        std::vector<ClassSummary> classes;
        ClassSummary aggregate;
        Estimate utilization;

        // Engine diagnostics; not part of the estimators.
        std::uint64_t events_processed = 0;
        std::uint64_t stale_events = 0;
        std::uint64_t invariant_checks = 0;
        std::uint64_t invariant_violations = 0;
        std::uint64_t trace_digest = 0;
        // Degradations below a class's priority-1 floor; only handover
        // admissions may cause them.
        std::uint64_t handover_deep_degradations = 0;
        std::vector<double> min_allocation_kbps;
        std::vector<std::string> warnings;
    };

    // Derives per-class and aggregate estimates from the raw batch counters.
    // Ratios are computed per batch; batches with a zero denominator are
    // skipped and the estimate is undefined if none remain.
    void finalize(RunMetrics &metrics);

    // Pools the batches of independent replications into one estimate set.
    RunMetrics merge_runs(std::span<const RunMetrics> runs);

    // Accumulates post-warmup counts into equal-time batches.
    class MetricsRecorder
    {
    public:
        MetricsRecorder(std::size_t num_classes, double capacity_kbps, double warmup_s, double end_s,
                        std::size_t num_batches);

        // Integrates the state held constant since the last call up to `now`.
        void advance(double now, std::span<const double> class_allocated, std::span<const std::size_t> class_counts,
                     double allocated);

        // `root_admitted_at` attributes a forced termination to the batch in
        // which its root new call was admitted; roots admitted during warmup
        // are not counted.
        void record(Outcome outcome, std::size_t class_index, double now, double root_admitted_at = 0.0);

        const std::vector<BatchRecord> &batches() const noexcept { return batches_; }
        RunMetrics finish() const;

    private:
        std::ptrdiff_t batch_of(double t) const;

        double capacity_;
        double warmup_;
        double end_;
        double batch_len_;
        double last_ = 0.0;
        std::vector<BatchRecord> batches_;
    };
}
