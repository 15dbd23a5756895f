#include "bwadapt/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bwadapt
{
    Estimate batch_estimate(std::span<const double> samples)
    {
        Estimate e;
        e.samples = samples.size();
        if (samples.empty())
        {
            return e;
        }
        e.defined = true;
        double sum = 0.0;
        for (double x : samples)
        {
            sum += x;
        }
        const double n = static_cast<double>(samples.size());
        e.value = sum / n;
        if (samples.size() < 2)
        {
            return e;
        }
        double ss = 0.0;
        for (double x : samples)
        {
            ss += (x - e.value) * (x - e.value);
        }
        const double sd = std::sqrt(ss / (n - 1.0));
        const boost::math::students_t dist(n - 1.0);
        e.half_width = boost::math::quantile(dist, 0.975) * sd / std::sqrt(n);
        return e;
    }

    ClassCounters &ClassCounters::operator+=(const ClassCounters &other)
    {
        new_arrivals += other.new_arrivals;
        new_blocks += other.new_blocks;
        handover_attempts += other.handover_attempts;
        handover_drops += other.handover_drops;
        completions += other.completions;
        admitted_roots += other.admitted_roots;
        forced_terminations += other.forced_terminations;
        allocation_integral += other.allocation_integral;
        occupancy_integral += other.occupancy_integral;
        return *this;
    }

    namespace
    {
        template <typename Num, typename Den>
        Estimate ratio_estimate(const std::vector<ClassCounters> &per_batch, Num num, Den den)
        {
            std::vector<double> samples;
            samples.reserve(per_batch.size());
            for (const auto &c : per_batch)
            {
                const double d = static_cast<double>(den(c));
                if (d > 0.0)
                {
                    samples.push_back(static_cast<double>(num(c)) / d);
                }
            }
            return batch_estimate(samples);
        }

        ClassSummary summarize(const std::vector<ClassCounters> &per_batch)
        {
            ClassSummary s;
            for (const auto &c : per_batch)
            {
                s.totals += c;
            }
            s.new_block = ratio_estimate(
                per_batch, [](const ClassCounters &c) { return c.new_blocks; },
                [](const ClassCounters &c) { return c.new_arrivals; });
            s.handover_drop = ratio_estimate(
                per_batch, [](const ClassCounters &c) { return c.handover_drops; },
                [](const ClassCounters &c) { return c.handover_attempts; });
            s.forced_termination = ratio_estimate(
                per_batch, [](const ClassCounters &c) { return c.forced_terminations; },
                [](const ClassCounters &c) { return c.admitted_roots; });
            s.mean_allocation_kbps = ratio_estimate(
                per_batch, [](const ClassCounters &c) { return c.allocation_integral; },
                [](const ClassCounters &c) { return c.occupancy_integral; });
            return s;
        }
    }

    void finalize(RunMetrics &metrics)
    {
        const std::size_t num_classes = metrics.batches.empty() ? 0 : metrics.batches.front().classes.size();
        metrics.classes.assign(num_classes, ClassSummary{});
        std::vector<ClassCounters> column(metrics.batches.size());
        for (std::size_t k = 0; k < num_classes; ++k)
        {
            for (std::size_t b = 0; b < metrics.batches.size(); ++b)
            {
                column[b] = metrics.batches[b].classes.at(k);
            }
            metrics.classes[k] = summarize(column);
        }
        for (std::size_t b = 0; b < metrics.batches.size(); ++b)
        {
            column[b] = ClassCounters{};
            for (const auto &c : metrics.batches[b].classes)
            {
                column[b] += c;
            }
        }
        metrics.aggregate = summarize(column);

        std::vector<double> util;
        for (const auto &b : metrics.batches)
        {
            if (b.span_s > 0.0 && metrics.capacity_kbps > 0.0)
            {
                util.push_back(b.allocated_integral / (b.span_s * metrics.capacity_kbps));
            }
        }
        metrics.utilization = batch_estimate(util);
    }

    RunMetrics merge_runs(std::span<const RunMetrics> runs)
    {
        RunMetrics merged;
        if (runs.empty())
        {
            return merged;
        }
        merged.capacity_kbps = runs.front().capacity_kbps;
        merged.min_allocation_kbps = runs.front().min_allocation_kbps;
        for (const auto &run : runs)
        {
            merged.batches.insert(merged.batches.end(), run.batches.begin(), run.batches.end());
            merged.events_processed += run.events_processed;
            merged.stale_events += run.stale_events;
            merged.invariant_checks += run.invariant_checks;
            merged.invariant_violations += run.invariant_violations;
            merged.handover_deep_degradations += run.handover_deep_degradations;
            merged.trace_digest = merged.trace_digest * 1099511628211ULL ^ run.trace_digest;
            for (std::size_t k = 0; k < merged.min_allocation_kbps.size() && k < run.min_allocation_kbps.size(); ++k)
            {
                merged.min_allocation_kbps[k] = std::min(merged.min_allocation_kbps[k], run.min_allocation_kbps[k]);
            }
            for (const auto &w : run.warnings)
            {
                if (std::find(merged.warnings.begin(), merged.warnings.end(), w) == merged.warnings.end())
                {
                    merged.warnings.push_back(w);
                }
            }
        }
        finalize(merged);
        return merged;
    }

    MetricsRecorder::MetricsRecorder(std::size_t num_classes, double capacity_kbps, double warmup_s, double end_s,
                                     std::size_t num_batches)
        : capacity_(capacity_kbps), warmup_(warmup_s), end_(end_s), last_(warmup_s)
    {
        if (num_batches == 0 || !(end_s > warmup_s))
        {
            throw std::invalid_argument("metrics need at least one batch over a positive window");
        }
        batch_len_ = (end_s - warmup_s) / static_cast<double>(num_batches);
        batches_.resize(num_batches);
        for (auto &b : batches_)
        {
            b.classes.resize(num_classes);
        }
    }

    std::ptrdiff_t MetricsRecorder::batch_of(double t) const
    {
        if (t < warmup_ || t > end_)
        {
            return -1;
        }
        const auto b = static_cast<std::ptrdiff_t>((t - warmup_) / batch_len_);
        return std::min<std::ptrdiff_t>(b, static_cast<std::ptrdiff_t>(batches_.size()) - 1);
    }

    void MetricsRecorder::advance(double now, std::span<const double> class_allocated,
                                  std::span<const std::size_t> class_counts, double allocated)
    {
        now = std::min(now, end_);
        while (last_ < now)
        {
            auto b = static_cast<std::size_t>(batch_of(last_));
            auto boundary_of = [&](std::size_t i) {
                return i + 1 == batches_.size() ? end_ : warmup_ + static_cast<double>(i + 1) * batch_len_;
            };
            // Rounding can map a point just past a boundary to the earlier batch.
            while (boundary_of(b) <= last_ && b + 1 < batches_.size())
            {
                ++b;
            }
            const double upto = std::min(now, boundary_of(b));
            const double dt = upto - last_;
            auto &batch = batches_[b];
            batch.span_s += dt;
            batch.allocated_integral += allocated * dt;
            for (std::size_t k = 0; k < batch.classes.size(); ++k)
            {
                batch.classes[k].allocation_integral += class_allocated[k] * dt;
                batch.classes[k].occupancy_integral += static_cast<double>(class_counts[k]) * dt;
            }
            last_ = upto;
        }
    }

    void MetricsRecorder::record(Outcome outcome, std::size_t class_index, double now, double root_admitted_at)
    {
        const auto b = batch_of(now);
        if (b < 0)
        {
            return;
        }
        auto &c = batches_[static_cast<std::size_t>(b)].classes.at(class_index - 1);
        switch (outcome)
        {
        case Outcome::NewAdmitted:
            ++c.new_arrivals;
            ++c.admitted_roots;
            break;
        case Outcome::NewBlocked:
            ++c.new_arrivals;
            ++c.new_blocks;
            break;
        case Outcome::HandoverAdmitted:
            ++c.handover_attempts;
            break;
        case Outcome::HandoverDropped: {
            ++c.handover_attempts;
            ++c.handover_drops;
            const auto root_batch = batch_of(root_admitted_at);
            if (root_batch >= 0)
            {
                ++batches_[static_cast<std::size_t>(root_batch)].classes.at(class_index - 1).forced_terminations;
            }
            break;
        }
        case Outcome::Completed:
            ++c.completions;
            break;
        }
    }

    RunMetrics MetricsRecorder::finish() const
    {
        RunMetrics m;
        m.capacity_kbps = capacity_;
        m.batches = batches_;
        finalize(m);
        return m;
    }
}
