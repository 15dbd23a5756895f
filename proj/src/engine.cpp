#include "bwadapt/engine.hpp"

#include "bwadapt/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <queue>
#include <sstream>

namespace bwadapt
{
    void validate_config(const ScenarioConfig &config)
    {
        if (!(config.capacity_kbps > 0.0) || !std::isfinite(config.capacity_kbps))
        {
            throw ConfigError("capacity must be positive");
        }
        if (!(config.lambda > 0.0) || !std::isfinite(config.lambda))
        {
            throw ConfigError("lambda must be positive");
        }
        if (!(config.mean_dwell_s > 0.0))
        {
            throw ConfigError("mean dwell time must be positive (inf disables handovers)");
        }
        if (!(config.warmup_s >= 0.0) || !(config.duration_s > config.warmup_s) || !std::isfinite(config.duration_s))
        {
            throw ConfigError("need duration > warmup >= 0");
        }
        if (config.batches < 2)
        {
            throw ConfigError("need at least two batches");
        }
        double weight = 0.0;
        for (const auto &c : config.classes)
        {
            weight += c.arrival_weight;
        }
        if (!(weight > 0.0))
        {
            throw ConfigError("class weights must sum to a positive value");
        }
        for (auto scheme : {SchemeKind::ProposedPriorityMultilevel, config.scheme})
        {
            const auto matrix = apply_scheme(PolicyMatrix(config.classes), scheme);
            if (auto v = validate_matrix(matrix))
            {
                std::ostringstream os;
                os << "invalid policy matrix at (m=" << v->class_index << ", p=" << v->priority << "): " << v->reason;
                throw ConfigError(os.str());
            }
        }
    }

    PolicyMatrix effective_matrix(const ScenarioConfig &config)
    {
        return apply_scheme(PolicyMatrix(config.classes), config.scheme);
    }

    namespace
    {
        enum StreamId : std::uint32_t
        {
            kArrivals = 1,
            kClassChoice = 2,
            kWork = 3,
            kDwell = 4,
        };

        class Simulator
        {
        public:
            explicit Simulator(const ScenarioConfig &config)
                : config_(config), matrix_(effective_matrix(config)),
                  state_(config.capacity_kbps, matrix_.num_classes()),
                  recorder_(matrix_.num_classes(), config.capacity_kbps, config.warmup_s, config.duration_s,
                            config.batches),
                  arrivals_(config.seed, kArrivals), class_choice_(config.seed, kClassChoice),
                  work_(config.seed, kWork), dwell_(config.seed, kDwell)
            {
                double acc = 0.0;
                for (const auto &c : matrix_.classes())
                {
                    acc += c.arrival_weight;
                    cumulative_weight_.push_back(acc);
                }
                min_allocation_.assign(matrix_.num_classes(), std::numeric_limits<double>::infinity());
                oversize_warned_.assign(matrix_.num_classes(), false);
            }

            RunMetrics run()
            {
                push(arrivals_.exponential(1.0 / config_.lambda), EventKind::NewArrival, 0, 0);
                push(config_.duration_s, EventKind::End, 0, 0);

                while (!queue_.empty())
                {
                    const Event ev = queue_.top();
                    queue_.pop();
                    if (is_stale(ev))
                    {
                        ++stale_;
                        continue;
                    }
                    recorder_.advance(ev.time, state_.class_allocated(), state_.class_counts(), state_.allocated());
                    now_ = ev.time;
                    digest(ev);
                    ++events_;
                    if (ev.kind == EventKind::End)
                    {
                        break;
                    }
                    switch (ev.kind)
                    {
                    case EventKind::NewArrival:
                        on_arrival();
                        break;
                    case EventKind::Completion:
                        on_completion(ev.call_id);
                        break;
                    case EventKind::DwellExpiry:
                        on_dwell_expiry(ev.call_id);
                        break;
                    case EventKind::End:
                        break;
                    }
                    if (config_.check_invariants)
                    {
                        check_state();
                    }
                }

                RunMetrics metrics = recorder_.finish();
                metrics.events_processed = events_;
                metrics.stale_events = stale_;
                metrics.invariant_checks = checks_;
                metrics.invariant_violations = violations_;
                metrics.trace_digest = digest_;
                metrics.min_allocation_kbps = min_allocation_;
                metrics.handover_deep_degradations = deep_by_handover_;
                metrics.warnings = warnings_;
                return metrics;
            }

        private:
            void push(double time, EventKind kind, std::uint64_t id, std::uint64_t generation)
            {
                queue_.push(Event{time, sequence_++, kind, id, generation});
            }

            bool is_stale(const Event &ev) const
            {
                if (ev.kind != EventKind::Completion && ev.kind != EventKind::DwellExpiry)
                {
                    return false;
                }
                const Call *call = state_.find(ev.call_id);
                return call == nullptr || (ev.kind == EventKind::Completion && call->generation != ev.generation);
            }

            void digest(const Event &ev)
            {
                auto mix = [this](std::uint64_t v) {
                    for (int i = 0; i < 8; ++i)
                    {
                        digest_ ^= (v >> (8 * i)) & 0xffU;
                        digest_ *= 1099511628211ULL;
                    }
                };
                mix(std::bit_cast<std::uint64_t>(ev.time));
                mix(static_cast<std::uint64_t>(ev.kind));
                mix(ev.call_id);
            }

            void schedule_completion(const Call &call)
            {
                push(now_ + time_to_completion(call), EventKind::Completion, call.id, call.generation);
            }

            void schedule_dwell(const Call &call)
            {
                if (std::isfinite(config_.mean_dwell_s))
                {
                    push(now_ + dwell_.exponential(config_.mean_dwell_s), EventKind::DwellExpiry, call.id, 0);
                }
            }

            void note_allocation(std::size_t m, double kbps)
            {
                min_allocation_[m - 1] = std::min(min_allocation_[m - 1], kbps);
            }

            void apply(const std::vector<Reallocation> &changes)
            {
                for (const auto &r : changes)
                {
                    Call *call = state_.find_mutable(r.call_id);
                    note_allocation(call->class_index, r.new_kbps);
                    if (!call->elastic)
                    {
                        continue;
                    }
                    settle(*call, now_, r.old_kbps);
                    ++call->generation;
                    schedule_completion(*call);
                }
            }

            // Admits `candidate` at priority p and wires up its events.
            bool try_admit(Call candidate, RequestPriority p)
            {
                const std::size_t q = candidate.class_index;
                const std::uint64_t id = candidate.id;
                const auto decision = admit(state_, std::move(candidate), p, matrix_);
                if (decision.oversized && !oversize_warned_[q - 1])
                {
                    oversize_warned_[q - 1] = true;
                    warnings_.push_back("class " + matrix_.traffic_class(q).name +
                                        " requests more than the cell capacity; every request is rejected");
                }
                if (!decision.admitted())
                {
                    return false;
                }
                if (config_.check_invariants)
                {
                    check_decision(decision, q, p);
                }
                for (const auto &d : decision.degradations)
                {
                    const std::size_t m = state_.find(d.call_id)->class_index;
                    if (p.value() == 0 && d.new_kbps < matrix_.floor(m, 1) - kBandwidthTolerance)
                    {
                        ++deep_by_handover_;
                    }
                }
                apply(decision.degradations);
                const Call &admitted = *state_.find(id);
                note_allocation(q, admitted.allocation_kbps);
                schedule_completion(admitted);
                schedule_dwell(admitted);
                return true;
            }

            void restore()
            {
                apply(restore_on_departure(state_, state_.free(), matrix_));
            }

            void on_arrival()
            {
                push(now_ + arrivals_.exponential(1.0 / config_.lambda), EventKind::NewArrival, 0, 0);

                const std::size_t q = class_choice_.pick(cumulative_weight_) + 1;
                const auto &cls = matrix_.traffic_class(q);
                // Drawn for every arrival so the work stream stays aligned
                // across schemes.
                const double draw = config_.service == ServiceDistribution::Exponential
                                        ? work_.exponential(cls.mean_duration_s)
                                        : cls.mean_duration_s;

                Call call;
                call.id = next_id_++;
                call.class_index = q;
                call.elastic = cls.elastic;
                call.remaining = cls.elastic ? draw * cls.requested_kbps : draw;
                call.total_work_kbit = cls.elastic ? call.remaining : 0.0;
                call.settled_at = now_;
                call.origin = CallOrigin::New;
                call.root_id = call.id;
                call.admitted_at = now_;
                call.root_admitted_at = now_;

                const bool ok = try_admit(std::move(call), RequestPriority::new_call(q));
                recorder_.record(ok ? Outcome::NewAdmitted : Outcome::NewBlocked, q, now_);
            }

            void on_completion(std::uint64_t id)
            {
                Call *call = state_.find_mutable(id);
                settle(*call, now_, call->allocation_kbps);
                if (config_.check_invariants && call->elastic)
                {
                    ++checks_;
                    if (std::abs(call->delivered_kbit - call->total_work_kbit) > 1e-6 * call->total_work_kbit)
                    {
                        ++violations_;
                    }
                }
                const std::size_t m = call->class_index;
                state_.remove(id);
                recorder_.record(Outcome::Completed, m, now_);
                restore();
            }

            // The target cell of a homogeneous network is statistically
            // identical to this one, so the handover request is judged
            // against the current state with the departing call still in
            // it. Only afterwards does the call release its old allocation.
            void on_dwell_expiry(std::uint64_t id)
            {
                Call *live = state_.find_mutable(id);
                settle(*live, now_, live->allocation_kbps);

                Call next = *live;
                next.id = next_id_++;
                next.origin = CallOrigin::Handover;
                next.admitted_at = now_;
                next.generation = 0;
                const std::size_t m = next.class_index;
                const double root_admitted_at = next.root_admitted_at;
                const bool ok = try_admit(std::move(next), RequestPriority::handover());

                state_.remove(id);
                restore();
                recorder_.record(ok ? Outcome::HandoverAdmitted : Outcome::HandoverDropped, m, now_,
                                 root_admitted_at);
            }

            void check_decision(const AdmissionDecision &decision, std::size_t q, RequestPriority p)
            {
                ++checks_;
                bool bad = decision.granted_kbps < matrix_.floor(q, p) - kBandwidthTolerance ||
                           decision.granted_kbps > matrix_.requested(q) + kBandwidthTolerance;
                for (const auto &d : decision.degradations)
                {
                    const std::size_t m = state_.find(d.call_id)->class_index;
                    bad = bad || d.new_kbps < matrix_.floor(m, p) - kBandwidthTolerance || !(d.new_kbps < d.old_kbps);
                }
                violations_ += bad ? 1 : 0;
            }

            void check_state()
            {
                ++checks_;
                bool bad = std::abs(state_.allocated() - state_.recomputed_allocation()) > kBandwidthTolerance ||
                           state_.allocated() > state_.capacity() + kBandwidthTolerance;
                for (const auto &call : state_.calls())
                {
                    const std::size_t m = call.class_index;
                    bad = bad || !(call.allocation_kbps > 0.0) ||
                          call.allocation_kbps > matrix_.requested(m) + kBandwidthTolerance ||
                          call.allocation_kbps < matrix_.floor(m, 0) - kBandwidthTolerance || call.remaining < 0.0;
                }
                violations_ += bad ? 1 : 0;
            }

            const ScenarioConfig &config_;
            PolicyMatrix matrix_;
            CellState state_;
            MetricsRecorder recorder_;
            RandomStream arrivals_;
            RandomStream class_choice_;
            RandomStream work_;
            RandomStream dwell_;
            std::vector<double> cumulative_weight_;
            std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;

            double now_ = 0.0;
            std::uint64_t sequence_ = 0;
            std::uint64_t next_id_ = 1;
            std::uint64_t events_ = 0;
            std::uint64_t stale_ = 0;
            std::uint64_t checks_ = 0;
            std::uint64_t violations_ = 0;
            std::uint64_t deep_by_handover_ = 0;
            std::uint64_t digest_ = 1469598103934665603ULL;
            std::vector<double> min_allocation_;
            std::vector<bool> oversize_warned_;
            std::vector<std::string> warnings_;
        };
    }

    RunMetrics run(const ScenarioConfig &config)
    {
        validate_config(config);
        return Simulator(config).run();
    }
}
