#pragma once

#include "bwadapt/metrics.hpp"
#include "bwadapt/model.hpp"
#include "bwadapt/policy.hpp"

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace bwadapt
{
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    enum class ServiceDistribution : std::uint8_t
    {
        Exponential,
        Deterministic,
    };

    struct ScenarioConfig
    {
        double capacity_kbps = 6000.0;
        // Arrival weights (the class mix) live on the classes.
        std::vector<TrafficClass> classes = default_classes();
        // Total new-call arrival rate (calls/s) split across classes by weight.
        double lambda = 0.5;
        // Mean cell dwell time; infinity disables handovers.
        double mean_dwell_s = 240.0;
        SchemeKind scheme = SchemeKind::ProposedPriorityMultilevel;
        double duration_s = 20000.0;
        double warmup_s = 2000.0;
        std::uint64_t seed = 1;
        std::size_t batches = 20;
        ServiceDistribution service = ServiceDistribution::Exponential;
        // Re-verifies capacity, floors and cached sums after every event.
        bool check_invariants = false;
    };

    // Throws ConfigError describing the first problem found.
    void validate_config(const ScenarioConfig &config);

    // The scheme-adjusted matrix a run uses.
    PolicyMatrix effective_matrix(const ScenarioConfig &config);

    // Simulates one cell over [0, duration_s]. Equal configs give
    // bit-identical metrics.
    RunMetrics run(const ScenarioConfig &config);

    enum class EventKind : std::uint8_t
    {
        NewArrival,
        Completion,
        DwellExpiry,
        End,
    };

    struct Event
    {
        double time = 0.0;
        std::uint64_t sequence = 0;
        EventKind kind = EventKind::End;
        std::uint64_t call_id = 0;
        // Completion events carry the call's generation at scheduling time
        // and are dropped on pop if it has moved on.
        std::uint64_t generation = 0;

        // Orders a min-heap on (time, sequence).
        friend bool operator>(const Event &a, const Event &b) noexcept
        {
            return a.time != b.time ? a.time > b.time : a.sequence > b.sequence;
        }
    };
}
