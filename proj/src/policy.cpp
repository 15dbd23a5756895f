#include "bwadapt/policy.hpp"

#include <algorithm>

namespace bwadapt
{
    std::string_view to_string(SchemeKind scheme) noexcept
    {
        switch (scheme)
        {
        case SchemeKind::ProposedPriorityMultilevel:
            return "proposed_priority_multilevel";
        case SchemeKind::AdaptiveNonPriority:
            return "adaptive_non_priority";
        case SchemeKind::NonAdaptiveNonPriority:
            return "non_adaptive_non_priority";
        }
        return "unknown";
    }

    std::optional<SchemeKind> parse_scheme(std::string_view name) noexcept
    {
        if (name == "proposed_priority_multilevel" || name == "proposed")
        {
            return SchemeKind::ProposedPriorityMultilevel;
        }
        if (name == "adaptive_non_priority" || name == "adaptive")
        {
            return SchemeKind::AdaptiveNonPriority;
        }
        if (name == "non_adaptive_non_priority" || name == "non_adaptive")
        {
            return SchemeKind::NonAdaptiveNonPriority;
        }
        return std::nullopt;
    }

    double releasable_per_call(const Call &call, RequestPriority p, const PolicyMatrix &matrix)
    {
        return std::max(0.0, call.allocation_kbps - matrix.floor(call.class_index, p));
    }

    AdmissionDecision admit(CellState &state, Call candidate, RequestPriority p, const PolicyMatrix &matrix)
    {
        AdmissionDecision decision;
        const std::size_t q = candidate.class_index;
        const double want = matrix.requested(q);
        if (want > state.capacity())
        {
            decision.oversized = true;
            return decision;
        }

        const double free = state.free();
        if (free >= want)
        {
            decision.outcome = AdmissionOutcome::Admitted;
            decision.granted_kbps = want;
            candidate.allocation_kbps = want;
            state.add(std::move(candidate));
            return decision;
        }

        const auto calls = state.calls();
        std::vector<double> headroom(calls.size());
        double total_headroom = 0.0;
        for (std::size_t i = 0; i < calls.size(); ++i)
        {
            headroom[i] = releasable_per_call(calls[i], p, matrix);
            total_headroom += headroom[i];
        }

        const double shortfall = want - free;
        const double own_floor = matrix.floor(q, p);
        const bool full_grant = shortfall <= total_headroom;
        if (!full_grant && free + total_headroom < own_floor)
        {
            return decision;
        }

        for (std::size_t i = 0; i < headroom.size(); ++i)
        {
            if (headroom[i] <= 0.0)
            {
                continue;
            }
            const Call &call = state.calls()[i];
            const double old_kbps = call.allocation_kbps;
            const double floor = matrix.floor(call.class_index, p);
            double new_kbps = floor;
            if (full_grant)
            {
                new_kbps = std::max(floor, old_kbps - shortfall * headroom[i] / total_headroom);
            }
            if (new_kbps < old_kbps)
            {
                decision.degradations.push_back({call.id, old_kbps, new_kbps});
                state.set_allocation_at(i, new_kbps);
            }
        }

        const double granted = full_grant ? want : std::clamp(state.free(), own_floor, want);
        decision.outcome = AdmissionOutcome::Admitted;
        decision.granted_kbps = granted;
        candidate.allocation_kbps = granted;
        state.add(std::move(candidate));
        return decision;
    }

    std::vector<Reallocation> restore_on_departure(CellState &state, double freed_kbps, const PolicyMatrix &matrix)
    {
        std::vector<Reallocation> changes;
        double budget = std::min(freed_kbps, state.free());
        if (!(budget > kBandwidthTolerance))
        {
            return changes;
        }

        const std::size_t n = state.size();
        std::vector<double> start(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            start[i] = state.calls()[i].allocation_kbps;
        }

        // Each pass either fills every deficit or spends the whole budget, so
        // the loop ends after at most n passes.
        for (std::size_t pass = 0; pass < n && budget > kBandwidthTolerance; ++pass)
        {
            double total_deficit = 0.0;
            for (const auto &call : state.calls())
            {
                total_deficit += std::max(0.0, matrix.requested(call.class_index) - call.allocation_kbps);
            }
            if (total_deficit <= 0.0)
            {
                break;
            }
            const double share = std::min(1.0, budget / total_deficit);
            double spent = 0.0;
            for (std::size_t i = 0; i < n; ++i)
            {
                const Call &call = state.calls()[i];
                const double requested = matrix.requested(call.class_index);
                const double deficit = requested - call.allocation_kbps;
                if (deficit <= 0.0)
                {
                    continue;
                }
                const double grant = share >= 1.0 ? deficit : std::min(deficit, deficit * share);
                const double next = share >= 1.0 ? requested : std::min(requested, call.allocation_kbps + grant);
                spent += next - call.allocation_kbps;
                state.set_allocation_at(i, next);
            }
            budget -= spent;
        }

        for (std::size_t i = 0; i < n; ++i)
        {
            const Call &call = state.calls()[i];
            if (call.allocation_kbps != start[i])
            {
                changes.push_back({call.id, start[i], call.allocation_kbps});
            }
        }
        return changes;
    }

    PolicyMatrix apply_scheme(const PolicyMatrix &matrix, SchemeKind scheme)
    {
        if (scheme == SchemeKind::ProposedPriorityMultilevel)
        {
            return matrix;
        }
        std::vector<TrafficClass> classes(matrix.classes().begin(), matrix.classes().end());
        for (auto &c : classes)
        {
            const double level = scheme == SchemeKind::AdaptiveNonPriority && !c.gamma.empty() ? c.gamma.front() : 0.0;
            std::fill(c.gamma.begin(), c.gamma.end(), level);
        }
        return PolicyMatrix(std::move(classes));
    }
}
