#pragma once

#include "bwadapt/model.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace bwadapt
{
    struct Reallocation
    {
        std::uint64_t call_id = 0;
        double old_kbps = 0.0;
        double new_kbps = 0.0;
    };

    enum class AdmissionOutcome : std::uint8_t
    {
        Admitted,
        Rejected,
    };

    struct AdmissionDecision
    {
        AdmissionOutcome outcome = AdmissionOutcome::Rejected;
        double granted_kbps = 0.0;
        // Ascending call id.
        std::vector<Reallocation> degradations;
        // Set when the request exceeds the whole cell capacity.
        bool oversized = false;

        bool admitted() const noexcept { return outcome == AdmissionOutcome::Admitted; }
    };

    enum class SchemeKind : std::uint8_t
    {
        ProposedPriorityMultilevel,
        AdaptiveNonPriority,
        NonAdaptiveNonPriority,
    };

    std::string_view to_string(SchemeKind scheme) noexcept;
    std::optional<SchemeKind> parse_scheme(std::string_view name) noexcept;

    // Bandwidth the call can still give up for a priority-p request:
    // max(0, allocation - floor(m, p)).
    double releasable_per_call(const Call &call, RequestPriority p, const PolicyMatrix &matrix);

    // Tries to admit `candidate` (its class_index selects the class; its
    // allocation is overwritten) at priority p:
    //   1. free space covers the full request: admit, touch nobody;
    //   2. otherwise take the shortfall from every live call in proportion to
    //      its headroom above floor(m, p) and admit at the full request;
    //   3. if the headroom cannot cover it, push every call to its floor and
    //      admit at whatever is free, provided that is at least the
    //      candidate's own floor(q, p);
    //   4. otherwise reject and leave the state untouched.
    // On admission the candidate is added to the state.
    AdmissionDecision admit(CellState &state, Call candidate, RequestPriority p, const PolicyMatrix &matrix);

    // Hands up to `freed_kbps` of idle capacity back to degraded calls in
    // proportion to their deficits. Returns one entry per changed call in
    // ascending id.
    std::vector<Reallocation> restore_on_departure(CellState &state, double freed_kbps, const PolicyMatrix &matrix);

    PolicyMatrix apply_scheme(const PolicyMatrix &matrix, SchemeKind scheme);
}
