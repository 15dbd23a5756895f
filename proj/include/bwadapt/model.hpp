#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bwadapt
{
    // Absolute tolerance for all bandwidth comparisons (kbps).
    inline constexpr double kBandwidthTolerance = 1e-6;

    // Static per-class parameters. Class indices are 1-based; index m also
    // serves as the admission priority of a new call of that class.
    struct TrafficClass
    {
        std::string name;
        std::size_t index = 0;
        double requested_kbps = 0.0;
        // gamma[p] for p = 0..M: the largest fraction of requested_kbps a call
        // of this class may give up to admit a priority-p request.
        std::vector<double> gamma;
        double arrival_weight = 0.0;
        double mean_duration_s = 0.0;
        bool elastic = false;
    };

    // gamma[p] = gamma0 * decay^p for p = 0..num_classes.
    std::vector<double> geometric_gamma_row(double gamma0, double decay, std::size_t num_classes);

    class RequestPriority
    {
    public:
        static RequestPriority handover() noexcept { return RequestPriority{0}; }
        static RequestPriority new_call(std::size_t class_index) noexcept { return RequestPriority{class_index}; }

        std::size_t value() const noexcept { return value_; }
        bool operator==(const RequestPriority &) const = default;

    private:
        explicit RequestPriority(std::size_t p) noexcept : value_(p) {}
        std::size_t value_;
    };

    struct MatrixViolation
    {
        std::size_t class_index = 0;
        std::size_t priority = 0;
        std::string reason;
    };

    // The gamma matrix of every class with the floors it implies:
    // floor(m, p) = (1 - gamma[m][p]) * requested(m).
    class PolicyMatrix
    {
    public:
        PolicyMatrix() = default;
        // Classes are re-indexed 1..M in the given order. Floors are cached but
        // the matrix is not validated here; see validate_matrix.
        explicit PolicyMatrix(std::vector<TrafficClass> classes);

        std::size_t num_classes() const noexcept { return classes_.size(); }
        const TrafficClass &traffic_class(std::size_t m) const { return classes_.at(m - 1); }
        std::span<const TrafficClass> classes() const noexcept { return classes_; }

        double gamma(std::size_t m, std::size_t p) const { return classes_.at(m - 1).gamma.at(p); }
        double floor(std::size_t m, std::size_t p) const { return floors_.at(m - 1).at(p); }
        double floor(std::size_t m, RequestPriority p) const { return floor(m, p.value()); }
        double requested(std::size_t m) const { return classes_.at(m - 1).requested_kbps; }

    private:
        std::vector<TrafficClass> classes_;
        std::vector<std::vector<double>> floors_;
    };

    // Checks every class in order and reports the first offending (m, p).
    std::optional<MatrixViolation> validate_matrix(const PolicyMatrix &matrix);

    // Four-class configuration: voice 32 kbps (non-adaptive), web 120 kbps
    // (0.6), video 256 kbps (0.7), background 60 kbps (0.8), decay 0.95,
    // arrival mix 3:3:1:2, 120 s mean undegraded duration.
    std::vector<TrafficClass> default_classes();

    enum class CallOrigin : std::uint8_t
    {
        New,
        Handover,
    };

    struct Call
    {
        std::uint64_t id = 0;
        std::size_t class_index = 0;
        double allocation_kbps = 0.0;
        bool elastic = false;
        // kbit left for elastic calls, seconds left otherwise.
        double remaining = 0.0;
        // Simulation time up to which `remaining` is current.
        double settled_at = 0.0;
        CallOrigin origin = CallOrigin::New;
        std::uint64_t root_id = 0;
        double admitted_at = 0.0;
        double root_admitted_at = 0.0;
        // Bumped whenever the projected completion time changes.
        std::uint64_t generation = 0;
        double total_work_kbit = 0.0;
        double delivered_kbit = 0.0;
    };

    // Fraction of the requested bandwidth the call currently goes without.
    double degradation_of(const Call &call, const PolicyMatrix &matrix);

    // Brings `remaining` forward to `now` assuming the call was served at
    // `rate_kbps` since settled_at.
    void settle(Call &call, double now, double rate_kbps);

    // Service progress over dt at the call's current allocation.
    Call service_dynamics(const Call &call, double dt);

    // Time until the call completes if its allocation stays fixed.
    double time_to_completion(const Call &call);

    class CellState
    {
    public:
        CellState(double capacity_kbps, std::size_t num_classes);

        double capacity() const noexcept { return capacity_; }
        double allocated() const noexcept { return allocated_; }
        double free() const noexcept { return capacity_ - allocated_; }

        std::span<const Call> calls() const noexcept { return calls_; }
        std::size_t size() const noexcept { return calls_.size(); }

        const Call *find(std::uint64_t id) const;
        // Mutable access for service bookkeeping. Allocation changes must go
        // through set_allocation so the cached sums stay consistent.
        Call *find_mutable(std::uint64_t id);
        Call &at_position(std::size_t i) { return calls_.at(i); }

        // Ids must be strictly increasing across insertions.
        void add(Call call);
        Call remove(std::uint64_t id);
        void set_allocation(std::uint64_t id, double kbps);
        void set_allocation_at(std::size_t position, double kbps);

        double allocated_in_class(std::size_t m) const { return class_allocated_.at(m - 1); }
        std::size_t count_in_class(std::size_t m) const { return class_count_.at(m - 1); }
        std::span<const double> class_allocated() const noexcept { return class_allocated_; }
        std::span<const std::size_t> class_counts() const noexcept { return class_count_; }

        // Recomputes the sums from scratch.
        double recomputed_allocation() const;

    private:
        std::size_t position_of(std::uint64_t id) const;

        double capacity_;
        double allocated_ = 0.0;
        std::vector<Call> calls_;
        std::vector<double> class_allocated_;
        std::vector<std::size_t> class_count_;
    };
}
