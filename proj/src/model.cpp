#include "bwadapt/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bwadapt
{
    std::vector<double> geometric_gamma_row(double gamma0, double decay, std::size_t num_classes)
    {
        std::vector<double> row(num_classes + 1);
        double g = gamma0;
        for (auto &entry : row)
        {
            entry = g;
            g *= decay;
        }
        return row;
    }

    PolicyMatrix::PolicyMatrix(std::vector<TrafficClass> classes) : classes_(std::move(classes))
    {
        floors_.reserve(classes_.size());
        for (std::size_t i = 0; i < classes_.size(); ++i)
        {
            auto &c = classes_[i];
            c.index = i + 1;
            std::vector<double> row;
            row.reserve(c.gamma.size());
            for (double g : c.gamma)
            {
                row.push_back((1.0 - g) * c.requested_kbps);
            }
            floors_.push_back(std::move(row));
        }
    }

    namespace
    {
        MatrixViolation violation(std::size_t m, std::size_t p, std::string reason)
        {
            return MatrixViolation{m, p, std::move(reason)};
        }
    }

    std::optional<MatrixViolation> validate_matrix(const PolicyMatrix &matrix)
    {
        const std::size_t M = matrix.num_classes();
        if (M == 0)
        {
            return violation(0, 0, "no traffic classes");
        }
        for (std::size_t m = 1; m <= M; ++m)
        {
            const auto &c = matrix.traffic_class(m);
            if (c.gamma.size() != M + 1)
            {
                std::ostringstream os;
                os << "gamma row has " << c.gamma.size() << " entries, expected " << M + 1;
                return violation(m, 0, os.str());
            }
            if (!std::isfinite(c.requested_kbps) || c.requested_kbps <= 0.0)
            {
                return violation(m, 0, "requested bandwidth must be positive");
            }
            if (!std::isfinite(c.mean_duration_s) || c.mean_duration_s <= 0.0)
            {
                return violation(m, 0, "mean duration must be positive");
            }
            if (!std::isfinite(c.arrival_weight) || c.arrival_weight < 0.0)
            {
                return violation(m, 0, "arrival weight must be non-negative");
            }
            for (std::size_t p = 0; p <= M; ++p)
            {
                const double g = c.gamma[p];
                if (!std::isfinite(g) || g < 0.0 || g >= 1.0)
                {
                    return violation(m, p, "gamma must lie in [0, 1)");
                }
                if (p > 0 && g > c.gamma[p - 1])
                {
                    return violation(m, p, "gamma must be non-increasing in priority");
                }
                if (!c.elastic && g != 0.0)
                {
                    return violation(m, p, "non-adaptive class must have zero gamma");
                }
                const double floor = matrix.floor(m, p);
                if (floor > c.requested_kbps + kBandwidthTolerance ||
                    (p > 0 && floor + kBandwidthTolerance < matrix.floor(m, p - 1)))
                {
                    return violation(m, p, "floors must rise with priority up to the requested bandwidth");
                }
                const double implied = (c.requested_kbps - floor) / c.requested_kbps;
                if (std::abs(implied - g) > 1e-9 * std::max(1.0, g))
                {
                    return violation(m, p, "floor inconsistent with gamma");
                }
            }
        }
        return std::nullopt;
    }

    std::vector<TrafficClass> default_classes()
    {
        constexpr std::size_t M = 4;
        constexpr double decay = 0.95;
        auto make = [&](std::string name, double kbps, double gamma0, double weight, bool elastic) {
            TrafficClass c;
            c.name = std::move(name);
            c.requested_kbps = kbps;
            c.gamma = geometric_gamma_row(gamma0, decay, M);
            c.arrival_weight = weight;
            c.mean_duration_s = 120.0;
            c.elastic = elastic;
            return c;
        };
        std::vector<TrafficClass> classes{
            make("voice", 32.0, 0.0, 3.0, false),
            make("web", 120.0, 0.6, 3.0, true),
            make("video", 256.0, 0.7, 1.0, true),
            make("background", 60.0, 0.8, 2.0, true),
        };
        for (std::size_t i = 0; i < classes.size(); ++i)
        {
            classes[i].index = i + 1;
        }
        return classes;
    }

    double degradation_of(const Call &call, const PolicyMatrix &matrix)
    {
        const double requested = matrix.requested(call.class_index);
        return (requested - call.allocation_kbps) / requested;
    }

    void settle(Call &call, double now, double rate_kbps)
    {
        const double dt = now - call.settled_at;
        if (dt > 0.0)
        {
            if (call.elastic)
            {
                const double served = std::min(call.remaining, rate_kbps * dt);
                call.remaining -= served;
                call.delivered_kbit += rate_kbps * dt;
            }
            else
            {
                call.remaining = std::max(0.0, call.remaining - dt);
            }
        }
        call.settled_at = std::max(call.settled_at, now);
    }

    Call service_dynamics(const Call &call, double dt)
    {
        Call next = call;
        settle(next, call.settled_at + dt, call.allocation_kbps);
        return next;
    }

    double time_to_completion(const Call &call)
    {
        return call.elastic ? call.remaining / call.allocation_kbps : call.remaining;
    }

    CellState::CellState(double capacity_kbps, std::size_t num_classes)
        : capacity_(capacity_kbps), class_allocated_(num_classes, 0.0), class_count_(num_classes, 0)
    {
    }

    std::size_t CellState::position_of(std::uint64_t id) const
    {
        auto it = std::lower_bound(calls_.begin(), calls_.end(), id,
                                   [](const Call &c, std::uint64_t key) { return c.id < key; });
        if (it == calls_.end() || it->id != id)
        {
            return calls_.size();
        }
        return static_cast<std::size_t>(it - calls_.begin());
    }

    const Call *CellState::find(std::uint64_t id) const
    {
        const auto pos = position_of(id);
        return pos == calls_.size() ? nullptr : &calls_[pos];
    }

    Call *CellState::find_mutable(std::uint64_t id)
    {
        const auto pos = position_of(id);
        return pos == calls_.size() ? nullptr : &calls_[pos];
    }

    void CellState::add(Call call)
    {
        if (!calls_.empty() && call.id <= calls_.back().id)
        {
            throw std::invalid_argument("call ids must increase");
        }
        if (call.class_index == 0 || call.class_index > class_count_.size())
        {
            throw std::out_of_range("call class index out of range");
        }
        allocated_ += call.allocation_kbps;
        class_allocated_[call.class_index - 1] += call.allocation_kbps;
        ++class_count_[call.class_index - 1];
        calls_.push_back(std::move(call));
    }

    Call CellState::remove(std::uint64_t id)
    {
        const auto pos = position_of(id);
        if (pos == calls_.size())
        {
            throw std::out_of_range("no live call with that id");
        }
        Call call = std::move(calls_[pos]);
        calls_.erase(calls_.begin() + static_cast<std::ptrdiff_t>(pos));
        const std::size_t k = call.class_index - 1;
        --class_count_[k];
        class_allocated_[k] = class_count_[k] == 0 ? 0.0 : class_allocated_[k] - call.allocation_kbps;
        allocated_ = calls_.empty() ? 0.0 : allocated_ - call.allocation_kbps;
        return call;
    }

    void CellState::set_allocation(std::uint64_t id, double kbps)
    {
        const auto pos = position_of(id);
        if (pos == calls_.size())
        {
            throw std::out_of_range("no live call with that id");
        }
        set_allocation_at(pos, kbps);
    }

    void CellState::set_allocation_at(std::size_t position, double kbps)
    {
        Call &call = calls_.at(position);
        const double delta = kbps - call.allocation_kbps;
        call.allocation_kbps = kbps;
        allocated_ += delta;
        class_allocated_[call.class_index - 1] += delta;
    }

    double CellState::recomputed_allocation() const
    {
        double total = 0.0;
        for (const auto &c : calls_)
        {
            total += c.allocation_kbps;
        }
        return total;
    }
}
