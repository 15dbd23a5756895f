#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace bwadapt
{
    // One independent stream per source of randomness. mt19937_64 and
    // seed_seq are fully specified by the standard; the transforms below
    // avoid the implementation-defined standard distributions.
    class RandomStream
    {
    public:
        RandomStream(std::uint64_t seed, std::uint32_t stream_id)
        {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream_id,
                              0x9e3779b9U};
            engine_.seed(seq);
        }

        // Uniform on [0, 1) with 53 random bits.
        double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

        double exponential(double mean) { return -mean * std::log1p(-uniform()); }

        // Index i drawn with probability proportional to the i-th weight, given
        // the running sums of the weights.
        std::size_t pick(std::span<const double> cumulative)
        {
            const double u = uniform() * cumulative.back();
            for (std::size_t i = 0; i < cumulative.size(); ++i)
            {
                if (u < cumulative[i])
                {
                    return i;
                }
            }
            return cumulative.size() - 1;
        }

    private:
        std::mt19937_64 engine_;
    };
}
