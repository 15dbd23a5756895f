#include "bwadapt/oracle.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

namespace bwadapt::oracle
{
    double erlang_b(std::size_t servers, double offered_erlangs)
    {
        double b = 1.0;
        for (std::size_t c = 1; c <= servers; ++c)
        {
            b = offered_erlangs * b / (static_cast<double>(c) + offered_erlangs * b);
        }
        return b;
    }

    void check_system(const MultirateSystem &sys)
    {
        if (sys.classes.empty())
        {
            throw std::invalid_argument("multirate system has no classes");
        }
        for (const auto &c : sys.classes)
        {
            if (c.channels == 0 || c.channels > sys.capacity)
            {
                throw std::invalid_argument("class channel demand must lie in [1, capacity]");
            }
            if (!(c.offered_erlangs >= 0.0) || !(c.mean_holding > 0.0))
            {
                throw std::invalid_argument("class load must be non-negative and holding time positive");
            }
        }
    }

    std::vector<double> kaufman_roberts_occupancy(const MultirateSystem &sys)
    {
        check_system(sys);
        std::vector<double> q(sys.capacity + 1, 0.0);
        q[0] = 1.0;
        for (std::size_t j = 1; j <= sys.capacity; ++j)
        {
            double acc = 0.0;
            for (const auto &c : sys.classes)
            {
                if (c.channels <= j)
                {
                    acc += c.offered_erlangs * static_cast<double>(c.channels) * q[j - c.channels];
                }
            }
            q[j] = acc / static_cast<double>(j);
            if (q[j] > 1e250)
            {
                for (std::size_t i = 0; i <= j; ++i)
                {
                    q[i] *= 1e-250;
                }
            }
        }
        const double total = std::accumulate(q.begin(), q.end(), 0.0);
        for (auto &x : q)
        {
            x /= total;
        }
        return q;
    }

    std::vector<double> kaufman_roberts(const MultirateSystem &sys)
    {
        const auto q = kaufman_roberts_occupancy(sys);
        std::vector<double> blocking;
        blocking.reserve(sys.classes.size());
        for (const auto &c : sys.classes)
        {
            double b = 0.0;
            for (std::size_t j = sys.capacity - c.channels + 1; j <= sys.capacity; ++j)
            {
                b += q[j];
            }
            blocking.push_back(b);
        }
        return blocking;
    }

    std::size_t bandwidth_unit(std::span<const double> kbps)
    {
        std::size_t unit = 0;
        for (double v : kbps)
        {
            const double r = std::round(v);
            if (r <= 0.0 || std::abs(v - r) > 1e-9)
            {
                throw std::invalid_argument("bandwidths must be positive integers (kbps) to derive a unit");
            }
            unit = std::gcd(unit, static_cast<std::size_t>(r));
        }
        if (unit == 0)
        {
            throw std::invalid_argument("no bandwidths given");
        }
        return unit;
    }

    std::size_t to_channels(double kbps, double unit_kbps)
    {
        const double ratio = kbps / unit_kbps;
        const double r = std::round(ratio);
        if (r < 1.0 || std::abs(ratio - r) > 1e-9)
        {
            throw std::invalid_argument("bandwidth " + std::to_string(kbps) + " is not a multiple of the unit");
        }
        return static_cast<std::size_t>(r);
    }

    std::vector<std::vector<double>> to_dense(const SparseGenerator &q)
    {
        std::vector<std::vector<double>> dense(q.size, std::vector<double>(q.size, 0.0));
        for (const auto &t : q.transitions)
        {
            dense[t.from][t.to] += t.rate;
            dense[t.from][t.from] -= t.rate;
        }
        return dense;
    }

    StationaryDistribution ctmc_solve(const SparseGenerator &q, std::size_t max_states)
    {
        if (q.size > max_states)
        {
            throw StateSpaceTooLarge("chain has " + std::to_string(q.size) + " states, limit is " +
                                     std::to_string(max_states));
        }
        StationaryDistribution out;
        if (q.size == 0)
        {
            return out;
        }
        const auto n = static_cast<Eigen::Index>(q.size);
        const Eigen::Index last = n - 1;

        // Rows of A are the balance equations (columns of Q); the last one is
        // replaced by the normalization sum(pi) = 1.
        std::vector<double> outflow(q.size, 0.0);
        std::vector<Eigen::Triplet<double>> entries;
        entries.reserve(q.transitions.size() + 2 * q.size);
        for (const auto &t : q.transitions)
        {
            outflow[t.from] += t.rate;
            const auto row = static_cast<Eigen::Index>(t.to);
            if (row != last)
            {
                entries.emplace_back(row, static_cast<Eigen::Index>(t.from), t.rate);
            }
        }
        for (Eigen::Index i = 0; i < last; ++i)
        {
            entries.emplace_back(i, i, -outflow[static_cast<std::size_t>(i)]);
        }
        for (Eigen::Index j = 0; j < n; ++j)
        {
            entries.emplace_back(last, j, 1.0);
        }
        Eigen::SparseMatrix<double> a(n, n);
        a.setFromTriplets(entries.begin(), entries.end());
        a.makeCompressed();

        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        rhs(last) = 1.0;
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> solver;
        solver.compute(a);
        if (solver.info() != Eigen::Success)
        {
            throw std::runtime_error("generator is singular; chain is not irreducible");
        }
        const Eigen::VectorXd pi = solver.solve(rhs);
        out.pi.assign(pi.data(), pi.data() + n);

        std::vector<double> balance(q.size, 0.0);
        for (const auto &t : q.transitions)
        {
            balance[t.to] += out.pi[t.from] * t.rate;
            balance[t.from] -= out.pi[t.from] * t.rate;
        }
        for (double r : balance)
        {
            out.residual = std::max(out.residual, std::abs(r));
        }
        return out;
    }

    namespace
    {
        std::size_t occupied(const std::vector<std::size_t> &counts, const MultirateSystem &sys)
        {
            std::size_t used = 0;
            for (std::size_t k = 0; k < counts.size(); ++k)
            {
                used += counts[k] * sys.classes[k].channels;
            }
            return used;
        }
    }

    MultirateChain build_multirate_chain(const MultirateSystem &sys, std::size_t max_states)
    {
        check_system(sys);
        const std::size_t K = sys.classes.size();
        MultirateChain chain;

        // Depth-first enumeration of every count vector that fits.
        std::vector<std::size_t> counts(K, 0);
        auto enumerate = [&](auto &&self, std::size_t k, std::size_t used) -> void {
            if (k == K)
            {
                if (chain.states.size() >= max_states)
                {
                    throw StateSpaceTooLarge("multirate chain exceeds " + std::to_string(max_states) + " states");
                }
                chain.states.push_back(counts);
                return;
            }
            const std::size_t b = sys.classes[k].channels;
            for (std::size_t n = 0; used + n * b <= sys.capacity; ++n)
            {
                counts[k] = n;
                self(self, k + 1, used + n * b);
            }
            counts[k] = 0;
        };
        enumerate(enumerate, 0, 0);

        auto key_of = [&](const std::vector<std::size_t> &c) {
            std::size_t key = 0;
            for (std::size_t k = 0; k < K; ++k)
            {
                key = key * (sys.capacity / sys.classes[k].channels + 1) + c[k];
            }
            return key;
        };
        std::unordered_map<std::size_t, std::size_t> index;
        index.reserve(chain.states.size());
        for (std::size_t i = 0; i < chain.states.size(); ++i)
        {
            index.emplace(key_of(chain.states[i]), i);
        }

        chain.generator.size = chain.states.size();
        for (std::size_t i = 0; i < chain.states.size(); ++i)
        {
            auto next = chain.states[i];
            const std::size_t used = occupied(next, sys);
            for (std::size_t k = 0; k < K; ++k)
            {
                const auto &c = sys.classes[k];
                const double mu = 1.0 / c.mean_holding;
                if (used + c.channels <= sys.capacity && c.offered_erlangs > 0.0)
                {
                    ++next[k];
                    chain.generator.transitions.push_back({i, index.at(key_of(next)), c.offered_erlangs * mu});
                    --next[k];
                }
                if (next[k] > 0)
                {
                    --next[k];
                    chain.generator.transitions.push_back(
                        {i, index.at(key_of(next)), static_cast<double>(chain.states[i][k]) * mu});
                    ++next[k];
                }
            }
        }
        return chain;
    }

    std::vector<double> ctmc_blocking(const MultirateSystem &sys, std::size_t max_states)
    {
        const auto chain = build_multirate_chain(sys, max_states);
        const auto dist = ctmc_solve(chain.generator, max_states);
        std::vector<double> blocking(sys.classes.size(), 0.0);
        for (std::size_t i = 0; i < chain.states.size(); ++i)
        {
            const std::size_t used = occupied(chain.states[i], sys);
            for (std::size_t k = 0; k < sys.classes.size(); ++k)
            {
                if (used + sys.classes[k].channels > sys.capacity)
                {
                    blocking[k] += dist.pi[i];
                }
            }
        }
        return blocking;
    }
}
