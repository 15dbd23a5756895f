#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace bwadapt::oracle
{
    // Blocking probability of an M/M/c/c loss system with offered load a.
    double erlang_b(std::size_t servers, double offered_erlangs);

    struct MultirateClass
    {
        std::size_t channels = 1;
        double offered_erlangs = 0.0;
        // Only the CTMC route uses this; Kaufman-Roberts is insensitive to it.
        double mean_holding = 1.0;
    };

    // Complete-sharing loss system with integer channel demands.
    struct MultirateSystem
    {
        std::size_t capacity = 0;
        std::vector<MultirateClass> classes;
    };

    // Throws std::invalid_argument unless every class needs 1..capacity
    // channels and has non-negative load.
    void check_system(const MultirateSystem &sys);

    // Normalized occupancy distribution q(0..capacity).
    std::vector<double> kaufman_roberts_occupancy(const MultirateSystem &sys);

    // Per-class blocking from the occupancy recursion.
    std::vector<double> kaufman_roberts(const MultirateSystem &sys);

    // Largest unit dividing every bandwidth (kbps values must be integral).
    std::size_t bandwidth_unit(std::span<const double> kbps);

    // Channels needed by `kbps` at the given unit; throws if not a multiple.
    std::size_t to_channels(double kbps, double unit_kbps);

    class StateSpaceTooLarge : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    inline constexpr std::size_t kMaxCtmcStates = 100000;

    struct Transition
    {
        std::size_t from = 0;
        std::size_t to = 0;
        double rate = 0.0;
    };

    // Off-diagonal rates; each diagonal entry is minus its row's outflow.
    struct SparseGenerator
    {
        std::size_t size = 0;
        std::vector<Transition> transitions;
    };

    std::vector<std::vector<double>> to_dense(const SparseGenerator &q);

    struct StationaryDistribution
    {
        std::vector<double> pi;
        // max_j |(pi Q)_j|
        double residual = 0.0;
    };

    // Solves pi Q = 0, sum(pi) = 1 by sparse LU.
    StationaryDistribution ctmc_solve(const SparseGenerator &q, std::size_t max_states = kMaxCtmcStates);

    struct MultirateChain
    {
        // Per-state count of live calls of each class.
        std::vector<std::vector<std::size_t>> states;
        SparseGenerator generator;
    };

    MultirateChain build_multirate_chain(const MultirateSystem &sys, std::size_t max_states = kMaxCtmcStates);

    // Per-class blocking from the exhaustive chain's stationary distribution.
    std::vector<double> ctmc_blocking(const MultirateSystem &sys, std::size_t max_states = kMaxCtmcStates);
}
