#include "bwadapt/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bwadapt::oracle;

TEST_CASE("Erlang-B closed forms")
{
    CHECK(erlang_b(1, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(erlang_b(2, 1.0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(erlang_b(0, 3.0) == 1.0);
    CHECK(erlang_b(5, 0.0) == 0.0);
    // B(3, 2) = (8/6) / (1 + 2 + 2 + 8/6) = 4/19
    CHECK(erlang_b(3, 2.0) == doctest::Approx(4.0 / 19.0).epsilon(1e-14));
}

TEST_CASE("Kaufman-Roberts on a four-channel two-class system")
{
    // Brute-force balance of the 9-state chain gives 25/137 and 53/137.
    const MultirateSystem sys{4, {{1, 1.0, 1.0}, {2, 1.0, 1.0}}};
    const auto kr = kaufman_roberts(sys);
    REQUIRE(kr.size() == 2);
    CHECK(kr[0] == doctest::Approx(25.0 / 137.0).epsilon(1e-13));
    CHECK(kr[1] == doctest::Approx(53.0 / 137.0).epsilon(1e-13));

    const auto chain = build_multirate_chain(sys);
    CHECK(chain.states.size() == 9);
    const auto ct = ctmc_blocking(sys);
    CHECK(ct[0] == doctest::Approx(25.0 / 137.0).epsilon(1e-12));
    CHECK(ct[1] == doctest::Approx(53.0 / 137.0).epsilon(1e-12));
}

TEST_CASE("Kaufman-Roberts reduces to Erlang-B for one unit-demand class")
{
    for (std::size_t c = 1; c <= 40; c += 3)
    {
        const MultirateSystem sys{c, {{1, 0.7 * static_cast<double>(c), 1.0}}};
        CHECK(kaufman_roberts(sys)[0] == doctest::Approx(erlang_b(c, 0.7 * static_cast<double>(c))).epsilon(1e-12));
    }
}

TEST_CASE("validation scenario oracle values")
{
    const MultirateSystem two{40, {{8, 2.0, 1.0}, {15, 1.2, 1.0}}};
    const auto b2 = kaufman_roberts(two);
    CHECK(b2[0] == doctest::Approx(0.19420516836335164).epsilon(1e-12));
    CHECK(b2[1] == doctest::Approx(0.41660140955364144).epsilon(1e-12));

    const MultirateSystem three{40, {{8, 1.5, 1.0}, {15, 0.8, 1.0}, {30, 0.3, 1.0}}};
    const auto b3 = kaufman_roberts(three);
    CHECK(b3[0] == doctest::Approx(0.15416840524075776).epsilon(1e-12));
    CHECK(b3[1] == doctest::Approx(0.3390636735375115).epsilon(1e-12));
    CHECK(b3[2] == doctest::Approx(0.732955019611116).epsilon(1e-12));
}

TEST_CASE("CTMC agrees with Kaufman-Roberts and is insensitive to holding times")
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial)
    {
        MultirateSystem sys;
        sys.capacity = 4 + gen() % 30;
        const std::size_t k = 1 + gen() % 3;
        for (std::size_t i = 0; i < k; ++i)
        {
            sys.classes.push_back({1 + gen() % sys.capacity, 0.1 + 3.0 * unit(gen), 0.2 + 5.0 * unit(gen)});
        }
        const auto kr = kaufman_roberts(sys);
        const auto ct = ctmc_blocking(sys);
        for (std::size_t i = 0; i < k; ++i)
        {
            CHECK(std::abs(kr[i] - ct[i]) <= 1e-9);
        }
    }
}

TEST_CASE("occupancy distribution is normalized")
{
    const MultirateSystem sys{150, {{1, 30.0, 1.0}, {8, 4.0, 1.0}, {64, 0.5, 1.0}}};
    const auto q = kaufman_roberts_occupancy(sys);
    double total = 0.0;
    for (double x : q)
    {
        CHECK(x >= 0.0);
        total += x;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sparse solve of a small birth-death chain")
{
    // Two states, rates 1 -> and 3 <-: pi = (3/4, 1/4).
    SparseGenerator q{2, {{0, 1, 1.0}, {1, 0, 3.0}}};
    const auto s = ctmc_solve(q);
    CHECK(s.pi[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(s.pi[1] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(s.residual <= 1e-12);

    const auto dense = to_dense(q);
    CHECK(dense[0][0] == -1.0);
    CHECK(dense[1][1] == -3.0);
    CHECK(dense[0][1] == 1.0);
}

TEST_CASE("state cap and input checks")
{
    const MultirateSystem big{400, {{1, 10.0, 1.0}, {2, 10.0, 1.0}, {3, 10.0, 1.0}}};
    CHECK_THROWS_AS(build_multirate_chain(big, 1000), StateSpaceTooLarge);
    CHECK_THROWS_AS(ctmc_solve(SparseGenerator{10, {}}, 5), StateSpaceTooLarge);
    CHECK_THROWS_AS(kaufman_roberts(MultirateSystem{4, {{5, 1.0, 1.0}}}), std::invalid_argument);
    CHECK_THROWS_AS(kaufman_roberts(MultirateSystem{4, {}}), std::invalid_argument);

    const std::vector<double> kbps{32.0, 60.0, 120.0};
    CHECK(bandwidth_unit(kbps) == 4);
    CHECK(to_channels(60.0, 4.0) == 15);
    CHECK_THROWS(to_channels(61.0, 4.0));
    const std::vector<double> fractional{32.5};
    CHECK_THROWS(bandwidth_unit(fractional));
}
