#include <doctest.h>

#include <cmath>

#include "conceptguard/rank1.hpp"
#include "conceptguard/rng.hpp"
#include "conceptguard/vector_ops.hpp"
#include "oracles.hpp"

using namespace conceptguard;
namespace oracle = conceptguard::testing;

TEST_CASE("rank-1 direction of fixed matrices") {
    // single row => normalized row (up to sign)
    const auto single = rank1_principal_direction(std::vector<EmbeddingVector>{{2, 0, 0}});
    CHECK(std::fabs(single[0]) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(single[1] == doctest::Approx(0.0));

    // parallel rows => their common direction
    const auto parallel =
        rank1_principal_direction(std::vector<EmbeddingVector>{{1, 2}, {2, 4}});
    const double inv_sqrt5 = 1.0 / std::sqrt(5.0);
    CHECK(std::fabs(parallel[0]) == doctest::Approx(inv_sqrt5).epsilon(1e-6));
    CHECK(std::fabs(parallel[1]) == doctest::Approx(2.0 * inv_sqrt5).epsilon(1e-6));
    CHECK(parallel[0] * parallel[1] > 0.0); // same orthant as [1,2]

    // D^T D = [[18,0],[0,1]] => top eigenvector e_0
    const auto gapped =
        rank1_principal_direction(std::vector<EmbeddingVector>{{3, 0}, {0, 1}, {3, 0}});
    CHECK(std::fabs(gapped[0]) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::fabs(gapped[1]) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("rank-1 error cases") {
    try {
        rank1_principal_direction(std::vector<EmbeddingVector>{{0, 0}, {0, 0}});
        FAIL("expected AllZeroRows");
    } catch (const Error& error) {
        CHECK(error.code() == errc::all_zero_rows);
    }
    CHECK_THROWS_AS(rank1_principal_direction(std::vector<EmbeddingVector>{}), Error);
    CHECK_THROWS_AS(rank1_principal_direction(std::vector<EmbeddingVector>{{1, 0}, {1, 0, 0}}),
                    Error);
}

TEST_CASE("single-row shortcut equals normalize exactly") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        EmbeddingVector row(1 + rng.next_below(16));
        for (auto& v : row) v = static_cast<float>(rng.next_gaussian() * 2.0);
        if (norm(row) < 1e-6) continue;
        const auto direction = rank1_principal_direction(std::vector<EmbeddingVector>{row});
        const auto expected = normalize(row);
        for (std::size_t i = 0; i < row.size(); ++i) {
            CHECK(direction[i] == doctest::Approx(expected[i]).epsilon(1e-6));
        }
    }
}

TEST_CASE("rank-1 agrees with the Jacobi oracle on gapped random matrices") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto rows = oracle::random_gapped_matrix(seed, 50, 8, 1.1);
        const auto direction = rank1_principal_direction(rows);
        const auto expected = oracle::jacobi_top_eigenvector(oracle::gram_matrix(rows));
        CHECK(oracle::abs_cosine(direction, expected) >= 1.0 - 1e-8);
    }
}

TEST_CASE("rank-1 recovers from a start orthogonal to the row space") {
    // rows span [1,-1]; the all-ones start is exactly orthogonal to it
    const auto direction =
        rank1_principal_direction(std::vector<EmbeddingVector>{{1, -1}, {-2, 2}});
    CHECK(std::fabs(direction[0]) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    CHECK(direction[0] * direction[1] < 0.0);
}
