#include "daekit/errors.hpp"
#include "daekit/pencil.hpp"
#include "daekit/problem_library.hpp"
#include "support.hpp"

using namespace daekit;
using namespace testing_support;

TEST_SUITE("pencil_analysis") {

TEST_CASE("regular point for the identity pencil") {
    Pencil p(Mat::Identity(2, 2), Mat::Zero(2, 2));
    double l = find_regular_point(p);
    CHECK(l == doctest::Approx(1.0));
    CHECK(p.lambda_star.has_value());
}

TEST_CASE("regular point for the nilpotent pencil") {
    Pencil p(mat(2, 2, {0, 1, 0, 0}), Mat::Identity(2, 2));
    CHECK(find_regular_point(p) == doctest::Approx(1.0));
}

TEST_CASE("zero pencil is singular") {
    Pencil p(Mat::Zero(2, 2), Mat::Zero(2, 2));
    CHECK_THROWS_AS(find_regular_point(p), SingularPencil);
    Pencil q(mat(2, 2, {1, 0, 0, 0}), mat(2, 2, {1, 0, 0, 0}));
    CHECK_THROWS_AS(compute_index(q), SingularPencil);
}

TEST_CASE("index of small pencils") {
    Pencil a(Mat::Identity(2, 2), mat(2, 2, {1, 0, 0, 2}));
    Pencil b(mat(2, 2, {1, 0, 0, 0}), Mat::Identity(2, 2));
    Pencil c(mat(2, 2, {0, 1, 0, 0}), Mat::Identity(2, 2));
    CHECK(compute_index(a) == 0);
    CHECK(compute_index(b) == 1);
    CHECK(compute_index(c) == 2);
}

TEST_CASE("staircase dimensions for a 3-chain plus a 1-chain") {
    Mat A = Mat::Zero(5, 5);
    A(0, 0) = 1;
    A(1, 2) = 1;
    A(2, 3) = 1;
    Staircase st = kernel_staircase(A, Mat::Identity(5, 5), 1.0);
    REQUIRE(st.kernel_dims.size() >= 4);
    CHECK(st.kernel_dims[1] == 2);
    CHECK(st.kernel_dims[2] == 3);
    CHECK(st.kernel_dims[3] == 4);
    CHECK(st.index() == 3);
    CHECK(st.chains_at_least(1) == 2);
    CHECK(st.chains_at_least(2) == 1);
    CHECK(st.chains_at_least(3) == 1);
    CHECK(st.root_basis.cols() == 4);
}

TEST_CASE("chains of the nilpotent pencil") {
    Pencil p(mat(2, 2, {0, 1, 0, 0}), Mat::Identity(2, 2));
    CanonicalSystem cs = build_chains(p);
    REQUIRE(cs.n() == 1);
    CHECK(cs.nu == 2);
    CHECK(cs.multiplicities() == std::vector<int>{2});
    double s = cs.chains[0].vectors[0](0) > 0 ? 1.0 : -1.0;
    CHECK(dist(s * cs.chains[0].vectors[0], vec({1, 0})) < 1e-14);
    CHECK(dist(s * cs.chains[0].vectors[1], vec({0, -1})) < 1e-14);

    DualSystem ds = build_dual_chains(p, cs);
    REQUIRE(ds.chains.size() == 1);
    CHECK(dist(s * ds.chains[0].vectors[0], vec({1, 0})) < 1e-14);
    CHECK(dist(s * ds.chains[0].vectors[1], vec({0, -1})) < 1e-14);
}

TEST_CASE("chains of the index-1 pencil") {
    Pencil p(mat(2, 2, {1, 0, 0, 0}), Mat::Identity(2, 2));
    CanonicalSystem cs = build_chains(p);
    REQUIRE(cs.n() == 1);
    CHECK(cs.multiplicities() == std::vector<int>{1});
    CHECK(std::abs(cs.chains[0].vectors[0](1)) == doctest::Approx(1.0));
    CHECK(std::abs(cs.chains[0].vectors[0](0)) < 1e-15);
    DualSystem ds = build_dual_chains(p, cs);
    Vec q = ds.chains[0].vectors[0];
    CHECK(std::abs(q(0)) < 1e-15);
    CHECK(q.dot(cs.chains[0].vectors[0]) == doctest::Approx(1.0));
}

TEST_CASE("invertible A gives an empty system") {
    Pencil p(Mat::Identity(3, 3), mat(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 10}));
    CanonicalSystem cs = build_chains(p);
    CHECK(cs.n() == 0);
    CHECK(cs.nu == 0);
    CHECK(build_dual_chains(p, cs).chains.empty());
}

TEST_CASE("seeded pencil with blocks 2,2,1") {
    RandomPencil rp = random_weierstrass(7, 6, {2, 2, 1});
    CHECK(compute_index(rp.pencil) == 2);
    CanonicalSystem cs = build_chains(rp.pencil);
    auto m = cs.multiplicities();
    std::sort(m.begin(), m.end());
    CHECK(m == std::vector<int>{1, 2, 2});
    DualSystem ds = build_dual_chains(rp.pencil, cs);
    ChainResiduals r = chain_residuals(rp.pencil, cs, ds);
    CHECK(r.chain < 1e-10);
    CHECK(r.dual_chain < 1e-10);
    CHECK(r.biorth < 1e-10);
}

TEST_CASE("rank decision guard band") {
    Vec sv = vec({1.0, 1e-3, 0.0});
    CHECK(numerical_rank(sv, 3, 1e3, "t").rank == 2);
    // σ_max·N·ε·ρ ≈ 6.7e-13 and ·ρ² ≈ 6.7e-10: a value in between is ambiguous
    Vec amb = vec({1.0, 1e-11, 0.0});
    CHECK_THROWS_AS(numerical_rank(amb, 3, 1e3, "t"), RankAmbiguity);
    Vec tiny = vec({1.0, 1e-14});
    CHECK(numerical_rank(tiny, 2, 1e3, "t").rank == 1);
}

}
