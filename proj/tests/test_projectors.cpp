#include "daekit/problem_library.hpp"
#include "daekit/projectors.hpp"
#include "support.hpp"

using namespace daekit;
using namespace testing_support;

namespace {

struct Built {
    Pencil p;
    CanonicalSystem cs;
    DualSystem ds;
    ProjectorSet ps;
};

Built build(const Mat& A, const Mat& B) {
    Built b{Pencil(A, B), {}, {}, {}};
    b.cs = build_chains(b.p);
    b.ds = build_dual_chains(b.p, b.cs);
    b.ps = build_projectors(b.cs, b.ds, b.p);
    return b;
}

}  // namespace

TEST_SUITE("projectors") {

TEST_CASE("nilpotent 2x2") {
    Built b = build(mat(2, 2, {0, 1, 0, 0}), Mat::Identity(2, 2));
    const auto& s = b.ps;
    Mat I = Mat::Identity(2, 2), Z = Mat::Zero(2, 2);
    CHECK(dist(s.P2, I) < 1e-14);
    CHECK(dist(s.Q2, I) < 1e-14);
    CHECK(dist(s.P1, Z) < 1e-14);
    CHECK(dist(s.Q1, Z) < 1e-14);
    CHECK(dist(s.P20, mat(2, 2, {1, 0, 0, 0})) < 1e-14);
    CHECK(dist(s.P2Sigma, mat(2, 2, {0, 0, 0, 1})) < 1e-14);
    CHECK(dist(s.tildeA, mat(2, 2, {0, 1, -1, 0})) < 1e-14);
    CHECK(dist(s.tildeA_inv, mat(2, 2, {0, -1, 1, 0})) < 1e-14);
    CHECK(dist(s.A_semiinv, mat(2, 2, {0, 0, 1, 0})) < 1e-14);
    CHECK(dist(s.A_semiinv * b.p.A, s.P2Sigma) < 1e-14);
}

TEST_CASE("index-1 diagonal") {
    Built b = build(mat(2, 2, {1, 0, 0, 0}), Mat::Identity(2, 2));
    const auto& s = b.ps;
    Mat E2 = mat(2, 2, {0, 0, 0, 1});
    CHECK(dist(s.P2, E2) < 1e-14);
    CHECK(dist(s.Q2, E2) < 1e-14);
    CHECK(s.P2Sigma.norm() < 1e-14);
    CHECK(dist(s.P20, s.P2) < 1e-14);
    CHECK(dist(s.tildeA, Mat::Identity(2, 2)) < 1e-14);
    CHECK(dist(s.A_semiinv, mat(2, 2, {1, 0, 0, 0})) < 1e-14);
    CHECK(dist(s.B2_semiinv, E2) < 1e-14);
}

TEST_CASE("index 0") {
    Mat A = mat(2, 2, {2, 1, 0, 1});
    Built b = build(A, mat(2, 2, {1, 0, 0, 3}));
    const auto& s = b.ps;
    CHECK(dist(s.P1, Mat::Identity(2, 2)) < 1e-14);
    CHECK(dist(s.Q1, Mat::Identity(2, 2)) < 1e-14);
    CHECK(s.P2.norm() < 1e-14);
    CHECK(s.Q2.norm() < 1e-14);
    CHECK(dist(s.tildeA, A) < 1e-14);
    CHECK(dist(s.tildeA_inv, A.inverse()) < 1e-14);
    CHECK(dist(s.A_semiinv, A.inverse()) < 1e-14);
    CHECK(s.B2_semiinv.norm() < 1e-14);
}

TEST_CASE("slot sets of a 3-chain and a 1-chain") {
    Mat A = Mat::Zero(4, 4);
    A(0, 1) = 1;
    A(1, 2) = 1;
    Built b = build(A, Mat::Identity(4, 4));
    REQUIRE(b.cs.n() == 2);
    CHECK(slots_all(b.cs).size() == 4);
    CHECK(slots_top(b.cs).size() == 2);
    CHECK(slots_bottom(b.cs).size() == 2);
    CHECK(slots_sigma(b.cs).size() == 2);
    CHECK(b.ps.nu == 3);
    CHECK(b.ps.P2s.size() == 3);
}

TEST_CASE("identity suite on the seeded corpus") {
    auto corpus = random_corpus(100, 1);
    double worst = 0.0, worst_truth = 0.0;
    std::string worst_name;
    for (auto& rp : corpus) {
        CanonicalSystem cs = build_chains(rp.pencil);
        DualSystem ds = build_dual_chains(rp.pencil, cs);
        ProjectorSet ps = build_projectors(cs, ds, rp.pencil);
        for (const auto& [name, r] : projector_residuals(ps, rp.pencil, cs, ds))
            if (r > worst) {
                worst = r;
                worst_name = name;
            }
        worst_truth = std::max({worst_truth, rel_diff(ps.P2, rp.P2), rel_diff(ps.Q2, rp.Q2)});
    }
    INFO("worst identity: " << worst_name);
    CHECK(worst <= 1e-8);
    CHECK(worst_truth <= 1e-6);
}

}
