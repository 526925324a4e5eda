#include "daekit/errors.hpp"
#include "daekit/problem_library.hpp"
#include "daekit/reduction.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace daekit;
using namespace testing_support;

namespace {

std::shared_ptr<const SemilinearDAE> index1_example() {
    return make_dae(Pencil(mat(2, 2, {1, 0, 0, 0}), mat(2, 2, {0, 0, 0, 1})),
                    field([](double t, const Vec& x) { return vec({x(0) * x(0), std::sin(t) + x(0)}); }));
}

// x₀' = −x₀ and a 3-chain with constant forcing
std::shared_ptr<const SemilinearDAE> chain_with_constants() {
    Mat A = Mat::Zero(4, 4);
    A(0, 0) = 1;
    A(1, 2) = 1;
    A(2, 3) = 1;
    NonlinearField f = field([](double, const Vec& x) { return vec({-x(0), 0.5, -1.0, 2.0}); });
    f.structure = StructureTag::StructuredAppr2;
    return make_dae(Pencil(A, Mat::Identity(4, 4)), f);
}

}  // namespace

TEST_SUITE("reduction") {

TEST_CASE("index-1 pieces") {
    ReducedFirst rf(index1_example());
    Vec x = vec({1.5, -0.25});
    double t = 0.7;
    Vec pi = rf.Pi(t, x);
    CHECK(dist(pi, vec({2.25, 0.0})) < 1e-14);
    Split sp = rf.split(x);
    Vec c = rf.F2star(t, sp.x1, sp.x2Sigma, sp.x20);
    CHECK(dist(c, vec({0.0, std::sin(t) + 1.5 + 0.25})) < 1e-14);
    CHECK(rf.residual_L0(0.0, vec({1, 1})) < 1e-15);
    CHECK(rf.residual_L0(0.0, vec({1, 0})) == doctest::Approx(1.0));
}

TEST_CASE("consistent initialization for the index-1 example") {
    ReducedFirst rf(index1_example());
    Vec x0 = rf.consistent_initialize(0.0, vec({1, 0}));
    CHECK(dist(x0, vec({1, 1})) < 1e-12);
    CHECK(dist(rf.consistent_initialize(0.0, x0), x0) < 1e-12);
}

TEST_CASE("zero field, identity B") {
    auto dae = make_dae(Pencil(mat(2, 2, {1, 0, 0, 0}), Mat::Identity(2, 2)),
                        field([](double, const Vec&) { return Vec::Zero(2); }));
    ReducedFirst rf(dae);
    Vec g = vec({3, 5});
    Vec x0 = rf.consistent_initialize(0.0, g);
    CHECK(dist(x0, dae->proj.P1 * g) < 1e-13);
    CHECK(rf.residual_L0(0.0, dae->proj.P1 * g) < 1e-15);
}

TEST_CASE("linear forcing matches the formula") {
    RandomPencil rp = random_weierstrass(11, 5, {2, 1});
    auto dae = make_dae(rp.pencil, field([](double t, const Vec& x) {
        Vec q(x.size());
        for (int i = 0; i < x.size(); ++i) q(i) = std::cos(t + i);
        return q;
    }));
    ReducedFirst rf(dae);
    Vec x = Vec::LinSpaced(5, -1, 1);
    Vec q(5);
    for (int i = 0; i < 5; ++i) q(i) = std::cos(0.3 + i);
    Vec expect = dae->proj.tildeA_inv * (dae->proj.Q1 + dae->proj.Q2Sigma) * (q - rp.pencil.B * x);
    CHECK((rf.Pi(0.3, x) - expect).norm() < 1e-12 * (1 + expect.norm()));
}

TEST_CASE("pieces recombine to the full residual") {
    RandomPencil rp = random_weierstrass(3, 6, {3, 1});
    auto dae = make_dae(rp.pencil, field([](double t, const Vec& x) {
        Vec f = x.array().sin();
        f(0) += std::exp(-t);
        return f;
    }));
    ReducedFirst rf(dae);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int k = 0; k < 10; ++k) {
        Vec x(6);
        for (int i = 0; i < 6; ++i) x(i) = g(rng);
        double t = 0.1 * k;
        Split sp = rf.split(x);
        Vec full = dae->f.eval(t, x) - dae->pencil.B * x;
        Vec rebuilt = dae->proj.tildeA * rf.Pi(t, x) + rf.F2star(t, sp.x1, sp.x2Sigma, sp.x20);
        CHECK((rebuilt - full).norm() <= 1e-12 * (1 + full.norm()));
    }
}

TEST_CASE("structure check") {
    Problem p = builtin("index2_structured");
    CHECK(check_structure(*p.dae).pass);
    CHECK(check_structure(*builtin("index1_stable").dae).pass);

    NonlinearField f = p.dae->f;
    auto base = f.eval;
    f.eval = [base](double t, const Vec& x) {
        Vec y = base(t, x);
        y(2) += 0.3 * x(0);
        return y;
    };
    f.jacobian = nullptr;
    auto bad = make_dae(p.dae->pencil, f);
    StructureReport r = check_structure(*bad);
    CHECK_FALSE(r.pass);
    CHECK(r.max_dependence > 1e-3);
    CHECK_THROWS_AS(ReducedCascade{bad}, StructureViolation);
    CHECK_NOTHROW(ReducedCascade(bad, true));
}

TEST_CASE("cascade levels") {
    ReducedCascade c2(builtin("index2_structured").dae);
    CHECK(c2.equation_count() == 3);
    REQUIRE(c2.levels().size() == 1);
    CHECK(c2.levels()[0].tag == "F2(nu-1)");
    CHECK(c2.bottom_level().tag == "F20");

    ReducedCascade c3(builtin("index3_chain").dae);
    CHECK(c3.equation_count() == 5);
    std::vector<std::string> tags;
    for (const auto& L : c3.levels()) tags.push_back(L.tag);
    CHECK(tags == std::vector<std::string>{"F2(nu-1)", "F2Sigma,s, s=1"});
}

TEST_CASE("index-1 cascade coincides with the first reduction") {
    auto dae = builtin("index1_stable").dae;
    ReducedFirst rf(dae);
    ReducedCascade rc(dae);
    CascadeWorkspace ws;
    Vec g = vec({0.4, -2.0});
    Vec a = rf.consistent_initialize(0.2, g);
    Vec b = rc.consistent_initialize(0.2, g, ws);
    CHECK(dist(a, b) < 1e-12);
    Vec x20 = Vec::Zero(0);
    Split sp = rf.split(a);
    x20 = sp.x20;
    Vec wa = rf.drift(0.2, rf.w_of(a), x20);
    Vec wb = rc.drift(0.2, dae->pencil.A * (dae->proj.P1 * b), ws);
    CHECK(dist(wa, wb) < 1e-12);
}

TEST_CASE("cascade with constant forcing keeps the chain fixed") {
    auto dae = chain_with_constants();
    ReducedCascade rc(dae);
    CascadeWorkspace ws;
    // N ẋ + x = c with N nilpotent has the constant solution x = c
    Vec x = rc.state(0.0, vec({1, 0, 0, 0}), ws);
    CHECK(dist(x, vec({1, 0.5, -1.0, 2.0})) < 1e-10);
    Vec later = rc.state(3.0, vec({0.2, 0, 0, 0}), ws);
    CHECK(dist(later.tail(3), vec({0.5, -1.0, 2.0})) < 1e-10);
    CHECK(rc.residual_L0(0.0, x) < 1e-12);
}

TEST_CASE("general field with index 2 refuses the cascade") {
    CHECK_THROWS_AS(ReducedCascade{builtin("index2_nilpotent_linear").dae}, StructureViolation);
}

}
