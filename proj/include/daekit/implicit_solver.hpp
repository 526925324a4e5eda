#pragma once

#include "daekit/common.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace daekit {

// F(t, p, y) = 0 solved for y.
struct ImplicitProblem {
    std::function<Vec(double t, const Vec& p, const Vec& y)> residual;
    std::function<Mat(double t, const Vec& p, const Vec& y)> jac_y;  // optional
    std::function<Vec(double t, const Vec& p, const Vec& y)> jac_t;  // optional
    std::optional<Mat> anchor_W;
};

enum class SolveMode { FixedPoint, Newton };

struct SolveOptions {
    double tol = 1e-12;
    int max_iter = 20;             // Newton iterations
    int fixed_point_max_iter = 500;
    double damping = 0.5;
    double min_step = 1.0 / (1 << 20);
    SolveMode mode = SolveMode::Newton;
    // Natural magnitude of ∂_yF; singularity is judged against max(σ_max, jacobian_scale).
    double jacobian_scale = 0.0;
};

struct SolveResult {
    Vec y;
    int iterations = 0;
    double residual = 0.0;
    SolveMode mode_used = SolveMode::Newton;
    std::vector<double> contraction;  // ‖Δy_k‖ / ‖Δy_{k-1}‖ per iteration
};

SolveResult solve_fixed_point(const ImplicitProblem& problem, double t, const Vec& p,
                              const Vec& y0, const SolveOptions& opts = {});
SolveResult solve_newton(const ImplicitProblem& problem, double t, const Vec& p, const Vec& y0,
                         const SolveOptions& opts = {});
// Dispatches on opts.mode.
SolveResult solve(const ImplicitProblem& problem, double t, const Vec& p, const Vec& y0,
                  const SolveOptions& opts = {});

// ∂_yF at (t, p, y): analytic when provided, otherwise central differences.
Mat jacobian_y(const ImplicitProblem& problem, double t, const Vec& p, const Vec& y);
// ∂_tF at (t, p, y): analytic when provided, otherwise central differences with
// h = max(1e-6, 1e-6 |t|).
Vec derivative_t(const ImplicitProblem& problem, double t, const Vec& p, const Vec& y);

// dy/dt = -(∂_yF)^{-1} ∂_tF along the solution branch. Throws SingularJacobian.
Vec implicit_derivative(const ImplicitProblem& problem, double t, const Vec& p, const Vec& y);

// Solves J δ = r, throwing SingularJacobian when J is numerically singular.
Vec solve_linear(const Mat& J, const Vec& r, const char* where, double scale = 0.0);

}  // namespace daekit
