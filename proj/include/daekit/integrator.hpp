#pragma once

#include "daekit/reduction.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace daekit {

struct IntegrationOptions {
    double t0 = 0.0;
    double t_max = 1.0;
    double rtol = 1e-8;
    double atol = 1e-10;
    double h_init = 1e-4;
    double h_min = 1e-13;
    double h_max = std::numeric_limits<double>::infinity();
    double blowup_norm_cap = 1e4;
    int blowup_window = 8;
    double residual_tol = 1e-6;     // residual_L0 bound enforced at accepted steps
    double consistency_tol = 1e-10;  // initial residual bound (relative to max(1, ‖x0‖))
    long max_steps = 2'000'000;
    void validate() const;  // throws SchemaError
};

struct Termination {
    enum class Kind { ReachedTmax, BlowUpSuspected, ConstraintSolveFailure, StepCollapse };
    Kind kind = Kind::ReachedTmax;
    double t = 0.0;
    double t_escape_estimate = std::numeric_limits<double>::quiet_NaN();
    double final_norm = 0.0;
    std::string escape_method;
    std::string level;
    std::string message;
};
const char* to_string(Termination::Kind k);

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> w_states;
    std::vector<double> residuals;
    Termination termination;
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
    double max_w_mismatch = 0.0;  // max ‖Ax − w‖ (first approach) or ‖Ax₁ − w₁‖ (cascade)
};

// Hooks the driver needs from a reduced system.
struct ReducedSystem {
    std::function<Vec(double t, const Vec& w)> rhs;
    // Re-solve the constraints at an accepted point: full state and residual_L0.
    std::function<void(double t, const Vec& w, Vec& x, double& residual)> observe;
    // Restore warm starts to the last observed point (cold retry after a failed solve).
    std::function<void()> reset_warm;
};

Trajectory integrate(const ReducedSystem& sys, double t0, const Vec& w0, const IntegrationOptions& opts);
Trajectory integrate_first(const ReducedFirst& reduced, double t0, const Vec& x0, const IntegrationOptions& opts);
Trajectory integrate_cascade(const ReducedCascade& reduced, double t0, const Vec& x01,
                             const IntegrationOptions& opts);
// Plain ODE ẇ = g(t,w); states and w_states coincide.
Trajectory integrate_ode(const std::function<Vec(double, const Vec&)>& g, double t0, const Vec& w0,
                         const IntegrationOptions& opts);

struct EscapeEstimate {
    double t_escape = std::numeric_limits<double>::quiet_NaN();
    std::string method;
};
// Extrapolates g = 1/‖w‖ to zero from the last three samples.
EscapeEstimate estimate_escape(const std::vector<double>& t, const std::vector<double>& norms);

// CSV with header `t,x_1..x_N,w_norm,residual`, values at 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os);
std::string termination_json(const Trajectory& traj);

}  // namespace daekit
