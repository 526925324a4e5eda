#include "daekit/integrator.hpp"

#include "daekit/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace daekit {

void IntegrationOptions::validate() const {
    auto bad = [](const std::string& m) { throw SchemaError("integration options: " + m); };
    if (!(t_max > t0)) bad("t_max must exceed t0");
    if (!(rtol > 0) || !(atol > 0)) bad("tolerances must be positive");
    if (!(h_min > 0) || h_min > h_init || h_init > h_max) bad("need 0 < h_min <= h_init <= h_max");
    if (!(blowup_norm_cap > 0) || blowup_window < 1) bad("blow-up settings out of range");
}

const char* to_string(Termination::Kind k) {
    switch (k) {
        case Termination::Kind::ReachedTmax: return "ReachedTmax";
        case Termination::Kind::BlowUpSuspected: return "BlowUpSuspected";
        case Termination::Kind::ConstraintSolveFailure: return "ConstraintSolveFailure";
        case Termination::Kind::StepCollapse: return "StepCollapse";
    }
    return "StepCollapse";
}

namespace {

// Dormand–Prince 5(4)
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9, kBeta = 0.04, kAlpha = 0.2 - 0.75 * kBeta;
constexpr double kFacMin = 0.2, kFacMax = 10.0;

bool monotone_growth(const std::vector<double>& norms, int window) {
    const int n = static_cast<int>(norms.size());
    if (n < window + 1) return false;
    for (int i = n - window; i < n; ++i)
        if (!(norms[i] > norms[i - 1])) return false;
    return true;
}

}  // namespace

EscapeEstimate estimate_escape(const std::vector<double>& t, const std::vector<double>& norms) {
    EscapeEstimate out;
    const int n = static_cast<int>(t.size());
    if (n < 2) return out;
    double t0 = t[n - 3 >= 0 ? n - 3 : 0], t1 = t[n - 2], t2 = t[n - 1];
    double g0 = 1.0 / norms[n - 3 >= 0 ? n - 3 : 0], g1 = 1.0 / norms[n - 2], g2 = 1.0 / norms[n - 1];
    double lin_slope = (g2 - g1) / (t2 - t1);
    double linear = t2 - g2 / lin_slope;
    if (n >= 3) {
        // derivatives at t2 from the quadratic through the three points
        double h1 = t1 - t0, h2 = t2 - t1;
        double d1 = (g1 - g0) / h1, d2 = (g2 - g1) / h2;
        double gpp = 2.0 * (d2 - d1) / (h1 + h2);
        double gp = d2 + gpp * h2 / 2.0;
        double ratio = g2 * gpp / (gp * gp);
        double p = 1.0 / (1.0 - ratio);
        double est = t2 - p * g2 / gp;
        if (std::isfinite(est) && p > 0 && gp < 0 && est >= t2) {
            out.t_escape = est;
            out.method = "power-law extrapolation of 1/||w|| to zero (3 points, exponent " +
                         std::to_string(p) + ")";
            return out;
        }
    }
    if (std::isfinite(linear) && lin_slope < 0) {
        out.t_escape = linear;
        out.method = "linear extrapolation of 1/||w|| to zero (2 points)";
    }
    return out;
}

Trajectory integrate(const ReducedSystem& sys, double t0, const Vec& w0, const IntegrationOptions& opts) {
    opts.validate();
    Trajectory tr;
    std::vector<double> norms;
    auto push = [&](double t, const Vec& w, const Vec& x, double res) {
        tr.times.push_back(t);
        tr.w_states.push_back(w);
        tr.states.push_back(x);
        tr.residuals.push_back(res);
        norms.push_back(w.norm());
    };

    Vec x;
    double res = 0.0;
    sys.observe(t0, w0, x, res);
    push(t0, w0, x, res);

    auto rhs = [&](double t, const Vec& w) {
        ++tr.rhs_evals;
        return sys.rhs(t, w);
    };

    double t = t0;
    Vec w = w0;
    double h = std::min({opts.h_init, opts.h_max, opts.t_max - t0});
    Vec k1;
    try {
        k1 = rhs(t, w);
    } catch (const ConstraintSolveFailure& e) {
        tr.termination = {Termination::Kind::ConstraintSolveFailure, t, NAN, w.norm(), "", e.level, e.what()};
        return tr;
    }
    double err_prev = 1e-4;
    long since_solve_failure = -1;  // attempts since the last failed constraint solve, -1 if none
    std::string fail_level, fail_msg;
    double fail_t = t;
    bool rejected_last = false;

    auto finish = [&](Termination::Kind kind, const std::string& msg) {
        tr.termination.kind = kind;
        tr.termination.t = t;
        tr.termination.final_norm = w.norm();
        tr.termination.message = msg;
    };

    while (true) {
        if (t >= opts.t_max) {
            finish(Termination::Kind::ReachedTmax, "");
            break;
        }
        if (tr.accepted + tr.rejected >= opts.max_steps) {
            finish(Termination::Kind::StepCollapse, "step budget exhausted");
            break;
        }
        const double h_floor = std::max(opts.h_min, 64.0 * kEps * std::abs(t));
        if (h < h_floor) {
            if (since_solve_failure >= 0 && since_solve_failure <= 2 * opts.blowup_window) {
                finish(Termination::Kind::ConstraintSolveFailure, fail_msg);
                tr.termination.t = fail_t;
                tr.termination.level = fail_level;
            } else if (norms.back() > opts.blowup_norm_cap && monotone_growth(norms, opts.blowup_window)) {
                finish(Termination::Kind::BlowUpSuspected, "step collapse with monotone norm growth");
                EscapeEstimate est = estimate_escape(tr.times, norms);
                tr.termination.t_escape_estimate = est.t_escape;
                tr.termination.escape_method = est.method;
            } else {
                finish(Termination::Kind::StepCollapse, "step size fell below the minimum");
            }
            break;
        }
        if (since_solve_failure >= 0) ++since_solve_failure;
        bool last_step = false;
        if (t + h >= opts.t_max) {
            h = opts.t_max - t;
            last_step = true;
        }

        Vec y5, k7, err_vec;
        bool stages_ok = false;
        for (int attempt = 0; attempt < 2 && !stages_ok; ++attempt) {
            try {
                Vec k2 = rhs(t + c2 * h, w + h * (a21 * k1));
                Vec k3 = rhs(t + c3 * h, w + h * (a31 * k1 + a32 * k2));
                Vec k4 = rhs(t + c4 * h, w + h * (a41 * k1 + a42 * k2 + a43 * k3));
                Vec k5 = rhs(t + c5 * h, w + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
                Vec k6 = rhs(t + h, w + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
                y5 = w + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
                double t_new = last_step ? opts.t_max : t + h;
                k7 = rhs(t_new, y5);
                err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
                stages_ok = true;
            } catch (const ConstraintSolveFailure& e) {
                sys.reset_warm();
                since_solve_failure = 0;
                fail_level = e.level;
                fail_msg = e.what();
                fail_t = e.t;
            }
        }
        if (!stages_ok) {
            ++tr.rejected;
            rejected_last = true;
            h *= 0.5;
            continue;
        }

        double err = 0.0;
        for (int i = 0; i < w.size(); ++i) {
            double sc = opts.atol + opts.rtol * std::max(std::abs(w(i)), std::abs(y5(i)));
            double r = err_vec(i) / sc;
            err += r * r;
        }
        err = w.size() > 0 ? std::sqrt(err / w.size()) : 0.0;
        if (!std::isfinite(err) || !y5.allFinite() || !k7.allFinite()) {
            sys.reset_warm();
            ++tr.rejected;
            rejected_last = true;
            h *= kFacMin;
            continue;
        }

        if (err <= 1.0) {
            double t_new = last_step ? opts.t_max : t + h;
            Vec xn;
            double rn = 0.0;
            try {
                sys.observe(t_new, y5, xn, rn);
            } catch (const ConstraintSolveFailure& e) {
                sys.reset_warm();
                since_solve_failure = 0;
                fail_level = e.level;
                fail_msg = e.what();
                fail_t = e.t;
                ++tr.rejected;
                h *= 0.5;
                continue;
            }
            if (!(rn <= opts.residual_tol)) {
                sys.reset_warm();
                since_solve_failure = 0;
                fail_level = "residual_L0";
                fail_msg = "constraint residual " + std::to_string(rn) + " above tolerance";
                fail_t = t_new;
                ++tr.rejected;
                h *= 0.5;
                continue;
            }
            t = t_new;
            w = y5;
            k1 = k7;
            push(t, w, xn, rn);
            ++tr.accepted;
            double fac = (err == 0.0) ? kFacMax
                                      : kSafety * std::pow(err, -kAlpha) * std::pow(err_prev, kBeta);
            fac = std::clamp(fac, kFacMin, rejected_last ? 1.0 : kFacMax);
            err_prev = std::max(err, 1e-4);
            rejected_last = false;
            h = std::min(h * fac, opts.h_max);
        } else {
            sys.reset_warm();
            ++tr.rejected;
            rejected_last = true;
            h *= std::max(kFacMin, kSafety * std::pow(err, -kAlpha));
        }
    }
    return tr;
}

Trajectory integrate_first(const ReducedFirst& reduced, double t0, const Vec& x0, const IntegrationOptions& opts) {
    const auto& d = reduced.dae();
    double r0 = reduced.residual_L0(t0, x0);
    if (!(r0 <= opts.consistency_tol * std::max(1.0, x0.norm()))) {
        std::ostringstream os;
        os << "initial value is off the consistency manifold (residual " << r0 << ")";
        throw InconsistentInitialValue(os.str());
    }
    Vec warm = d.proj.P20 * x0;
    Vec accepted = warm;
    ReducedSystem sys;
    sys.rhs = [&](double t, const Vec& w) { return reduced.drift(t, w, warm); };
    sys.observe = [&](double t, const Vec& w, Vec& x, double& res) {
        Vec x20 = accepted;
        reduced.drift(t, w, x20, &x);
        res = reduced.residual_L0(t, x);
        accepted = x20;
        warm = x20;
    };
    sys.reset_warm = [&] { warm = accepted; };
    Trajectory tr = integrate(sys, t0, reduced.w_of(x0), opts);
    for (std::size_t i = 0; i < tr.times.size(); ++i)
        tr.max_w_mismatch = std::max(tr.max_w_mismatch, (d.pencil.A * tr.states[i] - tr.w_states[i]).norm());
    return tr;
}

Trajectory integrate_cascade(const ReducedCascade& reduced, double t0, const Vec& x01,
                             const IntegrationOptions& opts) {
    const auto& d = reduced.dae();
    if ((d.proj.P1 * x01 - x01).norm() > opts.consistency_tol * std::max(1.0, x01.norm()))
        throw InconsistentInitialValue("initial value for the cascade must lie in the range of P1");
    CascadeWorkspace ws, accepted;
    ReducedSystem sys;
    sys.rhs = [&](double t, const Vec& w1) { return reduced.drift(t, w1, ws); };
    sys.observe = [&](double t, const Vec& w1, Vec& x, double& res) {
        reduced.drift(t, w1, ws, &x);
        res = reduced.residual_L0(t, x);
        accepted = ws;
    };
    sys.reset_warm = [&] { ws = accepted; };
    Trajectory tr = integrate(sys, t0, d.proj.tildeA * x01, opts);
    for (std::size_t i = 0; i < tr.times.size(); ++i)
        tr.max_w_mismatch = std::max(tr.max_w_mismatch,
                                     (d.pencil.A * (d.proj.P1 * tr.states[i]) - tr.w_states[i]).norm());
    return tr;
}

Trajectory integrate_ode(const std::function<Vec(double, const Vec&)>& g, double t0, const Vec& w0,
                         const IntegrationOptions& opts) {
    ReducedSystem sys;
    sys.rhs = g;
    sys.observe = [](double, const Vec& w, Vec& x, double& res) {
        x = w;
        res = 0.0;
    };
    sys.reset_warm = [] {};
    return integrate(sys, t0, w0, opts);
}

void write_trajectory_csv(const Trajectory& tr, std::ostream& os) {
    const int N = tr.states.empty() ? 0 : static_cast<int>(tr.states.front().size());
    os << "t";
    for (int i = 1; i <= N; ++i) os << ",x_" << i;
    os << ",w_norm,residual\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        put(tr.times[k]);
        for (int i = 0; i < N; ++i) {
            os << ',';
            put(tr.states[k](i));
        }
        os << ',';
        put(tr.w_states[k].norm());
        os << ',';
        put(tr.residuals[k]);
        os << '\n';
    }
}

std::string termination_json(const Trajectory& tr) {
    const auto& term = tr.termination;
    nlohmann::ordered_json j;
    j["termination"] = to_string(term.kind);
    j["t"] = term.t;
    j["final_norm"] = term.final_norm;
    if (term.kind == Termination::Kind::BlowUpSuspected) {
        j["t_escape_estimate"] = term.t_escape_estimate;
        j["escape_method"] = term.escape_method;
    }
    if (!term.level.empty()) j["level"] = term.level;
    if (!term.message.empty()) j["message"] = term.message;
    j["accepted_steps"] = tr.accepted;
    j["rejected_steps"] = tr.rejected;
    j["rhs_evaluations"] = tr.rhs_evals;
    double max_res = 0.0;
    for (double r : tr.residuals) max_res = std::max(max_res, r);
    j["max_residual_L0"] = max_res;
    j["between_steps"] = "linear interpolation only";
    return j.dump(2) + "\n";
}

}  // namespace daekit
