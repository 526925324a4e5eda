#include "daekit/implicit_solver.hpp"

#include "daekit/errors.hpp"

#include <cmath>
#include <sstream>

namespace daekit {

namespace {

bool finite(const Vec& v) { return v.allFinite(); }

double last_or(const std::vector<double>& v, double dflt) { return v.empty() ? dflt : v.back(); }

}  // namespace

Vec solve_linear(const Mat& J, const Vec& r, const char* where, double scale) {
    if (J.rows() == 0) return Vec(0);
    Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    double smax = s(0), smin = s(s.size() - 1);
    if (!(smax > 0) || !std::isfinite(smax) || smin <= 100.0 * J.rows() * kEps * std::max(smax, scale)) {
        std::ostringstream os;
        os << where << ": Jacobian numerically singular (σ_min = " << smin << " against reference scale "
           << std::max(smax, scale) << ")";
        throw SingularJacobian(os.str());
    }
    return svd.solve(r);
}

Mat jacobian_y(const ImplicitProblem& pb, double t, const Vec& p, const Vec& y) {
    if (pb.jac_y) return pb.jac_y(t, p, y);
    const int n = static_cast<int>(y.size());
    Vec f0 = pb.residual(t, p, y);
    Mat J(f0.size(), n);
    const double base = std::cbrt(kEps);
    for (int j = 0; j < n; ++j) {
        double h = base * std::max(1.0, std::abs(y(j)));
        Vec yp = y, ym = y;
        yp(j) += h;
        ym(j) -= h;
        J.col(j) = (pb.residual(t, p, yp) - pb.residual(t, p, ym)) / (yp(j) - ym(j));
    }
    return J;
}

Vec derivative_t(const ImplicitProblem& pb, double t, const Vec& p, const Vec& y) {
    if (pb.jac_t) return pb.jac_t(t, p, y);
    double h = std::max(1e-6, 1e-6 * std::abs(t));
    double tp = t + h, tm = t - h;
    return (pb.residual(tp, p, y) - pb.residual(tm, p, y)) / (tp - tm);
}

SolveResult solve_fixed_point(const ImplicitProblem& pb, double t, const Vec& p, const Vec& y0,
                              const SolveOptions& opts) {
    if (!pb.anchor_W) throw SingularJacobian("fixed-point mode requires an anchor operator W");
    const Mat& W = *pb.anchor_W;
    SolveResult out;
    out.mode_used = SolveMode::FixedPoint;
    Vec y = y0;
    double prev_step = -1.0;
    const int iters = std::max(opts.max_iter, opts.fixed_point_max_iter);
    for (int k = 0; k < iters; ++k) {
        Vec F = pb.residual(t, p, y);
        out.residual = F.norm();
        out.iterations = k;
        if (!finite(F) || !finite(y)) break;
        if (out.residual <= opts.tol) {
            out.y = y;
            return out;
        }
        Vec step = solve_linear(W, F, "anchor W");
        y -= step;
        double sn = step.norm();
        if (prev_step > 0) out.contraction.push_back(sn / prev_step);
        prev_step = sn;
    }
    std::ostringstream os;
    os << "fixed-point iteration did not converge (residual " << out.residual << ")";
    throw NoConvergence(os.str(), out.iterations, out.residual, last_or(out.contraction, 1.0));
}

SolveResult solve_newton(const ImplicitProblem& pb, double t, const Vec& p, const Vec& y0,
                         const SolveOptions& opts) {
    SolveResult out;
    out.mode_used = SolveMode::Newton;
    Vec y = y0;
    double prev_step = -1.0;
    for (int k = 0; k < opts.max_iter; ++k) {
        Vec F = pb.residual(t, p, y);
        double nF = F.norm();
        out.residual = nF;
        out.iterations = k;
        if (!finite(F)) break;
        if (nF <= opts.tol) {
            out.y = y;
            return out;
        }
        Vec delta;
        try {
            delta = solve_linear(jacobian_y(pb, t, p, y), -F, "Newton", opts.jacobian_scale);
        } catch (const SingularJacobian&) {
            if (!pb.anchor_W) throw;
            SolveResult fp = solve_fixed_point(pb, t, p, y, opts);
            fp.iterations += k;
            return fp;
        }
        double alpha = 1.0;
        bool accepted = false;
        while (alpha >= opts.min_step) {
            Vec yt = y + alpha * delta;
            Vec Ft = pb.residual(t, p, yt);
            if (finite(Ft) && Ft.norm() <= (1.0 - 1e-4 * alpha) * nF) {
                y = yt;
                accepted = true;
                break;
            }
            alpha *= opts.damping;
        }
        if (!accepted) {
            std::ostringstream os;
            os << "line search failed at residual " << nF;
            throw NoConvergence(os.str(), k, nF, last_or(out.contraction, 1.0));
        }
        double sn = alpha * delta.norm();
        if (prev_step > 0) out.contraction.push_back(sn / prev_step);
        prev_step = sn;
    }
    std::ostringstream os;
    os << "Newton did not converge in " << opts.max_iter << " iterations (residual "
       << out.residual << ")";
    throw NoConvergence(os.str(), out.iterations, out.residual, last_or(out.contraction, 1.0));
}

SolveResult solve(const ImplicitProblem& pb, double t, const Vec& p, const Vec& y0,
                  const SolveOptions& opts) {
    return opts.mode == SolveMode::FixedPoint ? solve_fixed_point(pb, t, p, y0, opts)
                                              : solve_newton(pb, t, p, y0, opts);
}

Vec implicit_derivative(const ImplicitProblem& pb, double t, const Vec& p, const Vec& y) {
    return solve_linear(jacobian_y(pb, t, p, y), -derivative_t(pb, t, p, y), "implicit derivative");
}

}  // namespace daekit
