#include "daekit/reduction.hpp"

#include "daekit/errors.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace daekit {

const char* to_string(StructureTag tag) {
    switch (tag) {
        case StructureTag::General: return "General";
        case StructureTag::StructuredAppr2: return "StructuredAppr2";
        case StructureTag::StructuredAppr2Variant: return "StructuredAppr2Variant";
    }
    return "General";
}

StructureTag structure_from_string(const std::string& s) {
    if (s == "General") return StructureTag::General;
    if (s == "StructuredAppr2") return StructureTag::StructuredAppr2;
    if (s == "StructuredAppr2Variant") return StructureTag::StructuredAppr2Variant;
    throw SchemaError("unknown structure_tag '" + s + "'");
}

std::shared_ptr<const SemilinearDAE> make_dae(Pencil pencil, NonlinearField f, const Tolerances& tol) {
    auto dae = std::make_shared<SemilinearDAE>();
    dae->tol = tol;
    dae->canonical = build_chains(pencil, tol);
    dae->dual = build_dual_chains(pencil, dae->canonical, tol);
    dae->proj = build_projectors(dae->canonical, dae->dual, pencil, tol);
    dae->pencil = std::move(pencil);
    dae->f = std::move(f);
    return dae;
}

namespace {

// Newton on a coordinate residual; failures are rethrown as ConstraintSolveFailure.
Vec solve_level(const ImplicitProblem& pb, double t, const Vec& guess, double scale, double jac_scale,
                const ConstraintSolveOptions& o, const std::string& tag) {
    SolveOptions so;
    so.tol = o.rel_tol * (1.0 + scale);
    so.max_iter = o.max_iter;
    so.jacobian_scale = jac_scale;
    try {
        return solve_newton(pb, t, Vec(0), guess, so).y;
    } catch (const Error& e) {
        std::ostringstream os;
        os << "level " << tag << " at t=" << t << ": " << e.what();
        throw ConstraintSolveFailure(os.str(), t, tag);
    }
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// First approach

ReducedFirst::ReducedFirst(std::shared_ptr<const SemilinearDAE> dae, ConstraintSolveOptions opts)
    : dae_(std::move(dae)), opts_(opts) {
    const auto& d = *dae_;
    bottom_ = slot_basis(d.pencil, d.canonical, d.dual, slots_bottom(d.canonical));
    top_ = slot_basis(d.pencil, d.canonical, d.dual, slots_top(d.canonical));
    drift_proj_ = d.proj.Q1 + d.proj.Q2Sigma;
}

Split ReducedFirst::split(const Vec& x) const {
    const auto& p = dae_->proj;
    return {p.P1 * x, p.P2Sigma * x, p.P20 * x};
}

Vec ReducedFirst::Pi(double t, const Vec& x) const {
    const auto& d = *dae_;
    return d.proj.tildeA_inv * (drift_proj_ * (d.f.eval(t, x) - d.pencil.B * x));
}

Vec ReducedFirst::F2star(double t, const Vec& x1, const Vec& x2Sigma, const Vec& x20) const {
    const auto& d = *dae_;
    Vec x = x1 + x2Sigma + x20;
    return d.proj.Q2star * (d.f.eval(t, x) - d.pencil.B * x);
}

double ReducedFirst::residual_L0(double t, const Vec& x) const {
    Split s = split(x);
    return F2star(t, s.x1, s.x2Sigma, s.x20).norm();
}

Vec ReducedFirst::solve_x20(double t, const Vec& x12, const Vec& x20_guess) const {
    const auto& d = *dae_;
    const int n = bottom_.size();
    if (n == 0) return Vec::Zero(d.N());
    const Mat& B = d.pencil.B;
    // unknown c: x₂₀ = Φ_bottom c ; residual coordinates q_topᵀ[f − Bx]
    ImplicitProblem pb;
    pb.residual = [&](double tt, const Vec&, const Vec& c) -> Vec {
        Vec x = x12 + bottom_.phi * c;
        return top_.q.transpose() * (d.f.eval(tt, x) - B * x);
    };
    if (d.f.jacobian) {
        pb.jac_y = [&](double tt, const Vec&, const Vec& c) -> Mat {
            Vec x = x12 + bottom_.phi * c;
            return top_.q.transpose() * (d.f.jacobian(tt, x) - B) * bottom_.phi;
        };
    }
    Vec c0 = bottom_.q.transpose() * (B * x20_guess);
    Vec xg = x12 + bottom_.phi * c0;
    double scale = (top_.q.transpose() * d.f.eval(t, xg)).norm() + (B * xg).norm();
    double jf = d.f.jacobian ? d.f.jacobian(t, xg).norm() : 0.0;
    double jac_scale = top_.q.norm() * (jf + B.norm()) * bottom_.phi.norm();
    Vec c = solve_level(pb, t, c0, scale, jac_scale, opts_, "F2star");
    return bottom_.phi * c;
}

Vec ReducedFirst::drift(double t, const Vec& w, Vec& x20, Vec* xout) const {
    const auto& d = *dae_;
    Vec x12 = d.proj.tildeA_inv * w;
    x20 = solve_x20(t, x12, x20);
    Vec x = x12 + x20;
    if (xout) *xout = x;
    return drift_proj_ * (d.f.eval(t, x) - d.pencil.B * x);
}

Vec ReducedFirst::consistent_initialize(double t0, const Vec& x_guess) const {
    const auto& p = dae_->proj;
    Vec x12 = (p.P1 + p.P2Sigma) * x_guess;
    return x12 + solve_x20(t0, x12, p.P20 * x_guess);
}

// ---------------------------------------------------------------------------------------------
// Structure check

namespace {

struct Restriction {
    std::string name;
    SlotSet rows;
    SlotSet allowed;
};

std::vector<Restriction> restrictions(const CanonicalSystem& cs, StructureTag tag) {
    std::vector<Restriction> out;
    const int nu = cs.nu;
    auto tops_from = [&](int len) {
        SlotSet s;
        for (int i = 0; i < cs.n(); ++i)
            if (cs.chains[i].multiplicity() >= len) s.push_back({i, cs.chains[i].multiplicity()});
        return s;
    };
    if (tag == StructureTag::StructuredAppr2) {
        for (int s = 1; s <= nu - 1; ++s) {
            Restriction r;
            r.name = "Q2s^(s+1) f, s=" + std::to_string(s);
            r.rows = slots_level_mult(cs, s, s + 1);
            r.allowed = tops_from(s + 1);
            if (!r.rows.empty()) out.push_back(r);
        }
    } else if (tag == StructureTag::StructuredAppr2Variant) {
        Restriction r;
        r.name = "Q2star^(2) f";
        r.rows = tops_from(2);
        r.allowed = tops_from(2);
        if (!r.rows.empty()) out.push_back(r);
    }
    if (tag != StructureTag::General) {
        for (int s = 1; s <= nu - 2; ++s) {
            Restriction r;
            r.name = "Q2Sigma,s f, s=" + std::to_string(s);
            for (int i = 0; i < cs.n(); ++i)
                if (cs.chains[i].multiplicity() >= s + 2) r.rows.push_back({i, s + 1});
            r.allowed = tops_from(2);
            for (int i = 0; i < cs.n(); ++i) {
                int m = cs.chains[i].multiplicity();
                for (int j = s + 1; j <= m - 1; ++j) r.allowed.push_back({i, j});
            }
            if (!r.rows.empty()) out.push_back(r);
        }
    }
    return out;
}

}  // namespace

StructureReport check_structure(const SemilinearDAE& dae, const StructureCheckOptions& opts) {
    StructureReport rep;
    const int N = dae.N();
    auto rs = restrictions(dae.canonical, dae.f.structure);
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 10.0);
    for (const auto& r : rs) {
        SlotBasis rows = slot_basis(dae.pencil, dae.canonical, dae.dual, r.rows);
        Mat keep = slot_basis(dae.pencil, dae.canonical, dae.dual, r.allowed).P(dae.pencil.B);
        Mat excluded = Mat::Identity(N, N) - keep;
        for (int k = 0; k < opts.samples; ++k) {
            double t = unif(rng);
            Vec x(N), z(N);
            for (int i = 0; i < N; ++i) x(i) = gauss(rng);
            for (int i = 0; i < N; ++i) z(i) = gauss(rng);
            Vec delta = excluded * z;
            if (delta.norm() == 0.0) continue;
            delta *= opts.perturbation * (1.0 + x.norm()) / delta.norm();
            Vec f0 = rows.q.transpose() * dae.f.eval(t, x);
            Vec f1 = rows.q.transpose() * dae.f.eval(t, x + delta);
            double dep = (f1 - f0).norm() / std::max(1.0, f0.norm());
            if (dep > rep.max_dependence) {
                rep.max_dependence = dep;
                rep.offending = r.name;
                rep.sample_t = t;
                rep.sample_x = x;
            }
        }
    }
    rep.pass = rep.max_dependence <= opts.tol;
    return rep;
}

// ---------------------------------------------------------------------------------------------
// Cascade

struct ReducedCascade::Eval {
    const ReducedCascade& rc;
    CascadeWorkspace& ws;
    std::map<std::pair<int, double>, Vec> val, der;

    const SemilinearDAE& d() const { return *rc.dae_; }

    // level index of a slot and its position within the level
    std::pair<int, int> locate(const ChainSlot& s) const {
        for (int k = 0; k < static_cast<int>(rc.levels_.size()); ++k) {
            const auto& sl = rc.levels_[k].slots;
            for (int p = 0; p < static_cast<int>(sl.size()); ++p)
                if (sl[p].chain == s.chain && sl[p].pos == s.pos) return {k, p};
        }
        return {-1, -1};
    }

    Vec arg_x(int k, double t, const Vec& y) {
        const auto& L = rc.levels_[k];
        Vec vals = Vec::Zero(rc.root_dim_);
        for (const auto& s : L.arg_slots) {
            auto [lk, p] = locate(s);
            vals(rc.slot_index(s)) = (lk == k) ? y(p) : value(lk, t)(p);
        }
        return rc.phi_ * vals;
    }

    // ċ of the slot above each unknown (zero when the unknown is a top)
    Vec dterm(const SlotSet& slots, double t) {
        Vec out = Vec::Zero(static_cast<int>(slots.size()));
        for (int p = 0; p < static_cast<int>(slots.size()); ++p) {
            const auto& s = slots[p];
            if (s.pos < d().canonical.chains[s.chain].multiplicity()) {
                auto [lk, pp] = locate({s.chain, s.pos + 1});
                out(p) = deriv(lk, t)(pp);
            }
        }
        return out;
    }

    Mat rows_q(int k) const {
        const auto& sl = rc.levels_[k].slots;
        Mat q(rc.dae_->N(), sl.size());
        for (int p = 0; p < static_cast<int>(sl.size()); ++p) q.col(p) = rc.q_.col(rc.slot_index(sl[p]));
        return q;
    }
    Mat cols_phi(int k) const {
        const auto& sl = rc.levels_[k].slots;
        Mat ph(rc.dae_->N(), sl.size());
        for (int p = 0; p < static_cast<int>(sl.size()); ++p) ph.col(p) = rc.phi_.col(rc.slot_index(sl[p]));
        return ph;
    }

    Vec residual(int k, double t, const Vec& y) {
        Vec x = arg_x(k, t, y);
        return rows_q(k).transpose() * d().f.eval(t, x) - y + dterm(rc.levels_[k].slots, t);
    }

    ImplicitProblem problem(int k) {
        ImplicitProblem pb;
        pb.residual = [this, k](double tt, const Vec&, const Vec& y) { return residual(k, tt, y); };
        if (d().f.jacobian) {
            pb.jac_y = [this, k](double tt, const Vec&, const Vec& y) -> Mat {
                Vec x = arg_x(k, tt, y);
                Mat J = rows_q(k).transpose() * d().f.jacobian(tt, x) * cols_phi(k);
                return J - Mat::Identity(J.rows(), J.cols());
            };
        }
        return pb;
    }

    const Vec& value(int k, double t) {
        auto key = std::make_pair(k, t);
        auto it = val.find(key);
        if (it != val.end()) return it->second;
        const auto& L = rc.levels_[k];
        const int m = static_cast<int>(L.slots.size());
        Vec guess = Vec::Zero(m);
        auto g = ws.guesses.find(k);
        if (g != ws.guesses.end() && g->second.size() == m) guess = g->second;
        Vec x = arg_x(k, t, guess);
        double scale = (rows_q(k).transpose() * d().f.eval(t, x)).norm() + guess.norm() +
                       dterm(L.slots, t).norm();
        double jf = d().f.jacobian ? d().f.jacobian(t, x).norm() : 0.0;
        double jac_scale = 1.0 + rows_q(k).norm() * jf * cols_phi(k).norm();
        Vec y = solve_level(problem(k), t, guess, scale, jac_scale, rc.opts_, L.tag);
        ws.guesses[k] = y;
        return val.emplace(key, y).first->second;
    }

    const Vec& deriv(int k, double t) {
        auto key = std::make_pair(k, t);
        auto it = der.find(key);
        if (it != der.end()) return it->second;
        const auto& L = rc.levels_[k];
        Vec y = value(k, t);
        ImplicitProblem pb = problem(k);
        Vec gdot;
        bool standalone = (L.kind == CascadeLevel::Kind::Fused) ||
                          (L.kind == CascadeLevel::Kind::Top && k == 0);
        if (standalone && d().f.t_derivative) {
            gdot = rows_q(k).transpose() * d().f.t_derivative(t, arg_x(k, t, y));
        } else {
            // total t-derivative with y frozen and every earlier level re-solved
            double h = 1e-3 * std::max(1.0, 0.01 * std::abs(t));
            Vec g2p = residual(k, t + 2 * h, y), g1p = residual(k, t + h, y);
            Vec g1m = residual(k, t - h, y), g2m = residual(k, t - 2 * h, y);
            gdot = (-g2p + 8.0 * g1p - 8.0 * g1m + g2m) / (12.0 * h);
        }
        Vec ydot;
        try {
            double jf = d().f.jacobian ? d().f.jacobian(t, arg_x(k, t, y)).norm() : 0.0;
            ydot = solve_linear(jacobian_y(pb, t, Vec(0), y), -gdot, "implicit derivative",
                                1.0 + rows_q(k).norm() * jf * cols_phi(k).norm());
        } catch (const Error& e) {
            throw ConstraintSolveFailure(std::string("derivative of ") + L.tag + ": " + e.what(), t, L.tag);
        }
        return der.emplace(key, ydot).first->second;
    }
};

ReducedCascade::ReducedCascade(std::shared_ptr<const SemilinearDAE> dae, bool waive,
                               ConstraintSolveOptions opts)
    : dae_(std::move(dae)), opts_(opts) {
    const auto& d = *dae_;
    const auto& cs = d.canonical;
    const int nu = cs.nu;
    if (!waive && d.f.structure != StructureTag::General) {
        StructureReport rep = check_structure(d);
        if (!rep.pass) {
            std::ostringstream os;
            os << rep.offending << " depends on excluded components (max relative change "
               << rep.max_dependence << " at t=" << rep.sample_t << ")";
            throw StructureViolation(os.str());
        }
    } else if (!waive && nu >= 2) {
        throw StructureViolation("the cascade needs a structured field (structure_tag is General)");
    }

    int off = 0;
    for (const auto& ch : cs.chains) {
        slot_offset_.push_back(off);
        off += ch.multiplicity();
    }
    root_dim_ = off;
    SlotBasis all = slot_basis(d.pencil, cs, d.dual, slots_all(cs));
    phi_ = all.phi;
    q_ = all.q;

    auto tops_from = [&](int len) {
        SlotSet s;
        for (int i = 0; i < cs.n(); ++i)
            if (cs.chains[i].multiplicity() >= len) s.push_back({i, cs.chains[i].multiplicity()});
        return s;
    };
    auto level_of = [&](const ChainSlot& s) {
        for (int k = 0; k < static_cast<int>(levels_.size()); ++k)
            for (const auto& t : levels_[k].slots)
                if (t.chain == s.chain && t.pos == s.pos) return k;
        return -1;
    };

    if (d.f.structure == StructureTag::StructuredAppr2Variant && nu >= 2) {
        CascadeLevel L;
        L.kind = CascadeLevel::Kind::Fused;
        L.s = 1;
        L.tag = "F2Sigma^(1)";
        L.slots = tops_from(2);
        L.arg_slots = L.slots;
        levels_.push_back(L);
    } else {
        for (int s = nu - 1; s >= 1; --s) {
            CascadeLevel L;
            L.kind = CascadeLevel::Kind::Top;
            L.s = s;
            L.tag = (s == nu - 1) ? "F2(nu-1)" : "F2s^(s+1), s=" + std::to_string(s);
            L.slots = slots_level_mult(cs, s, s + 1);
            L.arg_slots = tops_from(s + 1);
            if (!L.slots.empty()) levels_.push_back(L);
        }
    }
    for (int s = nu - 2; s >= 1; --s) {
        CascadeLevel L;
        L.kind = CascadeLevel::Kind::Wedge;
        L.s = s;
        L.tag = "F2Sigma,s, s=" + std::to_string(s);
        for (int i = 0; i < cs.n(); ++i)
            if (cs.chains[i].multiplicity() >= s + 2) L.slots.push_back({i, s + 1});
        L.arg_slots = tops_from(2);
        for (int i = 0; i < cs.n(); ++i)
            for (int j = s + 1; j <= cs.chains[i].multiplicity() - 1; ++j) L.arg_slots.push_back({i, j});
        std::set<int> deps;
        for (const auto& sl : L.slots) deps.insert(level_of({sl.chain, sl.pos + 1}));
        L.derivative_deps.assign(deps.begin(), deps.end());
        levels_.push_back(L);
    }
    bottom_.kind = CascadeLevel::Kind::Bottom;
    bottom_.tag = "F20";
    bottom_.slots = slots_bottom(cs);
    std::set<int> deps;
    for (const auto& sl : bottom_.slots)
        if (cs.chains[sl.chain].multiplicity() >= 2) deps.insert(level_of({sl.chain, 2}));
    bottom_.derivative_deps.assign(deps.begin(), deps.end());
}

int ReducedCascade::equation_count() const {
    const int nu = dae_->nu();
    if (nu == 0) return 1;
    // empty top levels still count as equations
    const bool fused = !levels_.empty() && levels_.front().kind == CascadeLevel::Kind::Fused;
    return (fused ? 1 : nu - 1) + std::max(0, nu - 2) + 2;
}

Vec ReducedCascade::slots_to_x(const SlotSet& slots, const Vec& values) const {
    Vec x = Vec::Zero(dae_->N());
    for (int p = 0; p < static_cast<int>(slots.size()); ++p) x += values(p) * phi_.col(slot_index(slots[p]));
    return x;
}

Vec ReducedCascade::level_residual(int k, double t, const Vec& y, CascadeWorkspace& ws) const {
    Eval ev{*this, ws, {}, {}};
    return ev.residual(k, t, y);
}

void ReducedCascade::ensure_sigma(double t, CascadeWorkspace& ws) const {
    if (ws.cached_t == t && ws.cached_values.size() == root_dim_) return;
    Eval ev{*this, ws, {}, {}};
    Vec vals = Vec::Zero(root_dim_), ders = Vec::Zero(root_dim_);
    for (int k = 0; k < static_cast<int>(levels_.size()); ++k) {
        const Vec& y = ev.value(k, t);
        for (int p = 0; p < static_cast<int>(levels_[k].slots.size()); ++p)
            vals(slot_index(levels_[k].slots[p])) = y(p);
    }
    for (int k : bottom_.derivative_deps) {
        const Vec& yd = ev.deriv(k, t);
        for (int p = 0; p < static_cast<int>(levels_[k].slots.size()); ++p)
            ders(slot_index(levels_[k].slots[p])) = yd(p);
    }
    ws.cached_t = t;
    ws.cached_values = vals;
    ws.cached_derivs = ders;
}

Vec ReducedCascade::eta_sigma(double t, CascadeWorkspace& ws) const {
    if (root_dim_ == 0) return Vec::Zero(dae_->N());
    ensure_sigma(t, ws);
    return phi_ * ws.cached_values;
}

Vec ReducedCascade::F20(double t, const Vec& x1, const Vec& x20, CascadeWorkspace& ws) const {
    const auto& d = *dae_;
    const int n = static_cast<int>(bottom_.slots.size());
    if (n == 0) return Vec(0);
    ensure_sigma(t, ws);
    Mat qb(d.N(), n);
    Vec dterm(n);
    for (int p = 0; p < n; ++p) {
        const auto& s = bottom_.slots[p];
        qb.col(p) = q_.col(slot_index(s));
        dterm(p) = d.canonical.chains[s.chain].multiplicity() >= 2 ? ws.cached_derivs(slot_index({s.chain, 2})) : 0.0;
    }
    Vec x = x1 + phi_ * ws.cached_values + x20;
    Vec c = qb.transpose() * (d.pencil.B * x20);
    return qb.transpose() * d.f.eval(t, x) - c + dterm;
}

Vec ReducedCascade::solve_x20(double t, const Vec& x1, CascadeWorkspace& ws) const {
    const auto& d = *dae_;
    const int n = static_cast<int>(bottom_.slots.size());
    if (n == 0) return Vec::Zero(d.N());
    ensure_sigma(t, ws);
    Mat pb_phi(d.N(), n), qb(d.N(), n);
    Vec dterm(n);
    for (int p = 0; p < n; ++p) {
        const auto& s = bottom_.slots[p];
        pb_phi.col(p) = phi_.col(slot_index(s));
        qb.col(p) = q_.col(slot_index(s));
        dterm(p) = d.canonical.chains[s.chain].multiplicity() >= 2 ? ws.cached_derivs(slot_index({s.chain, 2})) : 0.0;
    }
    Vec base = x1 + phi_ * ws.cached_values;
    ImplicitProblem pb;
    pb.residual = [&](double tt, const Vec&, const Vec& c) -> Vec {
        return qb.transpose() * d.f.eval(tt, base + pb_phi * c) - c + dterm;
    };
    if (d.f.jacobian) {
        pb.jac_y = [&](double tt, const Vec&, const Vec& c) -> Mat {
            return qb.transpose() * d.f.jacobian(tt, base + pb_phi * c) * pb_phi - Mat::Identity(n, n);
        };
    }
    Vec c0 = (ws.x20.size() == d.N()) ? Vec(qb.transpose() * (d.pencil.B * ws.x20)) : Vec(Vec::Zero(n));
    double scale = (qb.transpose() * d.f.eval(t, base + pb_phi * c0)).norm() + c0.norm() + dterm.norm();
    double jf = d.f.jacobian ? d.f.jacobian(t, base + pb_phi * c0).norm() : 0.0;
    Vec c = solve_level(pb, t, c0, scale, 1.0 + qb.norm() * jf * pb_phi.norm(), opts_, "F20");
    ws.x20 = pb_phi * c;
    return ws.x20;
}

Vec ReducedCascade::state(double t, const Vec& x1, CascadeWorkspace& ws) const {
    Vec sigma = eta_sigma(t, ws);
    return x1 + sigma + solve_x20(t, x1, ws);
}

Vec ReducedCascade::drift(double t, const Vec& w1, CascadeWorkspace& ws, Vec* xout) const {
    const auto& d = *dae_;
    Vec x1 = d.proj.tildeA_inv * w1;
    Vec x = state(t, x1, ws);
    if (xout) *xout = x;
    return d.proj.Q1 * d.f.eval(t, x) - d.proj.Q1 * (d.pencil.B * x1);
}

Vec ReducedCascade::consistent_initialize(double t0, const Vec& x_guess, CascadeWorkspace& ws) const {
    const auto& p = dae_->proj;
    if (ws.x20.size() != dae_->N()) ws.x20 = p.P20 * x_guess;
    return state(t0, p.P1 * x_guess, ws);
}

double ReducedCascade::residual_L0(double t, const Vec& x) const {
    const auto& d = *dae_;
    return (d.proj.Q2star * (d.f.eval(t, x) - d.pencil.B * x)).norm();
}

}  // namespace daekit
