#include "daekit/projectors.hpp"

#include "daekit/errors.hpp"

#include <sstream>

namespace daekit {

namespace {

double op_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

Mat zero(int n) { return Mat::Zero(n, n); }

// Minimal-norm least-squares solution of M Z = R truncated to the given rank.
Mat truncated_solve(const Mat& M, const Mat& R, int rank) {
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat Z = Mat::Zero(M.cols(), R.cols());
    for (int s = 0; s < rank; ++s)
        Z += svd.matrixV().col(s) * (svd.matrixU().col(s).transpose() * R) / svd.singularValues()(s);
    return Z;
}

}  // namespace

SlotSet slots_where(const CanonicalSystem& cs, bool (*pred)(int, int, int), int arg) {
    SlotSet out;
    for (int i = 0; i < cs.n(); ++i) {
        int m = cs.chains[i].multiplicity();
        for (int j = 1; j <= m; ++j)
            if (pred(j, m, arg)) out.push_back({i, j});
    }
    return out;
}

SlotSet slots_level(const CanonicalSystem& cs, int s) {
    return slots_where(cs, [](int j, int, int s_) { return j == s_ + 1; }, s);
}

SlotSet slots_level_mult(const CanonicalSystem& cs, int s, int mult) {
    SlotSet out;
    for (int i = 0; i < cs.n(); ++i)
        if (cs.chains[i].multiplicity() == mult && s + 1 <= mult) out.push_back({i, s + 1});
    return out;
}

SlotSet slots_top(const CanonicalSystem& cs) {
    return slots_where(cs, [](int j, int m, int) { return j == m; }, 0);
}

SlotSet slots_bottom(const CanonicalSystem& cs) {
    return slots_where(cs, [](int j, int, int) { return j == 1; }, 0);
}

SlotSet slots_sigma(const CanonicalSystem& cs) {
    return slots_where(cs, [](int j, int, int) { return j >= 2; }, 0);
}

SlotSet slots_all(const CanonicalSystem& cs) {
    return slots_where(cs, [](int, int, int) { return true; }, 0);
}

SlotBasis slot_basis(const Pencil& pencil, const CanonicalSystem& cs, const DualSystem& ds,
                     const SlotSet& slots) {
    const int n = pencil.size();
    const int k = static_cast<int>(slots.size());
    SlotBasis b;
    b.slots = slots;
    b.phi.resize(n, k);
    b.q.resize(n, k);
    for (int c = 0; c < k; ++c) {
        b.phi.col(c) = cs.chains[slots[c].chain].vectors[slots[c].pos - 1];
        b.q.col(c) = ds.chains[slots[c].chain].vectors[slots[c].pos - 1];
    }
    b.bphi = pencil.B * b.phi;
    return b;
}

std::pair<Mat, Mat> build_tilde_A(const Pencil& pencil, const CanonicalSystem& canonical,
                                  const DualSystem& dual, const Tolerances& tol) {
    const int n = pencil.size();
    Mat tA = pencil.A;
    for (int i = 0; i < canonical.n(); ++i) {
        const auto& ch = canonical.chains[i];
        Vec top = pencil.B * ch.vectors.back();
        Vec left = pencil.B.transpose() * dual.chains[i].vectors.front();
        tA += top * left.transpose();
    }
    Eigen::FullPivLU<Mat> lu(tA);
    if (!lu.isInvertible()) throw InvariantViolation("Ã is singular");
    Mat inv = lu.inverse();
    double r = rel_diff(tA * inv, Mat::Identity(n, n));
    if (!(r <= tol.proj)) {
        std::ostringstream os;
        os << "‖ÃÃ⁻¹ − I‖ = " << r;
        throw InvariantViolation(os.str());
    }
    return {tA, inv};
}

void build_semi_inverses(ProjectorSet& set, const Pencil& pencil, const Tolerances&) {
    set.A_semiinv = set.tildeA_inv * (set.Q1 + set.Q2Sigma);
    const int d = static_cast<int>(std::lround(set.P2.trace()));
    if (d == 0) {
        set.B2_semiinv = zero(set.N);
        return;
    }
    Mat BP2 = pencil.B * set.P2;
    set.B2_semiinv = set.P2 * truncated_solve(BP2, set.Q2, d);
}

ProjectorSet build_projectors(const CanonicalSystem& cs, const DualSystem& ds, const Pencil& pencil,
                              const Tolerances& tol) {
    const int n = pencil.size();
    const int nu = cs.nu;
    const Mat& B = pencil.B;
    ProjectorSet ps;
    ps.N = n;
    ps.nu = nu;
    auto P_of = [&](const SlotSet& s) { return slot_basis(pencil, cs, ds, s).P(B); };
    auto Q_of = [&](const SlotSet& s) { return slot_basis(pencil, cs, ds, s).Q(); };

    ps.P2 = P_of(slots_all(cs));
    ps.Q2 = Q_of(slots_all(cs));
    ps.P1 = Mat::Identity(n, n) - ps.P2;
    ps.Q1 = Mat::Identity(n, n) - ps.Q2;
    for (int s = 0; s < nu; ++s) {
        ps.P2s.push_back(P_of(slots_level(cs, s)));
        ps.Q2s.push_back(Q_of(slots_level(cs, s)));
        for (int j = s + 1; j <= nu; ++j) {
            ps.P2s_j[{s, j}] = P_of(slots_level_mult(cs, s, j));
            ps.Q2s_j[{s, j}] = Q_of(slots_level_mult(cs, s, j));
        }
    }
    ps.P20 = P_of(slots_bottom(cs));
    ps.P2Sigma = P_of(slots_sigma(cs));
    ps.Q2star = Q_of(slots_top(cs));
    ps.Q2Sigma = ps.Q2 - ps.Q2star;
    for (int s = 0; s + 2 <= nu; ++s) {
        ps.Q2Sigma_s.push_back(ps.Q2s[s] - ps.Q2s_j[{s, s + 1}]);
        ps.P2wedge_s.push_back(ps.P2s[s] - ps.P2s_j[{s, s + 1}]);
    }
    ps.Q2star_1 = nu >= 1 ? ps.Q2s_j[{0, 1}] : zero(n);
    ps.Q2star_2 = zero(n);
    ps.P2Sigma_1 = zero(n);
    for (int s = 1; s < nu; ++s) {
        ps.Q2star_2 += ps.Q2s_j[{s, s + 1}];
        ps.P2Sigma_1 += ps.P2s_j[{s, s + 1}];
    }
    ps.P2Sigma_2 = zero(n);
    for (int s = 1; s + 2 <= nu; ++s) ps.P2Sigma_2 += ps.P2wedge_s[s];

    std::tie(ps.tildeA, ps.tildeA_inv) = build_tilde_A(pencil, cs, ds, tol);
    build_semi_inverses(ps, pencil, tol);

    auto res = projector_residuals(ps, pencil, cs, ds);
    const std::pair<std::string, double>* worst = nullptr;
    for (const auto& r : res)
        if (!worst || !(r.second <= worst->second)) worst = &r;
    if (worst && !(worst->second <= tol.proj)) {
        std::ostringstream os;
        os << "projector identity '" << worst->first << "' off by " << worst->second;
        throw InvariantViolation(os.str());
    }
    return ps;
}

std::vector<std::pair<std::string, double>> projector_residuals(const ProjectorSet& ps,
                                                                const Pencil& pencil,
                                                                const CanonicalSystem& cs,
                                                                const DualSystem& ds) {
    const int n = ps.N;
    const Mat& A = pencil.A;
    const Mat& B = pencil.B;
    const Mat I = Mat::Identity(n, n);
    const double na = std::max(op_norm(A), 1e-300), nb = std::max(op_norm(B), 1e-300);
    std::vector<std::pair<std::string, double>> out;
    auto add = [&](const std::string& name, const Mat& lhs, const Mat& rhs, double scale = 1.0) {
        out.emplace_back(name, rel_diff(lhs, rhs, scale));
    };
    auto add_zero = [&](const std::string& name, const Mat& m, double scale) {
        out.emplace_back(name, m.norm() / std::max(scale, 1e-300));
    };

    add("P1*P1=P1", ps.P1 * ps.P1, ps.P1);
    add("P2*P2=P2", ps.P2 * ps.P2, ps.P2);
    add_zero("P1*P2=0", ps.P1 * ps.P2, std::max(1.0, ps.P1.norm() * ps.P2.norm()));
    add("P1+P2=I", ps.P1 + ps.P2, I);
    add("Q1*Q1=Q1", ps.Q1 * ps.Q1, ps.Q1);
    add("Q2*Q2=Q2", ps.Q2 * ps.Q2, ps.Q2);
    add_zero("Q1*Q2=0", ps.Q1 * ps.Q2, std::max(1.0, ps.Q1.norm() * ps.Q2.norm()));
    add("Q1+Q2=I", ps.Q1 + ps.Q2, I);
    add("A*P1=Q1*A", A * ps.P1, ps.Q1 * A, na);
    add("A*P2=Q2*A", A * ps.P2, ps.Q2 * A, na);
    add("B*P1=Q1*B", B * ps.P1, ps.Q1 * B, nb);
    add("B*P2=Q2*B", B * ps.P2, ps.Q2 * B, nb);

    Mat sumQ = Mat::Zero(n, n), sumP = Mat::Zero(n, n), sumQS = Mat::Zero(n, n);
    for (const auto& m : ps.Q2s) sumQ += m;
    for (const auto& m : ps.P2s) sumP += m;
    for (const auto& m : ps.Q2Sigma_s) sumQS += m;
    add("Q2=sum Q2s", sumQ, ps.Q2);
    add("P2=sum P2s", sumP, ps.P2);
    add("P2Sigma+P20=P2", ps.P2Sigma + ps.P20, ps.P2);
    add("Q2Sigma+Q2star=Q2", ps.Q2Sigma + ps.Q2star, ps.Q2);
    add("Q2Sigma=sum Q2Sigma_s", sumQS, ps.Q2Sigma);
    add("P2Sigma_1+P2Sigma_2=P2Sigma", ps.P2Sigma_1 + ps.P2Sigma_2, ps.P2Sigma);
    add("Q2star_1+Q2star_2=Q2star", ps.Q2star_1 + ps.Q2star_2, ps.Q2star);

    add("tildeA*tildeA_inv=I", ps.tildeA * ps.tildeA_inv, I);
    add("tildeA_inv*tildeA=I", ps.tildeA_inv * ps.tildeA, I);
    add("tildeA_inv*A=P1+P2Sigma", ps.tildeA_inv * A, ps.P1 + ps.P2Sigma);
    add("A*tildeA_inv=Q1+Q2Sigma", A * ps.tildeA_inv, ps.Q1 + ps.Q2Sigma);
    Mat closed = ps.A_semiinv;
    for (int i = 0; i < cs.n(); ++i)
        closed += cs.chains[i].vectors.front() * ds.chains[i].vectors.back().transpose();
    add("tildeA_inv closed form", closed, ps.tildeA_inv);

    add("A_semiinv*A=P1+P2Sigma", ps.A_semiinv * A, ps.P1 + ps.P2Sigma);
    add("A*A_semiinv=Q1+Q2Sigma", A * ps.A_semiinv, ps.Q1 + ps.Q2Sigma);
    add("A_semiinv=(P1+P2Sigma)*A_semiinv", (ps.P1 + ps.P2Sigma) * ps.A_semiinv, ps.A_semiinv);
    Mat BP2 = B * ps.P2;
    add("B2_semiinv*B*P2=P2", ps.B2_semiinv * BP2, ps.P2);
    add("B*P2*B2_semiinv=Q2", BP2 * ps.B2_semiinv, ps.Q2);
    add("B2_semiinv=P2*B2_semiinv", ps.P2 * ps.B2_semiinv, ps.B2_semiinv);

    add_zero("A*P20=0", A * ps.P20, na * std::max(1.0, ps.P20.norm()));
    if (ps.nu >= 1)
        add_zero("Q2(nu-1)*A=0", ps.Q2s[ps.nu - 1] * A, na * std::max(1.0, ps.Q2s[ps.nu - 1].norm()));
    for (int s = 0; s + 1 < ps.nu; ++s)
        add("Q2s*A=A*P2(s+1) s=" + std::to_string(s), ps.Q2s[s] * A, A * ps.P2s[s + 1], na);
    return out;
}

}  // namespace daekit
