#include "daekit/certificates.hpp"

#include "daekit/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

namespace daekit {

// ---------------------------------------------------------------------------------------------
// Lyapunov components

double VComponent::eval(const Vec& w) const {
    if (kind == "quadratic") return w.dot(weights * w);
    if (kind == "norm_power") return std::pow(w.norm(), power);
    if (kind == "coordinate_square") return w(index) * w(index);
    throw UnknownRegistryId("Lyapunov component '" + kind + "'");
}

Vec VComponent::gradient(const Vec& w) const {
    if (kind == "quadratic") return (weights + weights.transpose()) * w;
    if (kind == "norm_power") {
        double n = w.norm();
        if (n == 0.0) return Vec::Zero(w.size());
        return power * std::pow(n, power - 2.0) * w;
    }
    if (kind == "coordinate_square") {
        Vec g = Vec::Zero(w.size());
        g(index) = 2.0 * w(index);
        return g;
    }
    throw UnknownRegistryId("Lyapunov component '" + kind + "'");
}

void VComponent::validate(int dim) const {
    if (kind == "quadratic") {
        if (weights.rows() != dim || weights.cols() != dim)
            throw SchemaError("quadratic component needs a " + std::to_string(dim) + "x" + std::to_string(dim) +
                              " weight matrix");
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (weights + weights.transpose()));
        if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, weights.norm()))
            throw SchemaError("quadratic component weights must be positive semidefinite");
    } else if (kind == "norm_power") {
        if (!(power >= 1.0)) throw SchemaError("norm_power needs power >= 1");
    } else if (kind == "coordinate_square") {
        if (index < 0 || index >= dim) throw SchemaError("coordinate_square index out of range");
    } else {
        throw UnknownRegistryId("Lyapunov component '" + kind + "'");
    }
}

double LyapunovSpec::eval(const Vec& w) const { return components[active(w)].eval(w); }

int LyapunovSpec::active(const Vec& w) const {
    const int m = static_cast<int>(components.size());
    if (m == 0) throw SchemaError("Lyapunov functional has no components");
    std::vector<double> v(m);
    for (int i = 0; i < m; ++i) v[i] = components[i].eval(w);
    double target = v[0];
    for (double x : v) target = (kind == Combination::Max) ? std::max(target, x) : std::min(target, x);
    const double band = tie_tolerance * std::max(1.0, std::abs(target));
    int pick = -1;
    for (int i = 0; i < m; ++i) {
        if (std::abs(v[i] - target) > band) continue;
        if (pick < 0 || tie_rule == TieRule::Highest) pick = i;
        if (tie_rule == TieRule::Lowest) break;
    }
    return pick;
}

// ---------------------------------------------------------------------------------------------
// Scalar registry

double ScalarFunction::param(const std::string& key, double dflt) const {
    auto it = params.find(key);
    return it == params.end() ? dflt : it->second;
}

double ScalarFunction::operator()(double x) const {
    if (kind == "zero") return 0.0;
    if (kind == "affine") return param("a", 0.0) + param("b", 1.0) * x;
    if (kind == "power") return param("c", 1.0) * std::pow(x, param("p", 1.0));
    if (kind == "constant") return param("c", 1.0);
    if (kind == "exp_decay") return param("c", 1.0) * std::exp(-param("rate", 1.0) * x);
    if (kind == "power_decay") return param("c", 1.0) / std::pow(1.0 + x, param("p", 1.0));
    throw UnknownRegistryId("scalar function '" + kind + "'");
}

void ScalarFunction::validate() const {
    static const char* known[] = {"zero", "affine", "power", "constant", "exp_decay", "power_decay"};
    for (const char* k : known)
        if (kind == k) return;
    throw UnknownRegistryId("scalar function '" + kind + "'");
}

bool ComparisonSpec::in_region(const Vec& w) const {
    for (const auto& h : region)
        if (!(h.a.dot(w) > h.b)) return false;
    return true;
}

const char* to_string(IntegralClass c) {
    switch (c) {
        case IntegralClass::Diverges: return "Diverges";
        case IntegralClass::Converges: return "Converges";
        case IntegralClass::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

IntegralClass integral_class_from_string(const std::string& s) {
    if (s == "Diverges") return IntegralClass::Diverges;
    if (s == "Converges") return IntegralClass::Converges;
    if (s == "Inconclusive") return IntegralClass::Inconclusive;
    throw SchemaError("unknown integral classification '" + s + "'");
}

const char* to_string(CertificateKind k) {
    switch (k) {
        case CertificateKind::GlobalSolvability: return "GlobalSolvability";
        case CertificateKind::GlobalSolvabilityNorm: return "GlobalSolvabilityNorm";
        case CertificateKind::LagrangeStability: return "LagrangeStability";
        case CertificateKind::BlowUp: return "BlowUp";
    }
    return "GlobalSolvability";
}

CertificateKind certificate_kind_from_string(const std::string& s) {
    if (s == "GlobalSolvability") return CertificateKind::GlobalSolvability;
    if (s == "GlobalSolvabilityNorm") return CertificateKind::GlobalSolvabilityNorm;
    if (s == "LagrangeStability") return CertificateKind::LagrangeStability;
    if (s == "BlowUp") return CertificateKind::BlowUp;
    throw SchemaError("unknown certificate kind '" + s + "'");
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::HypothesesSampledPass: return "HypothesesSampledPass";
        case Verdict::HypothesesViolated: return "HypothesesViolated";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

// ---------------------------------------------------------------------------------------------
// Integral probe

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                   double whole, double eps, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps || !std::isfinite(delta)) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

double simpson(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double eps = rel_tol * std::abs(whole) + 1e-300;
    return simpson_rec(f, a, b, fa, fm, fb, whole, eps, 40);
}

}  // namespace

ProbeResult probe_integral(const std::function<double(double)>& g, double lower, ProbeKind kind,
                           const ProbeOptions& opts) {
    ProbeResult out;
    out.lower = lower;
    const double L = lower > 0 ? lower : 1.0;
    double S = 0.0;
    if (kind == ProbeKind::OverTime && lower < L) S += simpson(g, lower, L, opts.quad_tol);
    for (int k = 0; k <= opts.windows; ++k) {
        const double a = L * std::ldexp(1.0, k);
        // u = a·2^s on s ∈ [0,1]
        auto h = [&](double s) {
            double u = a * std::exp2(s);
            return g(u) * u * std::log(2.0);
        };
        double c = simpson(h, 0.0, 1.0, opts.quad_tol);
        out.window_sums.push_back(c);
        S += c;
    }
    out.total = S;
    const double cK = out.window_sums.back();
    const double cH = out.window_sums[opts.windows / 2];
    if (!std::isfinite(S) || !std::isfinite(cK))
        out.cls = IntegralClass::Diverges;
    else if (S == 0.0 || cK <= opts.converge_ratio * S)
        out.cls = IntegralClass::Converges;
    else if (cK >= opts.diverge_ratio * cH)
        out.cls = IntegralClass::Diverges;
    else
        out.cls = IntegralClass::Inconclusive;
    return out;
}

// ---------------------------------------------------------------------------------------------
// Reduced views

namespace {

Mat range_of(const Mat& M) {
    if (M.cols() == 0) return Mat(M.rows(), 0);
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    int r = 0;
    while (r < s.size() && s(r) > 1e-10 * std::max(1.0, s(0))) ++r;
    return svd.matrixU().leftCols(r);
}

}  // namespace

ReducedView view_of(const ReducedFirst& reduced) {
    const auto& p = reduced.dae().proj;
    ReducedView v;
    v.approach = "first";
    v.x12_proj = p.P1 + p.P2Sigma;
    v.directions = range_of(p.tildeA * v.x12_proj);
    v.tildeA = p.tildeA;
    auto warm = std::make_shared<Vec>(Vec::Zero(reduced.dae().N()));
    v.drift = [&reduced, warm](double t, const Vec& w, Vec* x) { return reduced.drift(t, w, *warm, x); };
    return v;
}

ReducedView view_of(const ReducedCascade& reduced) {
    const auto& p = reduced.dae().proj;
    ReducedView v;
    v.approach = "cascade";
    v.x12_proj = p.P1;
    v.directions = range_of(p.tildeA * p.P1);
    v.tildeA = p.tildeA;
    auto ws = std::make_shared<CascadeWorkspace>();
    v.drift = [&reduced, ws](double t, const Vec& w, Vec* x) { return reduced.drift(t, w, *ws, x); };
    return v;
}

// ---------------------------------------------------------------------------------------------
// Sampling

namespace {

double radius_floor(const ComparisonSpec& comp, const SamplerOptions& opts) {
    if (opts.r_lo > 0) return opts.r_lo;
    if (comp.R > 0) return comp.R;
    double d = 0.0;
    for (const auto& h : comp.region)
        if (h.b > 0 && h.a.norm() > 0) d = std::max(d, h.b / h.a.norm());
    return d > 0 ? d : 1.0;
}

double log_uniform_time(std::mt19937_64& rng, double T) {
    std::uniform_real_distribution<double> u(0.0, std::log1p(T));
    return std::expm1(u(rng));
}

}  // namespace

std::vector<Sample> sample_admissible(const ReducedView& view, const ComparisonSpec& comp,
                                      const SamplerOptions& opts, int* failures) {
    const int k = static_cast<int>(view.directions.cols());
    if (k == 0) throw SamplingFailure("the reduced variable space is trivial");
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double r_lo = radius_floor(comp, opts);
    const double log_span = std::log(opts.radius_span);
    std::vector<Sample> out;
    int fails = 0, region_misses = 0;
    for (int i = 0; i < opts.samples; ++i) {
        bool landed = false;
        for (int a = 0; a < opts.attempts_per_sample && !landed; ++a) {
            double t = log_uniform_time(rng, opts.t_probe);
            Vec z(k);
            for (int j = 0; j < k; ++j) z(j) = gauss(rng);
            double r = r_lo * std::exp(log_span * unif(rng));
            Vec w = view.directions * z;
            if (w.norm() == 0.0) continue;
            w *= r / w.norm();
            if (!comp.region.empty() && !comp.in_region(w)) {
                ++region_misses;
                continue;
            }
            try {
                Vec x;
                view.drift(t, w, &x);
                out.push_back({t, w, x});
                landed = true;
            } catch (const ConstraintSolveFailure&) {
                ++fails;
            }
        }
        if (!landed) break;
    }
    if (failures) *failures = fails;
    if (static_cast<int>(out.size()) < opts.samples) {
        std::ostringstream os;
        os << "landed " << out.size() << " of " << opts.samples << " samples on the consistency manifold ("
           << fails << " constraint solve failures, " << region_misses << " draws outside the region)";
        throw SamplingFailure(os.str());
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Checkers

namespace {

void pointwise(const ReducedView& view, const LyapunovSpec& lyap, const ComparisonSpec& comp, CheckMode mode,
               Direction dir, const SamplerOptions& opts, CertificateReport& rep, double& min_V) {
    for (const auto& c : lyap.components) c.validate(static_cast<int>(view.directions.rows()));
    comp.U.validate();
    comp.psi.validate();
    auto samples = sample_admissible(view, comp, opts, &rep.landing_failures);
    min_V = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        Vec d = view.drift(s.t, s.w, nullptr);
        double V = lyap.eval(s.w);
        min_V = std::min(min_V, V);
        double lhs = (mode == CheckMode::Gradient) ? d.dot(lyap.gradient(s.w)) : d.norm();
        double rhs = comp.U(V) * comp.psi(s.t);
        double band = opts.slack * std::max({1.0, std::abs(lhs), std::abs(rhs)});
        bool bad = (dir == Direction::LessEqual) ? lhs > rhs + band : lhs < rhs - band;
        if (bad || !std::isfinite(lhs) || !std::isfinite(rhs)) rep.violations.push_back({s.t, s.w, lhs, rhs});
        ++rep.samples_checked;
    }
}

ProbeResult probe_U(const ComparisonSpec& comp, double min_V) {
    double lower = std::max(1.0, std::isfinite(min_V) ? min_V : 1.0);
    ProbeResult p = probe_integral([&](double u) { return 1.0 / comp.U(u); }, lower, ProbeKind::OverValue);
    if (comp.declared_U) {
        p.cls = *comp.declared_U;
        p.declared = true;
    }
    return p;
}

ProbeResult probe_psi(const ComparisonSpec& comp) {
    ProbeResult p = probe_integral([&](double t) { return comp.psi(t); }, 0.0, ProbeKind::OverTime);
    if (comp.declared_psi) {
        p.cls = *comp.declared_psi;
        p.declared = true;
    }
    return p;
}

}  // namespace

CertificateReport check_global_solvability(const ReducedView& view, const LyapunovSpec& lyap,
                                           const ComparisonSpec& comp, CheckMode mode,
                                           const SamplerOptions& opts) {
    if (lyap.kind != Combination::Max) throw SchemaError("global solvability needs a max-combination functional");
    CertificateReport rep;
    rep.kind = mode == CheckMode::Gradient ? CertificateKind::GlobalSolvability
                                           : CertificateKind::GlobalSolvabilityNorm;
    rep.approach = view.approach;
    double min_V;
    pointwise(view, lyap, comp, mode, Direction::LessEqual, opts, rep, min_V);
    rep.integral_U = probe_U(comp, min_V);
    if (!rep.violations.empty())
        rep.verdict = Verdict::HypothesesViolated;
    else if (rep.integral_U.cls == IntegralClass::Diverges)
        rep.verdict = Verdict::HypothesesSampledPass;
    else
        rep.verdict = Verdict::Inconclusive;
    return rep;
}

CertificateReport check_lagrange_stability(const ReducedView& view, const LyapunovSpec& lyap,
                                           const ComparisonSpec& comp, const SamplerOptions& opts) {
    CertificateReport rep = check_global_solvability(view, lyap, comp, CheckMode::Gradient, opts);
    rep.kind = CertificateKind::LagrangeStability;
    rep.integral_psi = probe_psi(comp);

    // empirical K(b) = sup ‖x₂₀‖ over samples with ‖x₁₂‖ ≤ b
    Mat basis = range_of(view.x12_proj);
    const int k = static_cast<int>(basis.cols());
    std::mt19937_64 rng(opts.seed + 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (double b : opts.b_ladder) {
        BoundEntry e{b, 0.0, 0};
        for (int i = 0; i < opts.ladder_samples && k > 0; ++i) {
            double t = log_uniform_time(rng, opts.t_probe);
            Vec z(k);
            for (int j = 0; j < k; ++j) z(j) = gauss(rng);
            Vec x12 = basis * z;
            if (x12.norm() == 0.0) continue;
            x12 *= b * unif(rng) / x12.norm();
            Vec w = view.tildeA * x12;
            try {
                Vec x;
                view.drift(t, w, &x);
                e.K = std::max(e.K, (x - x12).norm());
                ++e.samples;
            } catch (const ConstraintSolveFailure&) {
            }
        }
        rep.bound_ladder.push_back(e);
    }

    if (rep.verdict == Verdict::HypothesesSampledPass && rep.integral_psi->cls != IntegralClass::Converges)
        rep.verdict = Verdict::Inconclusive;
    return rep;
}

CertificateReport check_blowup_certificate(const ReducedView& view, const LyapunovSpec& lyap,
                                           const ComparisonSpec& comp, const SamplerOptions& opts) {
    if (lyap.kind != Combination::Min) throw SchemaError("blow-up certificate needs a min-combination functional");
    CertificateReport rep;
    rep.kind = CertificateKind::BlowUp;
    rep.approach = view.approach;
    double min_V;
    pointwise(view, lyap, comp, CheckMode::Gradient, Direction::GreaterEqual, opts, rep, min_V);
    rep.integral_U = probe_U(comp, min_V);
    rep.integral_psi = probe_psi(comp);
    if (!rep.violations.empty())
        rep.verdict = Verdict::HypothesesViolated;
    else if (rep.integral_U.cls == IntegralClass::Converges && rep.integral_psi->cls == IntegralClass::Diverges)
        rep.verdict = Verdict::HypothesesSampledPass;
    else
        rep.verdict = Verdict::Inconclusive;
    return rep;
}

// ---------------------------------------------------------------------------------------------
// Trajectory monitor

namespace {

// ∫ over [t[k], t[k+1]] of the cubic through up to four neighbouring samples inside [lo, hi]
double interval_integral(const std::vector<double>& t, const std::vector<double>& g, int lo, int hi, int k) {
    const int n = std::min(4, hi - lo + 1);
    int first = std::clamp(k - 1, lo, hi - n + 1);
    static const double node[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    static const double weight[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double a = t[k], h = t[k + 1] - t[k];
    double sum = 0.0;
    for (int q = 0; q < 3; ++q) {
        double x = a + 0.5 * h * (1.0 + node[q]);
        double p = 0.0;
        for (int m = first; m < first + n; ++m) {
            double l = 1.0;
            for (int r = first; r < first + n; ++r)
                if (r != m) l *= (x - t[r]) / (t[m] - t[r]);
            p += g[m] * l;
        }
        sum += weight[q] * p;
    }
    return 0.5 * h * sum;
}

}  // namespace

MonitorReport monitor_comparison(const Trajectory& traj, const LyapunovSpec& lyap, const ComparisonSpec& comp,
                                 Direction dir) {
    MonitorReport rep;
    const int n = static_cast<int>(traj.times.size());
    auto admissible = [&](const Vec& w) { return comp.region.empty() ? w.norm() >= comp.R : comp.in_region(w); };
    if (!comp.region.empty())
        for (const auto& w : traj.w_states)
            if (!comp.in_region(w)) rep.stayed_in_region = false;

    std::vector<double> V(n), G(n);
    for (int i = 0; i < n; ++i) {
        V[i] = lyap.eval(traj.w_states[i]);
        G[i] = comp.U(V[i]) * comp.psi(traj.times[i]);
    }
    double worst = std::numeric_limits<double>::infinity();
    int i = 0;
    while (i < n) {
        if (!admissible(traj.w_states[i])) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < n && admissible(traj.w_states[j + 1])) ++j;
        // run [i, j]
        const int len = j - i + 1;
        std::vector<double> C(len, 0.0);
        for (int k = 1; k < len; ++k) C[k] = C[k - 1] + interval_integral(traj.times, G, i, j, i + k - 1);
        const int stride = len > 4000 ? (len + 3999) / 4000 : 1;
        std::vector<int> idx;
        for (int k = 0; k < len; k += stride) idx.push_back(k);
        if (idx.back() != len - 1) idx.push_back(len - 1);
        for (std::size_t a = 0; a < idx.size(); ++a) {
            for (std::size_t b = a + 1; b < idx.size(); ++b) {
                double dV = V[i + idx[b]] - V[i + idx[a]];
                double I = C[idx[b]] - C[idx[a]];
                double margin = (dir == Direction::LessEqual) ? I - dV : dV - I;
                margin /= std::max({1.0, std::abs(dV), std::abs(I)});
                ++rep.pairs_checked;
                if (margin < worst) {
                    worst = margin;
                    rep.worst_t1 = traj.times[i + idx[a]];
                    rep.worst_t2 = traj.times[i + idx[b]];
                }
            }
        }
        i = j + 1;
    }
    rep.vacuous = rep.pairs_checked == 0;
    rep.worst_margin = rep.vacuous ? 0.0 : worst;
    return rep;
}

// ---------------------------------------------------------------------------------------------

namespace {

nlohmann::ordered_json probe_json(const ProbeResult& p) {
    nlohmann::ordered_json j;
    j["classification"] = to_string(p.cls);
    j["declared"] = p.declared;
    j["lower"] = p.lower;
    j["total"] = p.total;
    j["window_sums"] = p.window_sums;
    return j;
}

nlohmann::ordered_json vec_json(const Vec& v) {
    return nlohmann::ordered_json(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

std::string report_json(const CertificateReport& rep) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(rep.kind);
    j["approach"] = rep.approach;
    j["verdict"] = to_string(rep.verdict);
    j["samples_checked"] = rep.samples_checked;
    j["landing_failures"] = rep.landing_failures;
    j["integral_U"] = probe_json(rep.integral_U);
    if (rep.integral_psi) j["integral_psi"] = probe_json(*rep.integral_psi);
    auto vio = nlohmann::ordered_json::array();
    for (const auto& v : rep.violations)
        vio.push_back({{"t", v.t}, {"w", vec_json(v.w)}, {"lhs", v.lhs}, {"rhs", v.rhs}});
    j["violations"] = vio;
    if (!rep.bound_ladder.empty()) {
        auto lad = nlohmann::ordered_json::array();
        for (const auto& e : rep.bound_ladder) lad.push_back({{"b", e.b}, {"K", e.K}, {"samples", e.samples}});
        j["bound_ladder"] = lad;
    }
    return j.dump(2) + "\n";
}

}  // namespace daekit
