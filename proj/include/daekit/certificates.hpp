#pragma once

#include "daekit/integrator.hpp"
#include "daekit/reduction.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace daekit {

// One Lyapunov component, selected by kind:
//   quadratic          wᵀMw            (weights = M)
//   norm_power         ‖w‖^power
//   coordinate_square  w[index]²
struct VComponent {
    std::string kind = "quadratic";
    Mat weights;
    double power = 2.0;
    int index = 0;
    double eval(const Vec& w) const;
    Vec gradient(const Vec& w) const;
    void validate(int dim) const;  // throws UnknownRegistryId / SchemaError
};

enum class Combination { Max, Min };
enum class TieRule { Lowest, Highest };

struct LyapunovSpec {
    std::vector<VComponent> components;
    Combination kind = Combination::Max;
    double tie_tolerance = 1e-12;
    TieRule tie_rule = TieRule::Lowest;
    double eval(const Vec& w) const;
    // Index of the active component: within tie_tolerance (relative) of the max/min, resolved by tie_rule.
    int active(const Vec& w) const;
    Vec gradient(const Vec& w) const { return components[active(w)].gradient(w); }
};

// Scalar function from a small registry.
//   U:  affine (a + b·u), power (c·u^p), zero
//   ψ:  constant (c), exp_decay (c·e^{−rate·t}), power_decay (c/(1+t)^p)
struct ScalarFunction {
    std::string kind = "zero";
    std::map<std::string, double> params;
    double operator()(double x) const;
    double param(const std::string& key, double dflt) const;
    void validate() const;
};

// Open halfspace {w : a·w > b}.
struct Halfspace {
    Vec a;
    double b = 0.0;
};

enum class IntegralClass { Diverges, Converges, Inconclusive };
const char* to_string(IntegralClass c);
IntegralClass integral_class_from_string(const std::string& s);

struct ComparisonSpec {
    ScalarFunction U;
    ScalarFunction psi;
    double R = 0.0;
    std::vector<Halfspace> region;  // empty: no region restriction
    std::optional<IntegralClass> declared_U, declared_psi;
    bool in_region(const Vec& w) const;
};

enum class CertificateKind { GlobalSolvability, GlobalSolvabilityNorm, LagrangeStability, BlowUp };
enum class Verdict { HypothesesSampledPass, HypothesesViolated, Inconclusive };
enum class CheckMode { Gradient, NormLipschitz };
const char* to_string(CertificateKind k);
const char* to_string(Verdict v);
CertificateKind certificate_kind_from_string(const std::string& s);

struct Violation {
    double t;
    Vec w;
    double lhs, rhs;
};

enum class ProbeKind { OverValue, OverTime };

struct ProbeResult {
    IntegralClass cls = IntegralClass::Inconclusive;
    double lower = 0.0;
    double total = 0.0;
    std::vector<double> window_sums;
    bool declared = false;  // classification declared in the problem file, not probed
};

struct ProbeOptions {
    int windows = 40;               // K
    double converge_ratio = 1e-5;   // last window ≤ ratio·total
    double diverge_ratio = 0.9;     // last window ≥ ratio·window K/2
    double quad_tol = 1e-10;
};

ProbeResult probe_integral(const std::function<double(double)>& g, double lower, ProbeKind kind,
                           const ProbeOptions& opts = {});

struct BoundEntry {
    double b;
    double K;
    int samples;
};

struct CertificateReport {
    CertificateKind kind = CertificateKind::GlobalSolvability;
    std::string approach = "first";
    int samples_checked = 0;
    int landing_failures = 0;
    std::vector<Violation> violations;
    ProbeResult integral_U;
    std::optional<ProbeResult> integral_psi;
    std::vector<BoundEntry> bound_ladder;
    Verdict verdict = Verdict::Inconclusive;
};

struct SamplerOptions {
    int samples = 500;
    std::uint64_t seed = 42;
    double t_probe = 1e3;
    double radius_span = 1e3;        // ‖w‖ ∈ [r_lo, span·r_lo]
    double r_lo = 0.0;               // 0: derived from R or the region
    int attempts_per_sample = 50;
    double slack = 1e-10;            // relative slack on the pointwise inequality
    std::vector<double> b_ladder = {1, 2, 4, 8, 16};
    int ladder_samples = 200;
};

// The reduced system seen by the checkers: the drift of w (first approach) or w₁ (cascade).
struct ReducedView {
    std::string approach;
    Mat directions;  // columns span the reduced-variable space
    Mat tildeA;
    Mat x12_proj;    // projector onto the slice held fixed (P₁+P₂Σ or P₁)
    std::function<Vec(double t, const Vec& w, Vec* x)> drift;
};
ReducedView view_of(const ReducedFirst& reduced);
ReducedView view_of(const ReducedCascade& reduced);

CertificateReport check_global_solvability(const ReducedView& view, const LyapunovSpec& lyap,
                                           const ComparisonSpec& comp, CheckMode mode = CheckMode::Gradient,
                                           const SamplerOptions& opts = {});
CertificateReport check_lagrange_stability(const ReducedView& view, const LyapunovSpec& lyap,
                                           const ComparisonSpec& comp, const SamplerOptions& opts = {});
CertificateReport check_blowup_certificate(const ReducedView& view, const LyapunovSpec& lyap,
                                           const ComparisonSpec& comp, const SamplerOptions& opts = {});

// Draws t and w on the admissible set and lands them on L₀; used by the checkers and by
// simulations started from sampled points.
struct Sample {
    double t;
    Vec w;
    Vec x;
};
std::vector<Sample> sample_admissible(const ReducedView& view, const ComparisonSpec& comp,
                                      const SamplerOptions& opts, int* failures = nullptr);

enum class Direction { LessEqual, GreaterEqual };

struct MonitorReport {
    int pairs_checked = 0;
    double worst_margin = 0.0;  // relative; negative means the inequality failed
    double worst_t1 = 0.0, worst_t2 = 0.0;
    bool stayed_in_region = true;
    bool vacuous = false;
};

MonitorReport monitor_comparison(const Trajectory& traj, const LyapunovSpec& lyap, const ComparisonSpec& comp,
                                 Direction dir);

std::string report_json(const CertificateReport& rep);

}  // namespace daekit
