#pragma once

#include "daekit/implicit_solver.hpp"
#include "daekit/projectors.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace daekit {

enum class StructureTag { General, StructuredAppr2, StructuredAppr2Variant };

const char* to_string(StructureTag tag);
StructureTag structure_from_string(const std::string& s);

struct NonlinearField {
    std::function<Vec(double t, const Vec& x)> eval;
    std::function<Mat(double t, const Vec& x)> jacobian;      // optional ∂ₓf
    std::function<Vec(double t, const Vec& x)> t_derivative;  // optional ∂ₜf
    StructureTag structure = StructureTag::General;
};

struct SemilinearDAE {
    Pencil pencil;
    CanonicalSystem canonical;
    DualSystem dual;
    ProjectorSet proj;
    NonlinearField f;
    Tolerances tol;
    int N() const { return pencil.size(); }
    int nu() const { return canonical.nu; }
};

// Runs the full pencil analysis and projector construction.
std::shared_ptr<const SemilinearDAE> make_dae(Pencil pencil, NonlinearField f,
                                              const Tolerances& tol = {});

struct Split {
    Vec x1, x2Sigma, x20;
};

// Inner solve settings shared by both reductions. The residual tolerance is relative:
// ‖F‖ ≤ rel_tol·(1 + scale of the terms entering F).
struct ConstraintSolveOptions {
    double rel_tol = 1e-13;
    int max_iter = 30;
};

// ẇ = Π̂(t,w) with w = Ã(x₁+x₂Σ) and the algebraic part F₂* = 0 solved for x₂₀.
class ReducedFirst {
public:
    explicit ReducedFirst(std::shared_ptr<const SemilinearDAE> dae, ConstraintSolveOptions opts = {});

    const SemilinearDAE& dae() const { return *dae_; }
    std::shared_ptr<const SemilinearDAE> dae_ptr() const { return dae_; }

    Split split(const Vec& x) const;
    // Ã⁻¹(Q₁+Q₂Σ)[f(t,x) − Bx]
    Vec Pi(double t, const Vec& x) const;
    // Q₂*[f(t,x) − Bx] with x = x₁+x₂Σ+x₂₀
    Vec F2star(double t, const Vec& x1, const Vec& x2Sigma, const Vec& x20) const;
    double residual_L0(double t, const Vec& x) const;

    // Solves F₂* = 0 for x₂₀ given x₁+x₂Σ. Throws ConstraintSolveFailure (level "F2star").
    Vec solve_x20(double t, const Vec& x12, const Vec& x20_guess) const;
    // Right-hand side of the w-equation. `x20` is the warm start on entry and the solution on
    // exit; `x` receives the reassembled state.
    Vec drift(double t, const Vec& w, Vec& x20, Vec* x = nullptr) const;
    Vec w_of(const Vec& x) const { return dae_->pencil.A * x; }

    // Holds (P₁+P₂Σ)x_guess fixed and solves for x₂₀.
    Vec consistent_initialize(double t0, const Vec& x_guess) const;

private:
    std::shared_ptr<const SemilinearDAE> dae_;
    ConstraintSolveOptions opts_;
    SlotBasis bottom_, top_;
    Mat drift_proj_;  // Q₁+Q₂Σ
};

struct StructureCheckOptions {
    int samples = 32;
    double perturbation = 1e-2;
    double tol = 1e-9;
    std::uint64_t seed = 42;
};

struct StructureReport {
    bool pass = true;
    double max_dependence = 0.0;
    std::string offending;  // projection with the largest dependence
    double sample_t = 0.0;
    Vec sample_x;
};

StructureReport check_structure(const SemilinearDAE& dae, const StructureCheckOptions& opts = {});

// One level of the cascade. Unknowns and residual rows are indexed by the same chain slots:
// unknown coordinates c = qᵀBx, residual coordinates qᵀ[f − Bx − A d].
struct CascadeLevel {
    enum class Kind { Top, Fused, Wedge, Bottom };
    Kind kind;
    int s = 0;
    std::string tag;
    SlotSet slots;
    SlotSet arg_slots;                // slots whose values enter f (besides the unknowns)
    std::vector<int> derivative_deps;  // earlier levels whose t-derivatives enter the residual
};

// Per-integration mutable state: warm starts and a small cache of solved levels.
struct CascadeWorkspace {
    std::map<int, Vec> guesses;  // level index → last solution
    Vec x20;
    double cached_t = std::numeric_limits<double>::quiet_NaN();
    Vec cached_values, cached_derivs;
};

class ReducedCascade {
public:
    // Throws StructureViolation unless the check passes or is waived.
    explicit ReducedCascade(std::shared_ptr<const SemilinearDAE> dae, bool waive_structure_check = false,
                            ConstraintSolveOptions opts = {});

    const SemilinearDAE& dae() const { return *dae_; }
    std::shared_ptr<const SemilinearDAE> dae_ptr() const { return dae_; }
    // Levels above the bottom, ordered as they are solved.
    const std::vector<CascadeLevel>& levels() const { return levels_; }
    const CascadeLevel& bottom_level() const { return bottom_; }
    // 2ν−1 for ν ≥ 1 (fused variant counts the fused level once); empty top levels included
    int equation_count() const;

    // Residual of level k at time t for unknown coordinates y, with earlier levels solved at t.
    Vec level_residual(int k, double t, const Vec& y, CascadeWorkspace& ws) const;
    // F₂₀(t, x₁, x₂₀) in bottom coordinates, with η₂Σ(t) solved.
    Vec F20(double t, const Vec& x1, const Vec& x20, CascadeWorkspace& ws) const;

    // η₂Σ(t): all non-bottom chain components as an X vector.
    Vec eta_sigma(double t, CascadeWorkspace& ws) const;
    // η₂₀(t, x₁). Throws ConstraintSolveFailure (level "F20").
    Vec solve_x20(double t, const Vec& x1, CascadeWorkspace& ws) const;
    // ẇ₁ = Q₁f(t,x) − Q₁BÃ⁻¹w₁; `x` receives the reassembled state.
    Vec drift(double t, const Vec& w1, CascadeWorkspace& ws, Vec* x = nullptr) const;
    Vec state(double t, const Vec& x1, CascadeWorkspace& ws) const;

    Vec consistent_initialize(double t0, const Vec& x_guess, CascadeWorkspace& ws) const;
    double residual_L0(double t, const Vec& x) const;

private:
    struct Eval;
    std::shared_ptr<const SemilinearDAE> dae_;
    ConstraintSolveOptions opts_;
    std::vector<CascadeLevel> levels_;
    CascadeLevel bottom_;
    std::vector<int> slot_offset_;  // global slot index = offset[chain] + pos − 1
    int root_dim_ = 0;
    Mat phi_, q_;  // all chain vectors / dual vectors, stacked by global slot index

    int slot_index(const ChainSlot& s) const { return slot_offset_[s.chain] + s.pos - 1; }
    Vec slots_to_x(const SlotSet& slots, const Vec& values) const;
    void ensure_sigma(double t, CascadeWorkspace& ws) const;
};

}  // namespace daekit
