#pragma once

#include "daekit/pencil.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace daekit {

// Address of one chain vector: chain i (0-based), position j (1-based, as in φᵢʲ).
struct ChainSlot {
    int chain;
    int pos;
};
using SlotSet = std::vector<ChainSlot>;

// Basis pair for a set of chain slots. X-side vectors φ, Y-side vectors Bφ, dual vectors q.
// Coordinates: x ↦ qᵀBx on the X side, y ↦ qᵀy on the Y side.
struct SlotBasis {
    SlotSet slots;
    Mat phi;    // N×k
    Mat bphi;   // N×k
    Mat q;      // N×k
    int size() const { return static_cast<int>(slots.size()); }
    Mat P(const Mat& B) const { return phi * q.transpose() * B; }
    Mat Q() const { return bphi * q.transpose(); }
};

struct ProjectorSet {
    int N = 0;
    int nu = 0;
    Mat P1, P2, Q1, Q2;
    std::vector<Mat> P2s, Q2s;                       // s = 0..ν-1
    std::map<std::pair<int, int>, Mat> P2s_j, Q2s_j;  // (s, j), j = s+1..ν
    Mat P2Sigma, P20, Q2Sigma, Q2star;
    std::vector<Mat> Q2Sigma_s, P2wedge_s;            // s = 0..ν-2
    Mat P2Sigma_1, P2Sigma_2, Q2star_1, Q2star_2;
    Mat tildeA, tildeA_inv;
    Mat A_semiinv, B2_semiinv;
};

// Slot sets used by the refined projectors.
SlotSet slots_where(const CanonicalSystem& cs, bool (*pred)(int pos, int mult, int arg), int arg);
SlotSet slots_level(const CanonicalSystem& cs, int s);           // P2s / Q2s
SlotSet slots_level_mult(const CanonicalSystem& cs, int s, int j);  // P2s^(j)
SlotSet slots_top(const CanonicalSystem& cs);                    // Q2star
SlotSet slots_bottom(const CanonicalSystem& cs);                 // P20
SlotSet slots_sigma(const CanonicalSystem& cs);                  // P2Sigma (positions ≥ 2)
SlotSet slots_all(const CanonicalSystem& cs);
SlotBasis slot_basis(const Pencil& pencil, const CanonicalSystem& cs, const DualSystem& ds,
                     const SlotSet& slots);

ProjectorSet build_projectors(const CanonicalSystem& canonical, const DualSystem& dual,
                              const Pencil& pencil, const Tolerances& tol = {});

std::pair<Mat, Mat> build_tilde_A(const Pencil& pencil, const CanonicalSystem& canonical,
                                  const DualSystem& dual, const Tolerances& tol = {});

void build_semi_inverses(ProjectorSet& set, const Pencil& pencil, const Tolerances& tol = {});

// Named residual of every ProjectorSet identity (relative), in a fixed order.
std::vector<std::pair<std::string, double>> projector_residuals(const ProjectorSet& set,
                                                                const Pencil& pencil,
                                                                const CanonicalSystem& canonical,
                                                                const DualSystem& dual);

}  // namespace daekit
