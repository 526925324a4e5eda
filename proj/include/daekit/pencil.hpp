#pragma once

#include "daekit/common.hpp"

#include <optional>
#include <vector>

namespace daekit {

// The pencil λA + B.
struct Pencil {
    Mat A;
    Mat B;
    std::optional<double> lambda_star;

    Pencil() = default;
    Pencil(Mat a, Mat b);
    int size() const { return static_cast<int>(A.rows()); }
};

struct RegularPointOptions {
    int integer_candidates = 8;   // tries 1, -1, 2, -2, ... up to ±K
    int random_candidates = 32;
    std::uint64_t seed = 42;
    double cond_cap = 1e10;
};

// Returns λ* with λ*A+B invertible and caches it on the pencil. Throws SingularPencil.
double find_regular_point(Pencil& pencil, const RegularPointOptions& opts = {});

// Singular-value based rank decision used throughout the pencil analysis.
// σ ≤ floor·ρ counts as zero, σ ≥ floor·ρ² as nonzero, anything between throws RankAmbiguity,
// where floor = N·ε·σ_max.
struct RankDecision {
    int rank = 0;
    double floor = 0.0;
};
RankDecision numerical_rank(const Eigen::VectorXd& singular_values, int n, double guard,
                            const char* what);

// Dimensions of ker G^j for j = 0..ν+1 where G = (λ*A+B)^{-1}A, built from nested preimages
// so that the inverse is never formed. Also returns an orthonormal basis of the last space
// (the root subspace).
struct Staircase {
    std::vector<int> kernel_dims;  // kernel_dims[j] = dim ker G^j, kernel_dims[0] = 0
    Mat root_basis;                // orthonormal basis of ker G^ν
    int index() const;
    // number of chains with length ≥ j (j ≥ 1)
    int chains_at_least(int j) const;
};
Staircase kernel_staircase(const Mat& A, const Mat& B, double lambda_star, const Tolerances& tol = {});

int compute_index(Pencil& pencil, const Tolerances& tol = {});

struct Chain {
    std::vector<Vec> vectors;  // vectors[0] is the eigenvector φ¹, vectors[j-1] is φʲ
    int multiplicity() const { return static_cast<int>(vectors.size()); }
};

struct CanonicalSystem {
    std::vector<Chain> chains;
    int nu = 0;
    int n() const { return static_cast<int>(chains.size()); }
    int root_dim() const;
    std::vector<int> multiplicities() const;
    // All chain vectors stacked column-wise, chain by chain, in order φᵢ¹..φᵢ^{mᵢ}.
    Mat stacked() const;
};

struct DualSystem {
    std::vector<Chain> chains;  // chains[i].vectors[j-1] is qᵢʲ
    Mat stacked() const;
};

CanonicalSystem build_chains(Pencil& pencil, const Tolerances& tol = {});
DualSystem build_dual_chains(const Pencil& pencil, const CanonicalSystem& canonical,
                             const Tolerances& tol = {});

// Residual norms of the chain relations, relative to ‖A‖‖φʲ‖+‖B‖‖φ^{j-1}‖.
struct ChainResiduals {
    double chain = 0.0;
    double dual_chain = 0.0;
    double biorth = 0.0;
    double independence = 0.0;  // smallest singular value of the stacked chain vectors
};
ChainResiduals chain_residuals(const Pencil& pencil, const CanonicalSystem& canonical,
                               const DualSystem& dual);

}  // namespace daekit
