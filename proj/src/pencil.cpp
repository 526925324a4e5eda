#include "daekit/pencil.hpp"

#include "daekit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace daekit {

namespace {

double op_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

double cond_number(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return 1.0;
    double smin = s(s.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

// Orthonormal basis of the column space of `m` with known rank r (leading left singular vectors).
Mat range_basis(const Mat& m, int r) {
    if (r <= 0) return Mat(m.rows(), 0);
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU);
    return svd.matrixU().leftCols(r);
}

// Orthonormal basis of the kernel of `m` with known nullity k (trailing right singular vectors).
Mat kernel_basis(const Mat& m, int k) {
    if (k <= 0) return Mat(m.cols(), 0);
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(k);
}

// Deterministic orthonormal basis of range(P) for an orthogonal projector P of rank k:
// pivoted Gram-Schmidt over the columns P e_1, ..., P e_N, then sign-fixed.
Mat canonical_basis(const Mat& P, int k) {
    const int n = static_cast<int>(P.rows());
    Mat out(n, k);
    Mat cols = P;
    for (int c = 0; c < k; ++c) {
        int best = 0;
        double best_norm = -1.0;
        for (int j = 0; j < n; ++j) {
            double nj = cols.col(j).norm();
            if (nj > best_norm * (1.0 + 1e-9)) {
                best_norm = nj;
                best = j;
            }
        }
        Vec v = cols.col(best) / best_norm;
        for (int j = 0; j < c; ++j) v -= out.col(j).dot(v) * out.col(j);
        v.normalize();
        out.col(c) = v;
        for (int j = 0; j < n; ++j) cols.col(j) -= v.dot(cols.col(j)) * v;
    }
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < n; ++i) {
            if (std::abs(out(i, c)) > 1e-8) {
                if (out(i, c) < 0) out.col(c) *= -1.0;
                break;
            }
        }
    }
    return out;
}

bool lex_greater(const Vec& a, const Vec& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (std::abs(a(i) - b(i)) > 1e-12) return a(i) > b(i);
    }
    return false;
}

}  // namespace

Pencil::Pencil(Mat a, Mat b) : A(std::move(a)), B(std::move(b)) {
    if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
        throw SchemaError("pencil matrices must be square and of equal size");
}

double find_regular_point(Pencil& pencil, const RegularPointOptions& opts) {
    if (pencil.lambda_star) return *pencil.lambda_star;
    const int n = pencil.size();
    if (n == 0) throw SingularPencil("empty pencil");
    std::vector<double> candidates;
    for (int k = 1; k <= opts.integer_candidates; ++k) {
        candidates.push_back(k);
        candidates.push_back(-k);
    }
    double na = op_norm(pencil.A), nb = op_norm(pencil.B);
    double scale = (na > 0 && nb > 0) ? nb / na : 1.0;
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 0; k < opts.random_candidates; ++k) candidates.push_back(scale * gauss(rng));

    for (double lam : candidates) {
        Mat P = lam * pencil.A + pencil.B;
        if (cond_number(P) <= opts.cond_cap) {
            pencil.lambda_star = lam;
            return lam;
        }
    }
    throw SingularPencil("no candidate λ makes λA+B invertible (det(λA+B) vanishes identically)");
}

RankDecision numerical_rank(const Eigen::VectorXd& s, int n, double guard, const char* what) {
    RankDecision d;
    if (s.size() == 0 || s(0) == 0.0) return d;
    d.floor = n * kEps * s(0);
    const double zero_below = d.floor * guard;
    const double nonzero_above = d.floor * guard * guard;
    for (int i = 0; i < s.size(); ++i) {
        if (s(i) >= nonzero_above) {
            ++d.rank;
        } else if (s(i) > zero_below) {
            std::ostringstream os;
            os << what << ": singular value " << s(i) << " (relative " << s(i) / s(0)
               << ") lies in the guard band";
            throw RankAmbiguity(os.str());
        }
    }
    return d;
}

int Staircase::index() const { return static_cast<int>(kernel_dims.size()) - 2; }

int Staircase::chains_at_least(int j) const {
    if (j < 1 || j >= static_cast<int>(kernel_dims.size())) return 0;
    return kernel_dims[j] - kernel_dims[j - 1];
}

Staircase kernel_staircase(const Mat& A, const Mat& B, double lambda_star, const Tolerances& tol) {
    const int n = static_cast<int>(A.rows());
    Staircase st;
    st.kernel_dims.push_back(0);

    double na = op_norm(A);
    Mat P = lambda_star * A + B;
    Mat Ps = P / op_norm(P);
    Mat Z(n, 0);
    if (na == 0.0) {
        Z = Mat::Identity(n, n);
        st.kernel_dims.push_back(n);
    } else {
        Mat As = A / na;
        Eigen::JacobiSVD<Mat> svd(As, Eigen::ComputeFullV);
        int r = numerical_rank(svd.singularValues(), n, tol.rank_guard, "ker A").rank;
        Z = svd.matrixV().rightCols(n - r);
        st.kernel_dims.push_back(n - r);
    }

    // ker G^{j+1} = { x : A x ∈ (λ*A+B) ker G^j }
    while (st.kernel_dims.back() != st.kernel_dims[st.kernel_dims.size() - 2]) {
        const int k = static_cast<int>(Z.cols());
        Mat M(n, n + k);
        M.leftCols(n) = (na == 0.0) ? Mat(Mat::Zero(n, n)) : Mat(A / na);
        M.rightCols(k) = -Ps * Z;
        Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
        int r = numerical_rank(svd.singularValues(), n + k, tol.rank_guard, "ker G^j").rank;
        int nullity = n + k - r;
        if (nullity > k) Z = range_basis(svd.matrixV().rightCols(nullity).topRows(n), nullity);
        st.kernel_dims.push_back(nullity);
    }
    st.root_basis = Z;
    return st;
}

int compute_index(Pencil& pencil, const Tolerances& tol) {
    double lam = find_regular_point(pencil, {.cond_cap = tol.cond_cap});
    return kernel_staircase(pencil.A, pencil.B, lam, tol).index();
}

int CanonicalSystem::root_dim() const {
    int d = 0;
    for (const auto& c : chains) d += c.multiplicity();
    return d;
}

std::vector<int> CanonicalSystem::multiplicities() const {
    std::vector<int> m;
    for (const auto& c : chains) m.push_back(c.multiplicity());
    return m;
}

namespace {
Mat stack_chains(const std::vector<Chain>& chains) {
    int d = 0;
    int n = 0;
    for (const auto& c : chains) {
        d += c.multiplicity();
        if (!c.vectors.empty()) n = static_cast<int>(c.vectors[0].size());
    }
    Mat out(n, d);
    int col = 0;
    for (const auto& c : chains)
        for (const auto& v : c.vectors) out.col(col++) = v;
    return out;
}
}  // namespace

Mat CanonicalSystem::stacked() const { return stack_chains(chains); }
Mat DualSystem::stacked() const { return stack_chains(chains); }

CanonicalSystem build_chains(Pencil& pencil, const Tolerances& tol) {
    const Mat& A = pencil.A;
    const Mat& B = pencil.B;
    double lam = find_regular_point(pencil, {.cond_cap = tol.cond_cap});
    Staircase st = kernel_staircase(A, B, lam, tol);

    CanonicalSystem cs;
    cs.nu = st.index();
    const Mat& Z = st.root_basis;
    const int d = static_cast<int>(Z.cols());
    if (d == 0 || cs.nu == 0) return cs;

    // Matrix of the nilpotent map φʲ ↦ φ^{j-1} on the root subspace: B Z X = -A Z.
    Mat BZ = B * Z;
    Mat X = BZ.colPivHouseholderQr().solve(-A * Z);

    auto rank_of_power = [&](int k) {  // rank X^k = d - dim ker G^k
        return d - st.kernel_dims[std::min<int>(k, static_cast<int>(st.kernel_dims.size()) - 1)];
    };
    std::vector<Mat> powers{Mat::Identity(d, d)};
    for (int k = 1; k <= cs.nu; ++k) powers.push_back(powers.back() * X);
    // Orthonormal basis (in root coordinates) of range X^k.
    auto range_of_power = [&](int k) { return range_basis(powers[k], rank_of_power(k)); };

    const double na = op_norm(A), nb = op_norm(B);
    Mat prev_proj = Mat::Zero(d, d);  // projector onto E_{L+1}
    std::vector<Chain> chains;
    for (int L = cs.nu; L >= 1; --L) {
        // E_L = range X^{L-1} ∩ ker X: eigenvectors that extend to chains of length ≥ L.
        Mat Y = range_of_power(L - 1);
        Mat E = Y * kernel_basis(X * Y, st.chains_at_least(L));
        Mat proj = E * E.transpose();
        int fresh = st.chains_at_least(L) - st.chains_at_least(L + 1);
        if (fresh > 0) {
            Mat newdirs = canonical_basis(Z * (proj - prev_proj) * Z.transpose(), fresh);
            for (int c = 0; c < fresh; ++c) {
                Chain ch;
                ch.vectors.push_back(newdirs.col(c));
                for (int j = 2; j <= L; ++j) {
                    // minimal-norm solution of Aφ = -Bφ^{j-1} within range X^{L-j}
                    Mat Yj = Z * range_of_power(L - j);
                    Mat M = A * Yj;
                    Vec rhs = -B * ch.vectors.back();
                    int rk = rank_of_power(L - j) - st.chains_at_least(L - j + 1);
                    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
                    Vec coef = Vec::Zero(M.cols());
                    for (int s = 0; s < rk; ++s)
                        coef += svd.matrixV().col(s) *
                                (svd.matrixU().col(s).dot(rhs) / svd.singularValues()(s));
                    Vec phi = Yj * coef;
                    double res = (A * phi - rhs).norm();
                    double scale = na * phi.norm() + nb * ch.vectors.back().norm();
                    if (res > tol.chain * std::max(scale, 1e-300)) {
                        std::ostringstream os;
                        os << "-Bφ^" << j - 1 << " not in range A (residual " << res / scale << ")";
                        throw ChainExtensionFailure(os.str());
                    }
                    ch.vectors.push_back(phi);
                }
                chains.push_back(std::move(ch));
            }
        }
        prev_proj = proj;
    }
    std::stable_sort(chains.begin(), chains.end(), [](const Chain& a, const Chain& b) {
        if (a.multiplicity() != b.multiplicity()) return a.multiplicity() > b.multiplicity();
        return lex_greater(a.vectors[0], b.vectors[0]);
    });
    cs.chains = std::move(chains);
    return cs;
}

DualSystem build_dual_chains(const Pencil& pencil, const CanonicalSystem& canonical,
                             const Tolerances& tol) {
    DualSystem ds;
    const int d = canonical.root_dim();
    if (d == 0) return ds;

    Pencil adj(pencil.A.transpose(), pencil.B.transpose());
    adj.lambda_star = pencil.lambda_star;
    CanonicalSystem raw = build_chains(adj, tol);
    auto m1 = canonical.multiplicities(), m2 = raw.multiplicities();
    if (m1 != m2)
        throw BiorthogonalizationFailure("adjoint pencil has a different chain structure");

    // raw dual chains: q̃^{m+1-l} = r^l; any basis of their span yields the same dual system
    Mat R = raw.stacked();
    Mat Phi = canonical.stacked();
    Mat gram = R.transpose() * pencil.B * Phi;
    double c = cond_number(gram);
    if (!(c <= tol.cond_cap)) {
        std::ostringstream os;
        os << "Gram matrix <Bφ, q̃> has condition " << c;
        throw BiorthogonalizationFailure(os.str());
    }
    Mat Psi = R * gram.transpose().lu().solve(Mat::Identity(d, d));

    int col = 0;
    for (const auto& ch : canonical.chains) {
        Chain q;
        for (int j = 0; j < ch.multiplicity(); ++j) q.vectors.push_back(Psi.col(col++));
        ds.chains.push_back(std::move(q));
    }

    ChainResiduals r = chain_residuals(pencil, canonical, ds);
    if (r.biorth > tol.biorth) {
        std::ostringstream os;
        os << "biorthogonality residual " << r.biorth;
        throw BiorthogonalizationFailure(os.str());
    }
    if (r.dual_chain > tol.chain) {
        std::ostringstream os;
        os << "dual chain residual " << r.dual_chain;
        throw ChainExtensionFailure(os.str());
    }
    return ds;
}

ChainResiduals chain_residuals(const Pencil& pencil, const CanonicalSystem& canonical,
                               const DualSystem& dual) {
    ChainResiduals r;
    const Mat& A = pencil.A;
    const Mat& B = pencil.B;
    const double na = op_norm(A), nb = op_norm(B);
    auto rel = [](double res, double scale) { return scale > 0 ? res / scale : res; };

    for (const auto& ch : canonical.chains) {
        for (int j = 0; j < ch.multiplicity(); ++j) {
            Vec res = A * ch.vectors[j];
            double scale = na * ch.vectors[j].norm();
            if (j > 0) {
                res += B * ch.vectors[j - 1];
                scale += nb * ch.vectors[j - 1].norm();
            }
            r.chain = std::max(r.chain, rel(res.norm(), scale));
        }
    }
    for (const auto& ch : dual.chains) {
        const int m = ch.multiplicity();
        for (int j = 0; j < m; ++j) {
            Vec res = A.transpose() * ch.vectors[j];
            double scale = na * ch.vectors[j].norm();
            if (j + 1 < m) {
                res += B.transpose() * ch.vectors[j + 1];
                scale += nb * ch.vectors[j + 1].norm();
            }
            r.dual_chain = std::max(r.dual_chain, rel(res.norm(), scale));
        }
    }
    if (canonical.root_dim() > 0) {
        Mat Phi = canonical.stacked();
        Eigen::JacobiSVD<Mat> svd(Phi);
        r.independence = svd.singularValues()(svd.singularValues().size() - 1);
        if (!dual.chains.empty()) {
            Mat G = dual.stacked().transpose() * B * Phi;
            r.biorth = (G - Mat::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
        }
    }
    return r;
}

}  // namespace daekit
