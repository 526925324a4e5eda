#pragma once

#include "daekit/certificates.hpp"
#include "daekit/integrator.hpp"
#include "daekit/reduction.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace daekit {

using Params = std::map<std::string, double>;

// f is picked by registry id; N is the system size (some fields are size-generic).
NonlinearField make_field(const std::string& registry_id, const Params& params, int N);
std::vector<std::string> field_registry_ids();

struct GroundTruth {
    std::optional<int> index;
    std::optional<std::vector<int>> multiplicities;
    std::optional<double> escape_time;  // for the declared initial value
    std::optional<double> sup_bound;    // bound on sup ‖x(t)‖ over the declared sweep
};

struct InitialSpec {
    double t0 = 0.0;
    Vec x0;
};

struct CertificateSpec {
    CertificateKind kind = CertificateKind::GlobalSolvability;
    std::string approach = "first";
    LyapunovSpec V;
    ComparisonSpec comparison;
};

struct SweepAxis {
    int component = 0;
    std::vector<double> values;
};

// Initial points are guesses; simulations hold their reduced part fixed and solve the rest.
struct SweepSpec {
    std::vector<Vec> points;
    std::vector<SweepAxis> axes;  // cartesian product over the initial value
    std::vector<Vec> expand(const Vec& base) const;
};

struct ProblemSpec {
    std::string name;
    Mat A, B;
    std::string field_id;
    Params params;
    StructureTag structure = StructureTag::General;
    GroundTruth truth;
    std::optional<InitialSpec> initial;
    IntegrationOptions integration;
    std::vector<CertificateSpec> certificates;
    SweepSpec sweep;
};

// Throws SchemaError with a JSON pointer to the offending value.
ProblemSpec parse_problem(const nlohmann::json& j);
nlohmann::ordered_json problem_to_json(const ProblemSpec& spec);
ProblemSpec load_problem_spec(const std::string& path_or_builtin);

struct Problem {
    ProblemSpec spec;
    std::shared_ptr<const SemilinearDAE> dae;
};

Problem instantiate(const ProblemSpec& spec, const Tolerances& tol = {});
// Accepts a file path or "builtin:<name>".
Problem load_problem(const std::string& path_or_builtin, const Tolerances& tol = {});

std::vector<std::string> builtin_names();
ProblemSpec builtin_spec(const std::string& name);
Problem builtin(const std::string& name, const Tolerances& tol = {});

// Closed-form x(t) through the consistent point x0, when the field has one.
std::function<Vec(double)> exact_solution(const ProblemSpec& spec, const Vec& x0);

struct RandomPencil {
    std::uint64_t seed = 0;
    std::vector<int> segre;  // nilpotent block sizes
    int index = 0;
    Pencil pencil;
    Mat P2, Q2;  // projectors onto the root subspace and its image, from the constructing transforms
};

// A = S(I ⊕ J)T, B = S(M ⊕ I)T with J nilpotent of the given Segre block sizes.
RandomPencil random_weierstrass(std::uint64_t seed, int N, const std::vector<int>& segre);
// Seeded corpus: N ∈ [1, 8], block sizes ≤ 4.
std::vector<RandomPencil> random_corpus(int count = 100, std::uint64_t base_seed = 1);

}  // namespace daekit
