#include "daekit/cli.hpp"

#include "daekit/certificates.hpp"
#include "daekit/errors.hpp"
#include "daekit/integrator.hpp"
#include "daekit/problem_library.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace daekit {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Config {
    std::string input;
    std::string out_dir;
    std::string format = "csv";
    std::string approach;
    std::vector<double> x0;
    double tol = 0.0;
    double tmax = 0.0;
    std::uint64_t seed = 42;
};

ojson vec_json(const Vec& v) { return ojson(std::vector<double>(v.data(), v.data() + v.size())); }

Tolerances tolerances(const Config& c) {
    Tolerances t;
    if (c.tol > 0) t.chain = t.biorth = t.proj = c.tol;
    return t;
}

IntegrationOptions integration(const Config& c, const ProblemSpec& spec) {
    IntegrationOptions o = spec.integration;
    if (c.tol > 0) {
        o.rtol = c.tol;
        o.atol = c.tol * 1e-2;
    }
    if (c.tmax > 0) o.t_max = c.tmax;
    o.validate();
    return o;
}

std::string approach_for(const Config& c, const SemilinearDAE& dae) {
    if (!c.approach.empty()) return c.approach;
    return dae.f.structure != StructureTag::General && dae.nu() >= 2 ? "cascade" : "first";
}

// Writes `text` to out_dir/name when --out is given, else to the stream.
void emit(const Config& c, const std::string& name, const std::string& text, std::ostream& out) {
    if (c.out_dir.empty()) {
        out << text;
        return;
    }
    fs::create_directories(c.out_dir);
    std::ofstream f(fs::path(c.out_dir) / name, std::ios::binary);
    if (!f) throw SchemaError("cannot write " + (fs::path(c.out_dir) / name).string());
    f << text;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

Vec initial_guess(const Config& c, const ProblemSpec& spec) {
    const int N = static_cast<int>(spec.A.rows());
    Vec x = spec.initial ? spec.initial->x0 : Vec::Zero(N);
    if (static_cast<int>(c.x0.size()) > N) throw SchemaError("--x0 has more than " + std::to_string(N) + " entries");
    for (std::size_t i = 0; i < c.x0.size(); ++i) x(static_cast<int>(i)) = c.x0[i];
    return x;
}

Trajectory simulate(const Problem& p, const std::string& approach, const Vec& guess, const IntegrationOptions& o) {
    const double t0 = o.t0;
    if (approach == "cascade") {
        ReducedCascade rc(p.dae);
        CascadeWorkspace ws;
        Vec x0 = rc.consistent_initialize(t0, guess, ws);
        return integrate_cascade(rc, t0, p.dae->proj.P1 * x0, o);
    }
    ReducedFirst rf(p.dae);
    Vec x0 = rf.consistent_initialize(t0, guess);
    return integrate_first(rf, t0, x0, o);
}

std::string trajectory_json(const Trajectory& tr) {
    ojson j;
    j["t"] = tr.times;
    ojson xs = ojson::array(), wn = ojson::array();
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        xs.push_back(vec_json(tr.states[i]));
        wn.push_back(tr.w_states[i].norm());
    }
    j["x"] = xs;
    j["w_norm"] = wn;
    j["residual"] = tr.residuals;
    j["termination"] = ojson::parse(termination_json(tr));
    return dump(j);
}

std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------------------------

int cmd_analyze(const Config& c, std::ostream& out) {
    Problem p = load_problem(c.input, tolerances(c));
    const auto& d = *p.dae;
    ojson j;
    j["name"] = p.spec.name;
    j["N"] = d.N();
    j["index"] = d.nu();
    j["chains"] = d.canonical.n();
    j["multiplicities"] = d.canonical.multiplicities();
    j["lambda_star"] = d.pencil.lambda_star.value_or(0.0);
    Staircase st = kernel_staircase(d.pencil.A, d.pencil.B, d.pencil.lambda_star.value_or(0.0), d.tol);
    j["kernel_dims"] = st.kernel_dims;
    ChainResiduals cr = chain_residuals(d.pencil, d.canonical, d.dual);
    j["chain_residuals"] = {{"chain", cr.chain},
                            {"dual_chain", cr.dual_chain},
                            {"biorthogonality", cr.biorth},
                            {"independence", cr.independence}};
    ojson pr;
    double worst = 0.0;
    for (const auto& [name, v] : projector_residuals(d.proj, d.pencil, d.canonical, d.dual)) {
        pr[name] = v;
        worst = std::max(worst, v);
    }
    j["projector_residuals"] = pr;
    j["max_projector_residual"] = worst;
    if (p.spec.truth.index) {
        ojson g;
        g["index"] = *p.spec.truth.index;
        g["index_matches"] = *p.spec.truth.index == d.nu();
        if (p.spec.truth.multiplicities) {
            auto want = *p.spec.truth.multiplicities;
            g["multiplicities"] = want;
            g["multiplicities_match"] = want == d.canonical.multiplicities();
        }
        j["ground_truth"] = g;
    }
    emit(c, "analysis.json", dump(j), out);
    return 0;
}

int cmd_reduce(const Config& c, std::ostream& out) {
    Problem p = load_problem(c.input, tolerances(c));
    const auto& d = *p.dae;
    const std::string approach = approach_for(c, d);
    ojson j;
    j["name"] = p.spec.name;
    j["approach"] = approach;
    j["index"] = d.nu();
    j["structure_tag"] = to_string(d.f.structure);
    if (approach == "cascade") {
        ReducedCascade rc(p.dae);
        j["level_count"] = rc.equation_count();
        j["active_level_count"] = rc.levels().size() + 2;
        ojson levels = ojson::array();
        for (const auto& L : rc.levels()) levels.push_back({{"tag", L.tag}, {"unknowns", L.slots.size()}});
        levels.push_back({{"tag", rc.bottom_level().tag}, {"unknowns", rc.bottom_level().slots.size()}});
        levels.push_back({{"tag", "w1-equation"}, {"unknowns", std::lround(d.proj.P1.trace())}});
        j["levels"] = levels;
        StructureReport sr = check_structure(d);
        j["structure_check"] = {{"pass", sr.pass}, {"max_dependence", sr.max_dependence}};
    } else {
        j["level_count"] = 2;
        j["active_level_count"] = 2;
        j["levels"] = ojson::array({{{"tag", "w-equation"}}, {{"tag", "F2star"}}});
    }
    Mat kept = approach == "cascade" ? d.proj.P1 : Mat(d.proj.P1 + d.proj.P2Sigma);
    j["reduced_dimension"] = std::lround(kept.trace());
    emit(c, "reduction.json", dump(j), out);
    return 0;
}

int cmd_simulate(const Config& c, std::ostream& out) {
    Problem p = load_problem(c.input, tolerances(c));
    IntegrationOptions o = integration(c, p.spec);
    Trajectory tr = simulate(p, approach_for(c, *p.dae), initial_guess(c, p.spec), o);
    if (c.out_dir.empty()) {
        if (c.format == "json") {
            out << trajectory_json(tr);
        } else {
            write_trajectory_csv(tr, out);
            out << termination_json(tr);
        }
        return 0;
    }
    if (c.format == "json") {
        emit(c, "trajectory.json", trajectory_json(tr), out);
    } else {
        std::ostringstream csv;
        write_trajectory_csv(tr, csv);
        emit(c, "trajectory.csv", csv.str(), out);
    }
    emit(c, "termination.json", termination_json(tr), out);
    return 0;
}

int cmd_certify(const Config& c, std::ostream& out) {
    Problem p = load_problem(c.input, tolerances(c));
    if (p.spec.certificates.empty()) throw SchemaError("/certificates: problem declares no certificate");
    SamplerOptions so;
    so.seed = c.seed;
    ojson reports = ojson::array();
    bool violated = false;
    for (const auto& cert : p.spec.certificates) {
        const std::string approach = c.approach.empty() ? cert.approach : c.approach;
        std::unique_ptr<ReducedFirst> rf;
        std::unique_ptr<ReducedCascade> rc;
        ReducedView view;
        if (approach == "cascade") {
            rc = std::make_unique<ReducedCascade>(p.dae);
            view = view_of(*rc);
        } else {
            rf = std::make_unique<ReducedFirst>(p.dae);
            view = view_of(*rf);
        }
        CertificateReport rep;
        switch (cert.kind) {
            case CertificateKind::GlobalSolvability:
                rep = check_global_solvability(view, cert.V, cert.comparison, CheckMode::Gradient, so);
                break;
            case CertificateKind::GlobalSolvabilityNorm:
                rep = check_global_solvability(view, cert.V, cert.comparison, CheckMode::NormLipschitz, so);
                break;
            case CertificateKind::LagrangeStability:
                rep = check_lagrange_stability(view, cert.V, cert.comparison, so);
                break;
            case CertificateKind::BlowUp:
                rep = check_blowup_certificate(view, cert.V, cert.comparison, so);
                break;
        }
        violated = violated || rep.verdict == Verdict::HypothesesViolated;
        reports.push_back(ojson::parse(report_json(rep)));
    }
    ojson j;
    j["name"] = p.spec.name;
    j["seed"] = c.seed;
    j["reports"] = reports;
    emit(c, "certificates.json", dump(j), out);
    return violated ? 1 : 0;
}

int thread_count() {
    if (const char* env = std::getenv("DAEKIT_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_sweep(const Config& c, std::ostream& out) {
    Problem p = load_problem(c.input, tolerances(c));
    IntegrationOptions o = integration(c, p.spec);
    const int N = p.dae->N();
    Vec base = p.spec.initial ? p.spec.initial->x0 : Vec::Zero(N);
    std::vector<Vec> points = p.spec.sweep.expand(base);
    if (points.empty()) throw SchemaError("/sweep: problem declares no sweep points");
    const std::string approach = approach_for(c, *p.dae);

    struct Result {
        Trajectory tr;
        std::string error;
    };
    std::vector<Result> results(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < points.size(); k = next++) {
            try {
                results[k].tr = simulate(p, approach, points[k], o);
            } catch (const Error& e) {
                results[k].error = e.what();
            }
        }
    };
    const int nthreads = std::min<int>(thread_count(), static_cast<int>(points.size()));
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::ostringstream csv;
    csv << "point";
    for (int i = 1; i <= N; ++i) csv << ",x0_" << i;
    csv << ",termination,t_end,t_escape_estimate,final_norm,max_residual\n";
    ojson rows = ojson::array();
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& r = results[k];
        csv << k;
        for (int i = 0; i < N; ++i) csv << ',' << csv_number(points[k](i));
        ojson row;
        row["point"] = k;
        row["x0"] = vec_json(points[k]);
        if (!r.error.empty()) {
            csv << ",Error,,,,\n";
            row["termination"] = "Error";
            row["message"] = r.error;
        } else {
            const auto& t = r.tr.termination;
            double max_res = 0.0;
            for (double v : r.tr.residuals) max_res = std::max(max_res, v);
            csv << ',' << to_string(t.kind) << ',' << csv_number(t.t) << ','
                << (std::isnan(t.t_escape_estimate) ? std::string() : csv_number(t.t_escape_estimate)) << ','
                << csv_number(t.final_norm) << ',' << csv_number(max_res) << '\n';
            row["termination"] = to_string(t.kind);
            row["t_end"] = t.t;
            if (!std::isnan(t.t_escape_estimate)) row["t_escape_estimate"] = t.t_escape_estimate;
            row["final_norm"] = t.final_norm;
            row["max_residual"] = max_res;
            if (!c.out_dir.empty()) {
                std::ostringstream tcsv;
                write_trajectory_csv(r.tr, tcsv);
                emit(c, "point_" + std::to_string(k) + ".csv", tcsv.str(), out);
            }
        }
        rows.push_back(row);
    }
    if (c.format == "json")
        emit(c, "sweep_summary.json", dump(rows), out);
    else
        emit(c, "sweep_summary.csv", csv.str(), out);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Analyze, reduce, simulate and certify semilinear differential-algebraic equations", "daekit"};
    app.require_subcommand(1, 1);
    Config c;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("input", c.input, "problem JSON file or builtin:<name>")->required();
        sub->add_option("--tol", c.tol, "tolerance override");
        sub->add_option("--out", c.out_dir, "output directory (default: standard output)");
        sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--approach", c.approach, "reduction approach")->check(CLI::IsMember({"first", "cascade"}));
        sub->add_option("--seed", c.seed, "sampling seed");
    };
    auto* analyze = app.add_subcommand("analyze", "pencil analysis report");
    auto* reduce = app.add_subcommand("reduce", "reduction summary");
    auto* simulate_cmd = app.add_subcommand("simulate", "integrate from a consistent initial value");
    auto* certify = app.add_subcommand("certify", "check the declared certificates");
    auto* sweep = app.add_subcommand("sweep", "simulate every declared sweep point");
    for (auto* s : {analyze, reduce, simulate_cmd, certify, sweep}) add_common(s);
    for (auto* s : {simulate_cmd, sweep}) s->add_option("--tmax", c.tmax, "final time");
    simulate_cmd->add_option("--x0", c.x0, "leading components of the initial guess");

    std::vector<const char*> argv = {"daekit"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(c, out);
        if (reduce->parsed()) return cmd_reduce(c, out);
        if (simulate_cmd->parsed()) return cmd_simulate(c, out);
        if (certify->parsed()) return cmd_certify(c, out);
        if (sweep->parsed()) return cmd_sweep(c, out);
    } catch (const Error& e) {
        err << "error [" << e.kind() << "] " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace daekit
