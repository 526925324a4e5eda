#include "daekit/problem_library.hpp"

#include "daekit/errors.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace daekit {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------------------------
// Field registry

namespace {

double param(const Params& p, const std::string& key, double dflt) {
    auto it = p.find(key);
    return it == p.end() ? dflt : it->second;
}

void need_size(const std::string& id, int N, int want) {
    if (N != want)
        throw SchemaError("field '" + id + "' needs N=" + std::to_string(want) + ", got " + std::to_string(N));
}

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

using Factory = NonlinearField (*)(const std::string&, const Params&, int);

NonlinearField zero_field(const std::string&, const Params&, int N) {
    NonlinearField f;
    f.eval = [N](double, const Vec&) { return Vec::Zero(N); };
    f.jacobian = [N](double, const Vec&) { return Mat::Zero(N, N); };
    f.t_derivative = [N](double, const Vec&) { return Vec::Zero(N); };
    return f;
}

// f_i = a·x_i^p + c·e^{−r t}, componentwise
NonlinearField scalar_poly(const std::string&, const Params& p, int N) {
    const double a = param(p, "a", -1.0), pw = param(p, "p", 1.0), c = param(p, "c", 0.0), r = param(p, "r", 1.0);
    NonlinearField f;
    f.eval = [=](double t, const Vec& x) {
        Vec out(N);
        for (int i = 0; i < N; ++i) out(i) = a * std::pow(x(i), pw) + c * std::exp(-r * t);
        return out;
    };
    f.jacobian = [=](double, const Vec& x) {
        Mat J = Mat::Zero(N, N);
        for (int i = 0; i < N; ++i) J(i, i) = a * pw * std::pow(x(i), pw - 1.0);
        return J;
    };
    f.t_derivative = [=](double t, const Vec&) { return Vec::Constant(N, -r * c * std::exp(-r * t)); };
    return f;
}

NonlinearField ode_index0(const std::string& id, const Params& p, int N) {
    need_size(id, N, 2);
    const double k = param(p, "cubic", 0.1);
    NonlinearField f;
    f.eval = [=](double t, const Vec& x) { return vec({std::sin(t), -k * x(1) * x(1) * x(1)}); };
    f.jacobian = [=](double, const Vec& x) {
        Mat J = Mat::Zero(2, 2);
        J(1, 1) = -3.0 * k * x(1) * x(1);
        return J;
    };
    f.t_derivative = [](double t, const Vec&) { return vec({std::cos(t), 0.0}); };
    return f;
}

// (x₁^p, sin t + x₁)
NonlinearField index1_blowup(const std::string& id, const Params& p, int N) {
    need_size(id, N, 2);
    const double pw = param(p, "power", 2.0);
    NonlinearField f;
    f.eval = [=](double t, const Vec& x) { return vec({std::pow(x(0), pw), std::sin(t) + x(0)}); };
    f.jacobian = [=](double, const Vec& x) {
        Mat J = Mat::Zero(2, 2);
        J(0, 0) = pw * std::pow(x(0), pw - 1.0);
        J(1, 0) = 1.0;
        return J;
    };
    f.t_derivative = [](double t, const Vec&) { return vec({0.0, std::cos(t)}); };
    return f;
}

// (e^{−t}, sin t + x₁)
NonlinearField index1_stable(const std::string& id, const Params&, int N) {
    need_size(id, N, 2);
    NonlinearField f;
    f.eval = [](double t, const Vec& x) { return vec({std::exp(-t), std::sin(t) + x(0)}); };
    f.jacobian = [](double, const Vec&) {
        Mat J = Mat::Zero(2, 2);
        J(1, 0) = 1.0;
        return J;
    };
    f.t_derivative = [](double t, const Vec&) { return vec({-std::exp(-t), std::cos(t)}); };
    return f;
}

// (0, x₁ + e^{−t})
NonlinearField index2_nilpotent_linear(const std::string& id, const Params&, int N) {
    need_size(id, N, 2);
    NonlinearField f;
    f.eval = [](double t, const Vec& x) { return vec({0.0, x(0) + std::exp(-t)}); };
    f.jacobian = [](double, const Vec&) {
        Mat J = Mat::Zero(2, 2);
        J(1, 0) = 1.0;
        return J;
    };
    f.t_derivative = [](double t, const Vec&) { return vec({0.0, -std::exp(-t)}); };
    return f;
}

// (−2x₁ + x₂, x₁, e^{−t} + x₃/2)
NonlinearField index2_structured(const std::string& id, const Params&, int N) {
    need_size(id, N, 3);
    NonlinearField f;
    f.eval = [](double t, const Vec& x) { return vec({-2.0 * x(0) + x(1), x(0), std::exp(-t) + 0.5 * x(2)}); };
    f.jacobian = [](double, const Vec&) {
        Mat J = Mat::Zero(3, 3);
        J(0, 0) = -2.0;
        J(0, 1) = 1.0;
        J(1, 0) = 1.0;
        J(2, 2) = 0.5;
        return J;
    };
    f.t_derivative = [](double t, const Vec&) { return vec({0.0, 0.0, -std::exp(-t)}); };
    f.structure = StructureTag::StructuredAppr2;
    return f;
}

// (sin t − x₂ + x₃, x₁ + x₃, x₄ + x₃/2, e^{−t} + x₄/2)
NonlinearField index3_chain(const std::string& id, const Params&, int N) {
    need_size(id, N, 4);
    NonlinearField f;
    f.eval = [](double t, const Vec& x) {
        return vec({std::sin(t) - x(1) + x(2), x(0) + x(2), x(3) + 0.5 * x(2), std::exp(-t) + 0.5 * x(3)});
    };
    f.jacobian = [](double, const Vec&) {
        Mat J = Mat::Zero(4, 4);
        J(0, 1) = -1.0;
        J(0, 2) = 1.0;
        J(1, 0) = 1.0;
        J(1, 2) = 1.0;
        J(2, 3) = 1.0;
        J(2, 2) = 0.5;
        J(3, 3) = 0.5;
        return J;
    };
    f.t_derivative = [](double t, const Vec&) { return vec({std::cos(t), 0.0, 0.0, -std::exp(-t)}); };
    f.structure = StructureTag::StructuredAppr2;
    return f;
}

// (−x₁, sin t + x₁) until t_fail; afterwards the algebraic row becomes x₂ − 1 − x₂², which has no root.
NonlinearField constraint_loss(const std::string& id, const Params& p, int N) {
    need_size(id, N, 2);
    const double t_fail = param(p, "t_fail", 0.5);
    NonlinearField f;
    f.eval = [=](double t, const Vec& x) {
        if (t > t_fail) return vec({-x(0), x(1) - 1.0 - x(1) * x(1)});
        return vec({-x(0), std::sin(t) + x(0)});
    };
    return f;
}

const std::map<std::string, Factory>& registry() {
    static const std::map<std::string, Factory> r = {
        {"zero", zero_field},
        {"scalar_poly", scalar_poly},
        {"ode_index0", ode_index0},
        {"index1_blowup", index1_blowup},
        {"index1_stable", index1_stable},
        {"index2_nilpotent_linear", index2_nilpotent_linear},
        {"index2_structured", index2_structured},
        {"index3_chain", index3_chain},
        {"constraint_loss", constraint_loss},
    };
    return r;
}

}  // namespace

NonlinearField make_field(const std::string& id, const Params& params, int N) {
    auto it = registry().find(id);
    if (it == registry().end()) throw UnknownRegistryId("field registry has no entry '" + id + "'");
    return it->second(id, params, N);
}

std::vector<std::string> field_registry_ids() {
    std::vector<std::string> out;
    for (const auto& [k, v] : registry()) out.push_back(k);
    return out;
}

// ---------------------------------------------------------------------------------------------
// JSON

namespace {

[[noreturn]] void schema(const std::string& ptr, const std::string& msg) {
    throw SchemaError((ptr.empty() ? std::string("/") : ptr) + ": " + msg);
}

const json& need(const json& j, const std::string& key, const std::string& ptr) {
    if (!j.is_object()) schema(ptr, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) schema(ptr + "/" + key, "missing required field");
    return *it;
}

double number(const json& j, const std::string& ptr) {
    if (j.is_number()) return j.get<double>();
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        double re = j[0].get<double>(), im = j[1].get<double>();
        if (std::abs(im) > 1e-14 * std::max(1.0, std::abs(re)))
            schema(ptr, "complex entries with nonzero imaginary part are not supported");
        return re;
    }
    schema(ptr, "expected a number or a [re, im] pair");
}

double opt_number(const json& j, const std::string& key, double dflt, const std::string& ptr) {
    auto it = j.find(key);
    return it == j.end() ? dflt : number(*it, ptr + "/" + key);
}

std::string string_at(const json& j, const std::string& ptr) {
    if (!j.is_string()) schema(ptr, "expected a string");
    return j.get<std::string>();
}

Vec parse_vector(const json& j, const std::string& ptr) {
    if (!j.is_array()) schema(ptr, "expected an array");
    Vec v(static_cast<int>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], ptr + "/" + std::to_string(i));
    return v;
}

Mat parse_matrix(const json& j, const std::string& ptr) {
    const json& shape = need(j, "shape", ptr);
    if (!shape.is_array() || shape.size() != 2 || !shape[0].is_number_integer() || !shape[1].is_number_integer())
        schema(ptr + "/shape", "expected [rows, cols]");
    const long r = shape[0].get<long>(), c = shape[1].get<long>();
    if (r < 0 || c < 0) schema(ptr + "/shape", "negative dimension");
    const json& data = need(j, "data", ptr);
    if (!data.is_array() || static_cast<long>(data.size()) != r * c)
        schema(ptr + "/data", "expected " + std::to_string(r * c) + " row-major entries");
    Mat M(r, c);
    for (long i = 0; i < r; ++i)
        for (long k = 0; k < c; ++k) M(i, k) = number(data[i * c + k], ptr + "/data/" + std::to_string(i * c + k));
    return M;
}

Params parse_params(const json& j, const std::string& ptr) {
    Params p;
    if (!j.is_object()) schema(ptr, "expected an object of numbers");
    for (auto it = j.begin(); it != j.end(); ++it) p[it.key()] = number(it.value(), ptr + "/" + it.key());
    return p;
}

ScalarFunction parse_scalar(const json& j, const std::string& ptr) {
    ScalarFunction s;
    s.kind = string_at(need(j, "kind", ptr), ptr + "/kind");
    if (j.contains("params")) s.params = parse_params(j["params"], ptr + "/params");
    try {
        s.validate();
    } catch (const UnknownRegistryId& e) {
        throw UnknownRegistryId(ptr + "/kind: " + e.what());
    }
    return s;
}

LyapunovSpec parse_lyapunov(const json& j, const std::string& ptr, int N) {
    LyapunovSpec L;
    std::string comb = j.contains("combination") ? string_at(j["combination"], ptr + "/combination") : "Max";
    if (comb == "Max")
        L.kind = Combination::Max;
    else if (comb == "Min")
        L.kind = Combination::Min;
    else
        schema(ptr + "/combination", "expected Max or Min");
    std::string tie = j.contains("tie_rule") ? string_at(j["tie_rule"], ptr + "/tie_rule") : "Lowest";
    if (tie == "Lowest")
        L.tie_rule = TieRule::Lowest;
    else if (tie == "Highest")
        L.tie_rule = TieRule::Highest;
    else
        schema(ptr + "/tie_rule", "expected Lowest or Highest");
    L.tie_tolerance = opt_number(j, "tie_tolerance", 1e-12, ptr);
    const json& comps = need(j, "components", ptr);
    if (!comps.is_array() || comps.empty()) schema(ptr + "/components", "expected a nonempty array");
    for (std::size_t i = 0; i < comps.size(); ++i) {
        std::string p = ptr + "/components/" + std::to_string(i);
        VComponent c;
        c.kind = string_at(need(comps[i], "kind", p), p + "/kind");
        if (comps[i].contains("weights")) c.weights = parse_matrix(comps[i]["weights"], p + "/weights");
        c.power = opt_number(comps[i], "power", 2.0, p);
        c.index = static_cast<int>(opt_number(comps[i], "index", 0.0, p));
        try {
            c.validate(N);
        } catch (const Error& e) {
            if (e.kind() == "UnknownRegistryId") throw UnknownRegistryId(p + ": " + e.what());
            throw SchemaError(p + ": " + e.what());
        }
        L.components.push_back(c);
    }
    return L;
}

CertificateSpec parse_certificate(const json& j, const std::string& ptr, int N) {
    CertificateSpec c;
    try {
        c.kind = certificate_kind_from_string(string_at(need(j, "kind", ptr), ptr + "/kind"));
    } catch (const SchemaError& e) {
        schema(ptr + "/kind", e.what());
    }
    if (j.contains("approach")) {
        c.approach = string_at(j["approach"], ptr + "/approach");
        if (c.approach != "first" && c.approach != "cascade") schema(ptr + "/approach", "expected first or cascade");
    }
    c.V = parse_lyapunov(need(j, "V", ptr), ptr + "/V", N);
    c.comparison.U = parse_scalar(need(j, "U", ptr), ptr + "/U");
    c.comparison.psi = parse_scalar(need(j, "psi", ptr), ptr + "/psi");
    c.comparison.R = opt_number(j, "R", 0.0, ptr);
    if (j.contains("region")) {
        const json& reg = j["region"];
        if (!reg.is_array()) schema(ptr + "/region", "expected an array of halfspaces");
        for (std::size_t i = 0; i < reg.size(); ++i) {
            std::string p = ptr + "/region/" + std::to_string(i);
            Halfspace h;
            h.a = parse_vector(need(reg[i], "a", p), p + "/a");
            if (h.a.size() != N) schema(p + "/a", "expected length " + std::to_string(N));
            h.b = number(need(reg[i], "b", p), p + "/b");
            c.comparison.region.push_back(h);
        }
    }
    if (j.contains("declared")) {
        const json& d = j["declared"];
        try {
            if (d.contains("U")) c.comparison.declared_U = integral_class_from_string(string_at(d["U"], ptr + "/declared/U"));
            if (d.contains("psi"))
                c.comparison.declared_psi = integral_class_from_string(string_at(d["psi"], ptr + "/declared/psi"));
        } catch (const SchemaError& e) {
            schema(ptr + "/declared", e.what());
        }
    }
    return c;
}

ojson matrix_json(const Mat& M) {
    ojson j;
    j["shape"] = {M.rows(), M.cols()};
    std::vector<double> data;
    for (long i = 0; i < M.rows(); ++i)
        for (long k = 0; k < M.cols(); ++k) data.push_back(M(i, k));
    j["data"] = data;
    return j;
}

ojson vector_json(const Vec& v) { return ojson(std::vector<double>(v.data(), v.data() + v.size())); }

ojson scalar_json(const ScalarFunction& s) {
    ojson j;
    j["kind"] = s.kind;
    ojson p = ojson::object();
    for (const auto& [k, v] : s.params) p[k] = v;
    j["params"] = p;
    return j;
}

}  // namespace

std::vector<Vec> SweepSpec::expand(const Vec& base) const {
    std::vector<Vec> out = points;
    if (axes.empty()) return out;
    std::vector<Vec> grid = {base};
    for (const auto& ax : axes) {
        std::vector<Vec> next;
        for (const auto& g : grid)
            for (double v : ax.values) {
                Vec p = g;
                p(ax.component) = v;
                next.push_back(p);
            }
        grid = std::move(next);
    }
    out.insert(out.end(), grid.begin(), grid.end());
    return out;
}

ProblemSpec parse_problem(const json& j) {
    ProblemSpec s;
    if (!j.is_object()) schema("", "expected an object");
    s.name = string_at(need(j, "name", ""), "/name");
    s.A = parse_matrix(need(j, "A", ""), "/A");
    s.B = parse_matrix(need(j, "B", ""), "/B");
    if (s.A.rows() != s.A.cols()) schema("/A/shape", "matrix must be square");
    if (s.B.rows() != s.B.cols()) schema("/B/shape", "matrix must be square");
    if (s.A.rows() != s.B.rows()) schema("/B/shape", "A and B must have the same shape");
    const int N = static_cast<int>(s.A.rows());

    const json& field = need(j, "field", "");
    s.field_id = string_at(need(field, "registry_id", "/field"), "/field/registry_id");
    if (field.contains("params")) s.params = parse_params(field["params"], "/field/params");
    if (!registry().count(s.field_id))
        throw UnknownRegistryId("/field/registry_id: no field named '" + s.field_id + "'");

    if (j.contains("structure_tag")) {
        try {
            s.structure = structure_from_string(string_at(j["structure_tag"], "/structure_tag"));
        } catch (const SchemaError& e) {
            schema("/structure_tag", e.what());
        }
    }

    if (j.contains("ground_truth")) {
        const json& g = j["ground_truth"];
        if (!g.is_object()) schema("/ground_truth", "expected an object");
        if (g.contains("index")) {
            if (!g["index"].is_number_integer()) schema("/ground_truth/index", "expected an integer");
            s.truth.index = g["index"].get<int>();
        }
        if (g.contains("multiplicities")) {
            if (!g["multiplicities"].is_array()) schema("/ground_truth/multiplicities", "expected an array");
            std::vector<int> m;
            for (std::size_t i = 0; i < g["multiplicities"].size(); ++i) {
                const json& e = g["multiplicities"][i];
                if (!e.is_number_integer()) schema("/ground_truth/multiplicities/" + std::to_string(i), "expected an integer");
                m.push_back(e.get<int>());
            }
            s.truth.multiplicities = m;
        }
        if (g.contains("escape_time")) s.truth.escape_time = number(g["escape_time"], "/ground_truth/escape_time");
        if (g.contains("sup_bound")) s.truth.sup_bound = number(g["sup_bound"], "/ground_truth/sup_bound");
    }

    if (j.contains("initial")) {
        const json& in = j["initial"];
        InitialSpec init;
        init.t0 = opt_number(in, "t0", 0.0, "/initial");
        init.x0 = parse_vector(need(in, "x0", "/initial"), "/initial/x0");
        if (init.x0.size() != N) schema("/initial/x0", "expected length " + std::to_string(N));
        s.initial = init;
    }

    s.integration.t0 = s.initial ? s.initial->t0 : 0.0;
    if (j.contains("integration")) {
        const json& o = j["integration"];
        const std::string p = "/integration";
        if (!o.is_object()) schema(p, "expected an object");
        auto& io = s.integration;
        io.t_max = opt_number(o, "t_max", io.t_max, p);
        io.rtol = opt_number(o, "rtol", io.rtol, p);
        io.atol = opt_number(o, "atol", io.atol, p);
        io.h_init = opt_number(o, "h_init", io.h_init, p);
        io.h_min = opt_number(o, "h_min", io.h_min, p);
        if (o.contains("h_max")) io.h_max = number(o["h_max"], p + "/h_max");
        io.blowup_norm_cap = opt_number(o, "blowup_norm_cap", io.blowup_norm_cap, p);
        io.blowup_window = static_cast<int>(opt_number(o, "blowup_window", io.blowup_window, p));
    }
    try {
        s.integration.validate();
    } catch (const SchemaError& e) {
        schema("/integration", e.what());
    }

    if (j.contains("certificates")) {
        const json& cs = j["certificates"];
        if (!cs.is_array()) schema("/certificates", "expected an array");
        for (std::size_t i = 0; i < cs.size(); ++i)
            s.certificates.push_back(parse_certificate(cs[i], "/certificates/" + std::to_string(i), N));
    }

    if (j.contains("sweep")) {
        const json& sw = j["sweep"];
        if (sw.contains("points")) {
            const json& pts = sw["points"];
            if (!pts.is_array()) schema("/sweep/points", "expected an array");
            for (std::size_t i = 0; i < pts.size(); ++i) {
                Vec p = parse_vector(pts[i], "/sweep/points/" + std::to_string(i));
                if (p.size() != N) schema("/sweep/points/" + std::to_string(i), "expected length " + std::to_string(N));
                s.sweep.points.push_back(p);
            }
        }
        if (sw.contains("axes")) {
            const json& axes = sw["axes"];
            if (!axes.is_array()) schema("/sweep/axes", "expected an array");
            if (!s.initial) schema("/sweep/axes", "axes need an initial value to vary");
            for (std::size_t i = 0; i < axes.size(); ++i) {
                std::string p = "/sweep/axes/" + std::to_string(i);
                SweepAxis ax;
                const json& c = need(axes[i], "component", p);
                if (!c.is_number_integer() || c.get<int>() < 0 || c.get<int>() >= N) schema(p + "/component", "out of range");
                ax.component = c.get<int>();
                Vec vals = parse_vector(need(axes[i], "values", p), p + "/values");
                ax.values.assign(vals.data(), vals.data() + vals.size());
                s.sweep.axes.push_back(ax);
            }
        }
    }
    return s;
}

ojson problem_to_json(const ProblemSpec& s) {
    ojson j;
    j["name"] = s.name;
    j["A"] = matrix_json(s.A);
    j["B"] = matrix_json(s.B);
    ojson field;
    field["registry_id"] = s.field_id;
    ojson params = ojson::object();
    for (const auto& [k, v] : s.params) params[k] = v;
    field["params"] = params;
    j["field"] = field;
    j["structure_tag"] = to_string(s.structure);
    ojson g = ojson::object();
    if (s.truth.index) g["index"] = *s.truth.index;
    if (s.truth.multiplicities) g["multiplicities"] = *s.truth.multiplicities;
    if (s.truth.escape_time) g["escape_time"] = *s.truth.escape_time;
    if (s.truth.sup_bound) g["sup_bound"] = *s.truth.sup_bound;
    j["ground_truth"] = g;
    if (s.initial) j["initial"] = {{"t0", s.initial->t0}, {"x0", vector_json(s.initial->x0)}};
    ojson o;
    const auto& io = s.integration;
    o["t_max"] = io.t_max;
    o["rtol"] = io.rtol;
    o["atol"] = io.atol;
    o["h_init"] = io.h_init;
    o["h_min"] = io.h_min;
    if (std::isfinite(io.h_max)) o["h_max"] = io.h_max;
    o["blowup_norm_cap"] = io.blowup_norm_cap;
    o["blowup_window"] = io.blowup_window;
    j["integration"] = o;
    if (!s.certificates.empty()) {
        ojson cs = ojson::array();
        for (const auto& c : s.certificates) {
            ojson cj;
            cj["kind"] = to_string(c.kind);
            cj["approach"] = c.approach;
            ojson V;
            V["combination"] = c.V.kind == Combination::Max ? "Max" : "Min";
            V["tie_rule"] = c.V.tie_rule == TieRule::Lowest ? "Lowest" : "Highest";
            V["tie_tolerance"] = c.V.tie_tolerance;
            ojson comps = ojson::array();
            for (const auto& v : c.V.components) {
                ojson vc;
                vc["kind"] = v.kind;
                if (v.kind == "quadratic") vc["weights"] = matrix_json(v.weights);
                if (v.kind == "norm_power") vc["power"] = v.power;
                if (v.kind == "coordinate_square") vc["index"] = v.index;
                comps.push_back(vc);
            }
            V["components"] = comps;
            cj["V"] = V;
            cj["U"] = scalar_json(c.comparison.U);
            cj["psi"] = scalar_json(c.comparison.psi);
            cj["R"] = c.comparison.R;
            if (!c.comparison.region.empty()) {
                ojson reg = ojson::array();
                for (const auto& h : c.comparison.region) reg.push_back({{"a", vector_json(h.a)}, {"b", h.b}});
                cj["region"] = reg;
            }
            if (c.comparison.declared_U || c.comparison.declared_psi) {
                ojson d;
                if (c.comparison.declared_U) d["U"] = to_string(*c.comparison.declared_U);
                if (c.comparison.declared_psi) d["psi"] = to_string(*c.comparison.declared_psi);
                cj["declared"] = d;
            }
            cs.push_back(cj);
        }
        j["certificates"] = cs;
    }
    if (!s.sweep.points.empty() || !s.sweep.axes.empty()) {
        ojson sw;
        if (!s.sweep.points.empty()) {
            ojson pts = ojson::array();
            for (const auto& p : s.sweep.points) pts.push_back(vector_json(p));
            sw["points"] = pts;
        }
        if (!s.sweep.axes.empty()) {
            ojson axes = ojson::array();
            for (const auto& a : s.sweep.axes) axes.push_back({{"component", a.component}, {"values", a.values}});
            sw["axes"] = axes;
        }
        j["sweep"] = sw;
    }
    return j;
}

ProblemSpec load_problem_spec(const std::string& src) {
    const std::string prefix = "builtin:";
    if (src.rfind(prefix, 0) == 0) return builtin_spec(src.substr(prefix.size()));
    std::ifstream in(src);
    if (!in) throw SchemaError(src + ": cannot open file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(src + ": invalid JSON (" + e.what() + ")");
    }
    return parse_problem(j);
}

Problem instantiate(const ProblemSpec& spec, const Tolerances& tol) {
    const int N = static_cast<int>(spec.A.rows());
    NonlinearField f = make_field(spec.field_id, spec.params, N);
    f.structure = spec.structure;
    Problem p;
    p.spec = spec;
    p.dae = make_dae(Pencil(spec.A, spec.B), std::move(f), tol);
    return p;
}

Problem load_problem(const std::string& src, const Tolerances& tol) { return instantiate(load_problem_spec(src), tol); }

// ---------------------------------------------------------------------------------------------
// Builtins

namespace {

Mat mat(int r, int c, std::initializer_list<double> v) {
    Mat M(r, c);
    auto it = v.begin();
    for (int i = 0; i < r; ++i)
        for (int k = 0; k < c; ++k) M(i, k) = *it++;
    return M;
}

CertificateSpec quadratic_certificate(CertificateKind kind, int N, ScalarFunction U, ScalarFunction psi, double R) {
    CertificateSpec c;
    c.kind = kind;
    VComponent v;
    v.kind = "quadratic";
    v.weights = Mat::Identity(N, N);
    c.V.components = {v};
    c.V.kind = kind == CertificateKind::BlowUp ? Combination::Min : Combination::Max;
    c.comparison.U = std::move(U);
    c.comparison.psi = std::move(psi);
    c.comparison.R = R;
    return c;
}

ProblemSpec make_builtin(const std::string& name) {
    ProblemSpec s;
    s.name = name;
    s.integration.t0 = 0.0;
    if (name == "ode_index0") {
        s.A = Mat::Identity(2, 2);
        s.B = mat(2, 2, {0.1, -1.0, 1.0, 0.1});
        s.field_id = "ode_index0";
        s.params = {{"cubic", 0.1}};
        s.truth.index = 0;
        s.truth.multiplicities = std::vector<int>{};
        s.initial = InitialSpec{0.0, (Vec(2) << 1.0, 0.0).finished()};
        s.integration.t_max = 10.0;
    } else if (name == "index1_blowup" || name == "index1_blowup_cubic") {
        const bool cubic = name == "index1_blowup_cubic";
        s.A = mat(2, 2, {1, 0, 0, 0});
        s.B = mat(2, 2, {0, 0, 0, 1});
        s.field_id = "index1_blowup";
        s.params = {{"power", cubic ? 3.0 : 2.0}};
        s.truth.index = 1;
        s.truth.multiplicities = std::vector<int>{1};
        s.truth.escape_time = cubic ? 0.5 : 1.0;
        s.initial = InitialSpec{0.0, (Vec(2) << 1.0, 1.0).finished()};
        s.integration.t_max = cubic ? 10.0 : 3.0;
        if (cubic) {
            auto c = quadratic_certificate(CertificateKind::BlowUp, 2, {"power", {{"c", 2.0}, {"p", 2.0}}},
                                           {"constant", {{"c", 1.0}}}, 0.0);
            c.comparison.region = {Halfspace{(Vec(2) << 1.0, 0.0).finished(), 0.5}};
            s.certificates = {c};
            s.sweep.points = {(Vec(2) << 0.6, 0.0).finished(), (Vec(2) << 1.0, 0.0).finished(),
                              (Vec(2) << 3.0, 0.0).finished()};
        } else {
            s.sweep.axes = {SweepAxis{0, {0.5, 1.0, 2.0}}};
        }
    } else if (name == "index1_stable") {
        s.A = mat(2, 2, {1, 0, 0, 0});
        s.B = Mat::Identity(2, 2);
        s.field_id = "index1_stable";
        s.truth.index = 1;
        s.truth.multiplicities = std::vector<int>{1};
        s.truth.sup_bound = 10.0;
        s.initial = InitialSpec{0.0, (Vec(2) << 1.0, 1.0).finished()};
        s.integration.t_max = 100.0;
        s.certificates = {quadratic_certificate(CertificateKind::LagrangeStability, 2,
                                                {"affine", {{"a", 1.0}, {"b", 1.0}}},
                                                {"exp_decay", {{"c", 1.0}, {"rate", 1.0}}}, 1.0)};
        s.sweep.axes = {SweepAxis{0, {-5.0, -2.5, 0.0, 2.5, 5.0}}};
    } else if (name == "index2_nilpotent_linear") {
        s.A = mat(2, 2, {0, 1, 0, 0});
        s.B = Mat::Identity(2, 2);
        s.field_id = "index2_nilpotent_linear";
        s.truth.index = 2;
        s.truth.multiplicities = std::vector<int>{2};
        s.initial = InitialSpec{0.0, (Vec(2) << 0.0, 1.0).finished()};
        s.integration.t_max = 1.0;
    } else if (name == "index2_structured") {
        s.A = mat(3, 3, {1, 0, 0, 0, 0, 1, 0, 0, 0});
        s.B = Mat::Identity(3, 3);
        s.field_id = "index2_structured";
        s.structure = StructureTag::StructuredAppr2;
        s.truth.index = 2;
        s.truth.multiplicities = std::vector<int>{2};
        s.initial = InitialSpec{0.0, (Vec(3) << 1.0, 3.0, 2.0).finished()};
        s.integration.t_max = 1.0;
    } else if (name == "index3_chain") {
        Mat A = Mat::Zero(4, 4);
        A(0, 0) = 1.0;
        A(1, 2) = 1.0;
        A(2, 3) = 1.0;
        s.A = A;
        s.B = Mat::Identity(4, 4);
        s.field_id = "index3_chain";
        s.structure = StructureTag::StructuredAppr2;
        s.truth.index = 3;
        s.truth.multiplicities = std::vector<int>{3};
        s.initial = InitialSpec{0.0, (Vec(4) << 1.0, 17.0, 8.0, 2.0).finished()};
        s.integration.t_max = 1.0;
    } else if (name == "constraint_loss") {
        s.A = mat(2, 2, {1, 0, 0, 0});
        s.B = mat(2, 2, {0, 0, 0, 1});
        s.field_id = "constraint_loss";
        s.params = {{"t_fail", 0.5}};
        s.truth.index = 1;
        s.truth.multiplicities = std::vector<int>{1};
        s.initial = InitialSpec{0.0, (Vec(2) << 1.0, 1.0).finished()};
        s.integration.t_max = 1.0;
    } else if (name == "scalar_forced_decay") {
        // ẇ = −w + e^{−t}
        s.A = Mat::Identity(1, 1);
        s.B = Mat::Zero(1, 1);
        s.field_id = "scalar_poly";
        s.params = {{"a", -1.0}, {"p", 1.0}, {"c", 1.0}, {"r", 1.0}};
        s.truth.index = 0;
        s.truth.multiplicities = std::vector<int>{};
        s.initial = InitialSpec{0.0, Vec::Constant(1, 1.0)};
        s.integration.t_max = 100.0;
        s.certificates = {quadratic_certificate(CertificateKind::GlobalSolvability, 1,
                                                {"affine", {{"a", 1.0}, {"b", 1.0}}},
                                                {"exp_decay", {{"c", 1.0}, {"rate", 1.0}}}, 1.0)};
    } else if (name == "scalar_cubic") {
        // ẇ = w³
        s.A = Mat::Identity(1, 1);
        s.B = Mat::Zero(1, 1);
        s.field_id = "scalar_poly";
        s.params = {{"a", 1.0}, {"p", 3.0}, {"c", 0.0}, {"r", 1.0}};
        s.truth.index = 0;
        s.truth.multiplicities = std::vector<int>{};
        s.truth.escape_time = 0.5;
        s.initial = InitialSpec{0.0, Vec::Constant(1, 1.0)};
        s.integration.t_max = 10.0;
        auto c = quadratic_certificate(CertificateKind::BlowUp, 1, {"power", {{"c", 2.0}, {"p", 2.0}}},
                                       {"constant", {{"c", 1.0}}}, 0.0);
        c.comparison.region = {Halfspace{Vec::Constant(1, 1.0), 0.5}};
        s.certificates = {c};
    } else {
        throw UnknownRegistryId("no builtin problem named '" + name + "'");
    }
    return s;
}

}  // namespace

std::vector<std::string> builtin_names() {
    return {"ode_index0",        "index1_blowup",     "index1_blowup_cubic", "index1_stable",
            "index2_nilpotent_linear", "index2_structured", "index3_chain",  "constraint_loss",
            "scalar_forced_decay", "scalar_cubic"};
}

ProblemSpec builtin_spec(const std::string& name) { return make_builtin(name); }

Problem builtin(const std::string& name, const Tolerances& tol) { return instantiate(builtin_spec(name), tol); }

std::function<Vec(double)> exact_solution(const ProblemSpec& spec, const Vec& x0) {
    const std::string& id = spec.field_id;
    const double t0 = spec.initial ? spec.initial->t0 : 0.0;
    if (t0 != 0.0) return {};
    if (id == "index1_blowup") {
        const double p = spec.params.count("power") ? spec.params.at("power") : 2.0;
        const double a = x0(0);
        if (p == 2.0)
            return [a](double t) {
                double x1 = a / (1.0 - a * t);
                return vec({x1, std::sin(t) + x1});
            };
        if (p == 3.0)
            return [a](double t) {
                double x1 = a / std::sqrt(1.0 - 2.0 * a * a * t);
                return vec({x1, std::sin(t) + x1});
            };
        return {};
    }
    if (id == "index1_stable") {
        const double a = x0(0);
        return [a](double t) {
            double x1 = (a + t) * std::exp(-t);
            return vec({x1, std::sin(t) + x1});
        };
    }
    if (id == "index2_nilpotent_linear") {
        const double b = x0(1);
        return [b](double t) { return vec({(b + t - 1.0) * std::exp(-t), (b + t) * std::exp(-t)}); };
    }
    if (id == "index2_structured") {
        const double a = x0(0);
        return [a](double t) {
            double x1 = (a - 2.0) * std::exp(-2.0 * t) + 2.0 * std::exp(-t);
            return vec({x1, x1 + 2.0 * std::exp(-t), 2.0 * std::exp(-t)});
        };
    }
    if (id == "index3_chain") {
        const double y0 = x0(0);
        return [y0](double t) {
            double y = (y0 + 8.2) * std::exp(-2.0 * t) - 8.0 * std::exp(-t) + (2.0 * std::sin(t) - std::cos(t)) / 5.0;
            return vec({y, y + 16.0 * std::exp(-t), 8.0 * std::exp(-t), 2.0 * std::exp(-t)});
        };
    }
    if (id == "scalar_poly" && x0.size() == 1) {
        const double a = spec.params.count("a") ? spec.params.at("a") : -1.0;
        const double p = spec.params.count("p") ? spec.params.at("p") : 1.0;
        const double c = spec.params.count("c") ? spec.params.at("c") : 0.0;
        const double r = spec.params.count("r") ? spec.params.at("r") : 1.0;
        const double w0 = x0(0);
        if (p == 1.0 && a == -1.0 && r == 1.0) return [=](double t) { return Vec::Constant(1, (w0 + c * t) * std::exp(-t)); };
        if (p == 3.0 && a == 1.0 && c == 0.0)
            return [=](double t) { return Vec::Constant(1, w0 / std::sqrt(1.0 - 2.0 * w0 * w0 * t)); };
        if (p == 2.0 && a == 1.0 && c == 0.0) return [=](double t) { return Vec::Constant(1, w0 / (1.0 - w0 * t)); };
    }
    return {};
}

// ---------------------------------------------------------------------------------------------
// Random Weierstrass pencils

namespace {

Mat random_orthogonal(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat G(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) G(i, k) = g(rng);
    Eigen::HouseholderQR<Mat> qr(G);
    Mat Q = qr.householderQ();
    Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < n; ++k)
        if (R(k, k) < 0) Q.col(k) *= -1.0;
    return Q;
}

Mat random_conditioned(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(1.0, 3.0);
    Vec d(n);
    for (int i = 0; i < n; ++i) d(i) = u(rng);
    return random_orthogonal(rng, n) * d.asDiagonal() * random_orthogonal(rng, n);
}

}  // namespace

RandomPencil random_weierstrass(std::uint64_t seed, int N, const std::vector<int>& segre) {
    int d = 0;
    for (int m : segre) {
        if (m < 1) throw SchemaError("Segre block sizes must be positive");
        d += m;
    }
    if (d > N || N < 1) throw SchemaError("Segre blocks exceed the dimension");
    const int r = N - d;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Mat S = random_conditioned(rng, N), T = random_conditioned(rng, N);
    Mat Acan = Mat::Zero(N, N), Bcan = Mat::Zero(N, N);
    Acan.topLeftCorner(r, r).setIdentity();
    for (int i = 0; i < r; ++i)
        for (int k = 0; k < r; ++k) Bcan(i, k) = g(rng);
    int off = r;
    for (int m : segre) {
        for (int k = 0; k + 1 < m; ++k) Acan(off + k, off + k + 1) = 1.0;
        off += m;
    }
    Bcan.bottomRightCorner(d, d).setIdentity();
    Mat E = Mat::Zero(N, N);
    E.bottomRightCorner(d, d).setIdentity();

    RandomPencil out;
    out.seed = seed;
    out.segre = segre;
    out.index = 0;
    for (int m : segre) out.index = std::max(out.index, m);
    out.pencil = Pencil(S * Acan * T, S * Bcan * T);
    out.P2 = T.inverse() * E * T;
    out.Q2 = S * E * S.inverse();
    return out;
}

std::vector<RandomPencil> random_corpus(int count, std::uint64_t base_seed) {
    std::vector<RandomPencil> out;
    for (int i = 0; i < count; ++i) {
        std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        std::mt19937_64 rng(seed * 7919u + 17u);
        const int N = 1 + static_cast<int>(rng() % 8);
        int left = static_cast<int>(rng() % (N + 1));
        std::vector<int> segre;
        while (left > 0) {
            int m = 1 + static_cast<int>(rng() % std::min(4, left));
            segre.push_back(m);
            left -= m;
        }
        out.push_back(random_weierstrass(seed, N, segre));
    }
    return out;
}

}  // namespace daekit
