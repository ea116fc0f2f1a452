#pragma once

// io.hpp — system and field description files (JSON), report serialization,
// and CSV output.
//
// Parsing rejects NaN/Inf and names the offending JSON path. Report floats
// are written with 17 significant digits so every report round-trips
// through its own schema bit-exactly.

#include <json.hpp>

#include <Eigen/Dense>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "floq/errors.hpp"
#include "floq/fields.hpp"
#include "floq/systems.hpp"

namespace floq::io {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// FNV-1a 64-bit digest of the raw file bytes, as 16 hex characters.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

inline json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        // parse errors carry the byte position; overflowing literals such as
        // 1e999 (the closest JSON can get to Inf) name the offending token
        throw InputError(what + ": " + e.what());
    }
}

namespace detail {

inline double finite_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw InputError("expected a number at " + path);
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw InputError("nonfinite value at " + path);
    return v;
}

}  // namespace detail

// Row-major array-of-arrays matrix; every entry must be a finite double.
inline MatrixXd parse_matrix(const json& j, const std::string& path, int rows = -1, int cols = -1) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw InputError("expected an array of arrays at " + path);
    const int r = static_cast<int>(j.size());
    const int c = static_cast<int>(j[0].size());
    if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols))
        throw InputError("matrix at " + path + " has shape " + std::to_string(r) + "x" +
                         std::to_string(c) + ", expected " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    MatrixXd m(r, c);
    for (int i = 0; i < r; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != c)
            throw InputError("ragged matrix rows at " + path);
        for (int k = 0; k < c; ++k)
            m(i, k) = detail::finite_number(j[i][k], path + "/" + std::to_string(i) + "/" +
                                                         std::to_string(k));
    }
    return m;
}

inline VectorXd parse_vector(const json& j, const std::string& path, int size = -1) {
    if (!j.is_array()) throw InputError("expected an array at " + path);
    if (size >= 0 && static_cast<int>(j.size()) != size)
        throw InputError("vector at " + path + " has length " + std::to_string(j.size()) +
                         ", expected " + std::to_string(size));
    VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<int>(i)) = detail::finite_number(j[i], path + "/" + std::to_string(i));
    return v;
}

namespace detail {

inline std::vector<sys::TrigTerm> parse_terms(const json& j, const std::string& path, int n) {
    std::vector<sys::TrigTerm> terms;
    if (!j.is_array()) throw InputError("expected an array of harmonics at " + path);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "/" + std::to_string(i);
        const auto& t = j[i];
        sys::TrigTerm term;
        term.k = t.value("k", 1);
        if (term.k <= 0) throw InputError("harmonic index must be positive at " + p + "/k");
        term.C = t.contains("C") ? parse_matrix(t["C"], p + "/C", n, n) : MatrixXd::Zero(n, n);
        term.S = t.contains("S") ? parse_matrix(t["S"], p + "/S", n, n) : MatrixXd::Zero(n, n);
        terms.push_back(std::move(term));
    }
    return terms;
}

}  // namespace detail

// Optional per-fixture expectations, used by the verification suite.
struct SystemExpectations {
    std::optional<int> a_index;
    std::optional<bool> exists;
    std::optional<MatrixXd> monodromy;
    double monodromy_tol = 1e-8;
};

struct SystemFile {
    sys::PeriodicLinearSystem system;
    std::string kind;
    SystemExpectations expected;
    std::string digest;  // FNV-1a of the file bytes (empty when parsed from memory)
};

inline SystemFile parse_system(const json& j) {
    SystemFile out;
    if (!j.contains("n") || !j.contains("T") || !j.contains("kind"))
        throw InputError("system file requires fields n, T, kind");
    const int n = j["n"].get<int>();
    if (n <= 0) throw InputError("dimension n must be positive at /n");
    const double T = detail::finite_number(j["T"], "/T");
    out.kind = j["kind"].get<std::string>();

    if (out.kind == "trig") {
        sys::TrigMatrixPolynomial poly;
        poly.constant = j.contains("A0") ? parse_matrix(j["A0"], "/A0", n, n) : MatrixXd::Zero(n, n);
        if (j.contains("harmonics")) poly.base = detail::parse_terms(j["harmonics"], "/harmonics", n);
        out.system = sys::make_trig_system(n, T, std::move(poly));
    } else if (out.kind == "piecewise") {
        if (!j.contains("breakpoints") || !j.contains("matrices"))
            throw InputError("piecewise system requires breakpoints and matrices");
        std::vector<double> bp;
        for (std::size_t i = 0; i < j["breakpoints"].size(); ++i)
            bp.push_back(detail::finite_number(j["breakpoints"][i], "/breakpoints/" + std::to_string(i)));
        std::vector<MatrixXd> pieces;
        for (std::size_t i = 0; i < j["matrices"].size(); ++i)
            pieces.push_back(parse_matrix(j["matrices"][i], "/matrices/" + std::to_string(i), n, n));
        out.system = sys::make_piecewise_system(n, T, std::move(bp), std::move(pieces));
    } else if (out.kind == "manufactured") {
        if (!j.contains("qspec") || !j.contains("rstar"))
            throw InputError("manufactured system requires qspec and rstar");
        const auto& q = j["qspec"];
        sys::QSpec qs;
        qs.curve.constant =
            q.contains("constant") ? parse_matrix(q["constant"], "/qspec/constant", n, n)
                                   : MatrixXd::Zero(n, n);
        if (q.contains("half_frequency_terms"))
            qs.curve.half = detail::parse_terms(q["half_frequency_terms"], "/qspec/half_frequency_terms", n);
        qs.declared_d = q.value("declared_d", 0);
        const MatrixXd rstar = parse_matrix(j["rstar"], "/rstar", n, n);
        out.system = sys::manufacture(std::move(qs), rstar, T);
    } else {
        throw InputError("unknown system kind '" + out.kind + "' at /kind");
    }

    if (j.contains("expected")) {
        const auto& e = j["expected"];
        if (e.contains("a_index")) out.expected.a_index = e["a_index"].get<int>();
        if (e.contains("exists")) out.expected.exists = e["exists"].get<bool>();
        if (e.contains("monodromy"))
            out.expected.monodromy = parse_matrix(e["monodromy"], "/expected/monodromy", n, n);
        if (e.contains("monodromy_tol"))
            out.expected.monodromy_tol = detail::finite_number(e["monodromy_tol"], "/expected/monodromy_tol");
    }
    return out;
}

inline SystemFile load_system(const std::string& path) {
    const std::string text = read_file(path);
    SystemFile out = parse_system(parse_json(text, path));
    out.digest = fnv1a_hex(text);
    return out;
}

struct FieldExpectations {
    std::optional<int> d;
    std::optional<int> q0;
    std::optional<double> period;
    double period_tol = 1e-6;
};

struct FieldFile {
    sys::AutonomousField field;  // perturbation attached when the file has one
    std::string name;            // builtin name or "polynomial"
    fields::OrbitSeed seed;
    bool has_perturbation = false;
    FieldExpectations expected;
    std::string digest;
};

inline FieldFile parse_field(const json& j) {
    FieldFile out;
    if (!j.contains("n")) throw InputError("field file requires n");
    const int n = j["n"].get<int>();

    if (j.contains("builtin")) {
        out.name = j["builtin"].get<std::string>();
        out.field = fields::field_by_name(out.name);
        if (out.field.n != n) throw InputError("builtin field dimension disagrees with /n");
        out.seed = fields::seed_by_name(out.name);
    } else if (j.contains("components")) {
        out.name = "polynomial";
        std::vector<std::vector<fields::Monomial>> comps;
        const auto& cj = j["components"];
        for (std::size_t i = 0; i < cj.size(); ++i) {
            std::vector<fields::Monomial> comp;
            for (std::size_t k = 0; k < cj[i].size(); ++k) {
                const std::string p = "/components/" + std::to_string(i) + "/" + std::to_string(k);
                fields::Monomial m;
                m.coeff = detail::finite_number(cj[i][k].at("c"), p + "/c");
                for (const auto& e : cj[i][k].at("e")) m.exps.push_back(e.get<int>());
                comp.push_back(std::move(m));
            }
            comps.push_back(std::move(comp));
        }
        out.field = fields::polynomial_field(n, std::move(comps));
    } else {
        throw InputError("field file requires either builtin or components");
    }

    if (j.contains("z0")) out.seed.z_guess = parse_vector(j["z0"], "/z0", n);
    if (j.contains("T0")) out.seed.T_guess = detail::finite_number(j["T0"], "/T0");

    if (j.contains("perturbation")) {
        std::vector<std::vector<fields::PerturbationTerm>> comps;
        const auto& pj = j["perturbation"];
        for (std::size_t i = 0; i < pj.size(); ++i) {
            std::vector<fields::PerturbationTerm> comp;
            for (std::size_t k = 0; k < pj[i].size(); ++k) {
                const std::string p = "/perturbation/" + std::to_string(i) + "/" + std::to_string(k);
                fields::PerturbationTerm term;
                term.coeff = detail::finite_number(pj[i][k].at("c"), p + "/c");
                for (const auto& e : pj[i][k].at("e")) term.exps.push_back(e.get<int>());
                if (pj[i][k].contains("trig")) {
                    const std::string trig = pj[i][k]["trig"].get<std::string>();
                    if (trig == "cos")
                        term.trig = 1;
                    else if (trig == "sin")
                        term.trig = 2;
                    else
                        throw InputError("trig must be cos or sin at " + p + "/trig");
                    term.freq = detail::finite_number(pj[i][k].at("freq"), p + "/freq");
                }
                comp.push_back(std::move(term));
            }
            comps.push_back(std::move(comp));
        }
        out.field.perturbation = fields::polynomial_perturbation(n, std::move(comps));
        out.has_perturbation = true;
    }

    if (j.contains("expected")) {
        const auto& e = j["expected"];
        if (e.contains("d")) out.expected.d = e["d"].get<int>();
        if (e.contains("q0")) out.expected.q0 = e["q0"].get<int>();
        if (e.contains("period")) out.expected.period = detail::finite_number(e["period"], "/expected/period");
        if (e.contains("period_tol"))
            out.expected.period_tol = detail::finite_number(e["period_tol"], "/expected/period_tol");
    }
    return out;
}

inline FieldFile load_field(const std::string& path) {
    const std::string text = read_file(path);
    FieldFile out = parse_field(parse_json(text, path));
    out.digest = fnv1a_hex(text);
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: every floating value with 17 significant digits.

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void dump_report(const ordered_json& j, std::string& out, int indent) {
    const std::string pad(indent, ' ');
    const std::string pad2(indent + 2, ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad2 + json(it.key()).dump() + ": ";
                dump_report(it.value(), out, indent + 2);
            }
            out += "\n" + pad + "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            bool scalars = true;
            for (const auto& v : j) scalars = scalars && !(v.is_object() || v.is_array());
            out += scalars ? "[" : "[\n";
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += scalars ? ", " : ",\n";
                first = false;
                if (!scalars) out += pad2;
                dump_report(v, out, indent + 2);
            }
            out += scalars ? "]" : "\n" + pad + "]";
            return;
        }
        case json::value_t::number_float:
            out += format_double(j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

inline std::string dump_report(const ordered_json& j) {
    std::string out;
    dump_report(j, out, 0);
    out += "\n";
    return out;
}

inline ordered_json matrix_json(const MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ordered_json vector_json(const VectorXd& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

// CSV with a header row, comma separator, LF line endings, 17 digits.
inline void write_csv(std::ostream& os, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
        os << "\n";
    }
}

}  // namespace floq::io
