#include "qbirkhoff/description.hpp"

#include "qbirkhoff/error.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace qb {

namespace {

using nlohmann::json;

[[noreturn]] void schemaFail(const std::string& where, const std::string& what) {
    fail(ErrorCode::SchemaError, where.empty() ? what : where + ": " + what);
}

cplx parseComplexNumber(const json& j, const std::string& where) {
    if (j.is_number()) return cplx(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return cplx(j[0].get<double>(), j[1].get<double>());
    schemaFail(where, "expected a number or [re, im]");
}

TPoly parseTPoly(const json& j, const std::string& where) {
    TPoly p;
    if (j.is_object()) {
        if (j.size() != 1 || !j.contains("t"))
            schemaFail(where, "coefficient objects must be {\"t\": [c0, c1, ...]}");
        const json& arr = j.at("t");
        if (!arr.is_array() || arr.empty())
            schemaFail(where + ".t", "expected a nonempty coefficient array");
        for (std::size_t k = 0; k < arr.size(); ++k)
            p.c.push_back(parseComplexNumber(arr[k],
                                             where + ".t[" + std::to_string(k) + "]"));
    } else {
        p.c.push_back(parseComplexNumber(j, where));
    }
    while (p.c.size() > 1 && p.c.back() == cplx(0.0)) p.c.pop_back();
    return p;
}

std::vector<TPoly> parseCoeffList(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty())
        schemaFail(where, "expected a nonempty array of coefficients");
    std::vector<TPoly> out;
    out.reserve(j.size());
    for (std::size_t k = 0; k < j.size(); ++k)
        out.push_back(parseTPoly(j[k], where + "[" + std::to_string(k) + "]"));
    return out;
}

bool allZero(const std::vector<TPoly>& c) {
    for (const TPoly& p : c)
        for (cplx v : p.c)
            if (v != cplx(0.0)) return false;
    return true;
}

TRational parseEntry(const json& j, const std::string& where) {
    TRational r;
    if (j.is_object() && (j.contains("num") || j.contains("den"))) {
        for (const auto& item : j.items())
            if (item.key() != "num" && item.key() != "den")
                schemaFail(where, "unknown key '" + item.key() +
                                      "' in a rational entry");
        if (!j.contains("num"))
            schemaFail(where, "rational entries require 'num'");
        r.num = parseCoeffList(j.at("num"), where + ".num");
        if (j.contains("den"))
            r.den = parseCoeffList(j.at("den"), where + ".den");
        else
            r.den = {TPoly{{cplx(1.0)}}};
    } else {
        r.num = {parseTPoly(j, where)};
        r.den = {TPoly{{cplx(1.0)}}};
    }
    if (allZero(r.den)) schemaFail(where, "denominator is identically zero");
    return r;
}

TRationalMatrix parseMatrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty())
        schemaFail(where, "expected a nonempty array of matrix rows");
    const std::size_t n = j.size();
    TRationalMatrix m;
    m.n = n;
    m.e.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const json& row = j[i];
        if (!row.is_array() || row.size() != n)
            schemaFail(where, "matrix must be square (row " + std::to_string(i) +
                                  " has the wrong length)");
        for (std::size_t k = 0; k < n; ++k)
            m(i, k) = parseEntry(row[k], where + "[" + std::to_string(i) + "][" +
                                             std::to_string(k) + "]");
    }
    return m;
}

CMatrix parseConstMatrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty())
        schemaFail(where, "expected a nonempty array of matrix rows");
    const std::size_t n = j.size();
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const json& row = j[i];
        if (!row.is_array() || row.size() != n)
            schemaFail(where, "matrix must be square (row " + std::to_string(i) +
                                  " has the wrong length)");
        for (std::size_t k = 0; k < n; ++k)
            m(i, k) = parseComplexNumber(row[k], where + "[" + std::to_string(i) +
                                                     "][" + std::to_string(k) +
                                                     "]");
    }
    return m;
}

double parseNumber(const json& j, const std::string& where) {
    if (!j.is_number()) schemaFail(where, "expected a number");
    return j.get<double>();
}

void checkKeys(const json& j, const std::set<std::string>& allowed,
               const std::string& where) {
    for (const auto& item : j.items())
        if (allowed.find(item.key()) == allowed.end())
            schemaFail(where, "unknown key '" + item.key() + "'");
}

} // namespace

cplx TPoly::eval(cplx t) const {
    cplx v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * t + c[k];
    return v;
}

bool TRational::dependsOnT() const {
    for (const TPoly& p : num)
        if (p.dependsOnT()) return true;
    for (const TPoly& p : den)
        if (p.dependsOnT()) return true;
    return false;
}

CRationalFunction TRational::at(cplx t) const {
    std::vector<cplx> n, d;
    n.reserve(num.size());
    d.reserve(den.size());
    for (const TPoly& p : num) n.push_back(p.eval(t));
    for (const TPoly& p : den) d.push_back(p.eval(t));
    return CRationalFunction(CPolynomial(std::move(n)), CPolynomial(std::move(d)));
}

bool TRationalMatrix::dependsOnT() const {
    for (const TRational& r : e)
        if (r.dependsOnT()) return true;
    return false;
}

RationalMatrix TRationalMatrix::at(cplx t) const {
    RationalMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = (*this)(i, j).at(t);
    return m;
}

SystemDescription parse_description(const std::string& jsonText,
                                    const std::string& path) {
    json j;
    try {
        j = json::parse(jsonText);
    } catch (const json::parse_error& e) {
        schemaFail(path, std::string("JSON parse error: ") + e.what());
    }
    if (!j.is_object()) schemaFail(path, "top level must be a JSON object");

    SystemDescription d;
    d.path = path;

    if (!j.contains("schema") || !j["schema"].is_string() ||
        j["schema"].get<std::string>() != "qbirkhoff-system/1")
        schemaFail(path,
                   "missing or unsupported 'schema' (expected \"qbirkhoff-system/1\")");

    if (j.contains("kind")) {
        if (!j["kind"].is_string()) schemaFail(path + ".kind", "expected a string");
        d.kind = j["kind"].get<std::string>();
    }
    if (d.kind != "system" && d.kind != "deformation" &&
        d.kind != "jimbo-sakai" && d.kind != "confluence")
        schemaFail(path + ".kind",
                   "must be one of system, deformation, jimbo-sakai, confluence");

    static const std::set<std::string> common = {
        "schema", "name", "kind", "q0", "eps", "t", "seed", "probes", "tolerance"};
    std::set<std::string> allowed = common;
    if (d.kind == "system" || d.kind == "deformation") {
        allowed.insert("form");
        allowed.insert("R");
        allowed.insert("A");
    } else if (d.kind == "jimbo-sakai") {
        allowed.insert("calA0");
        allowed.insert("calA1");
        allowed.insert("calAt");
    } else {
        allowed.insert("variant");
        allowed.insert("calA");
        allowed.insert("R0");
        allowed.insert("R1");
        allowed.insert("Rt");
        allowed.insert("eps-grid");
    }
    checkKeys(j, allowed, path);

    if (j.contains("name")) {
        if (!j["name"].is_string()) schemaFail(path + ".name", "expected a string");
        d.name = j["name"].get<std::string>();
    }
    if (!j.contains("q0")) schemaFail(path, "'q0' is required");
    d.q0 = parseComplexNumber(j["q0"], path + ".q0");
    if (j.contains("eps")) {
        d.eps = parseNumber(j["eps"], path + ".eps");
        if (!(d.eps > 0.0)) schemaFail(path + ".eps", "must be positive");
    }
    if (j.contains("t")) {
        d.t = parseComplexNumber(j["t"], path + ".t");
        d.hasT = true;
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            schemaFail(path + ".seed", "expected a nonnegative integer");
        d.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("probes")) {
        if (!j["probes"].is_number_integer())
            schemaFail(path + ".probes", "expected an integer");
        const long long v = j["probes"].get<long long>();
        if (v < 1 || v > 1000000)
            schemaFail(path + ".probes", "must be between 1 and 1000000");
        d.probes = static_cast<int>(v);
    }
    if (j.contains("tolerance")) {
        d.tolerance = parseNumber(j["tolerance"], path + ".tolerance");
        if (!(d.tolerance > 0.0 && d.tolerance <= 1e-2))
            schemaFail(path + ".tolerance", "must lie in (0, 1e-2]");
    }

    if (d.kind == "system" || d.kind == "deformation") {
        if (j.contains("form")) {
            if (!j["form"].is_string()) schemaFail(path + ".form", "expected a string");
            d.form = j["form"].get<std::string>();
            if (d.form != "sigma-q" && d.form != "sigma-p")
                schemaFail(path + ".form", "must be sigma-q or sigma-p");
        }
        if (!j.contains("A")) schemaFail(path, "'A' is required for kind=" + d.kind);
        d.A = parseMatrix(j["A"], path + ".A");
        if (j.contains("R"))
            d.R = parseEntry(j["R"], path + ".R");
        else
            d.R = TRational{{TPoly{{cplx(1.0)}}}, {TPoly{{cplx(1.0)}}}};
        if (d.kind == "deformation" && !d.hasT)
            schemaFail(path, "'t' is required for kind=deformation");
        if (d.kind == "system" && (d.R.dependsOnT() || d.A.dependsOnT()))
            schemaFail(path, "t-dependent coefficients require kind=deformation");
    } else if (d.kind == "jimbo-sakai") {
        for (const char* key : {"calA0", "calA1", "calAt"})
            if (!j.contains(key))
                schemaFail(path, std::string("'") + key +
                                     "' is required for kind=jimbo-sakai");
        d.calA0 = parseConstMatrix(j["calA0"], path + ".calA0");
        d.calA1 = parseConstMatrix(j["calA1"], path + ".calA1");
        d.calAt = parseConstMatrix(j["calAt"], path + ".calAt");
        if (d.calA0.rows() != 2 || d.calA1.rows() != 2 || d.calAt.rows() != 2)
            schemaFail(path, "jimbo-sakai residue matrices must be 2x2");
        if (!d.hasT) schemaFail(path, "'t' is required for kind=jimbo-sakai");
    } else { // confluence
        if (!j.contains("variant") || !j["variant"].is_string())
            schemaFail(path, "'variant' (delta or fuchsian) is required for kind=confluence");
        d.variant = j["variant"].get<std::string>();
        if (d.variant == "delta") {
            if (!j.contains("calA"))
                schemaFail(path, "'calA' is required for variant=delta");
            d.calA = parseMatrix(j["calA"], path + ".calA");
            if (d.calA.dependsOnT())
                schemaFail(path + ".calA",
                           "must not depend on t (confluence families are indexed by eps)");
        } else if (d.variant == "fuchsian") {
            for (const char* key : {"R0", "R1", "Rt"})
                if (!j.contains(key))
                    schemaFail(path, std::string("'") + key +
                                         "' is required for variant=fuchsian");
            d.R0 = parseConstMatrix(j["R0"], path + ".R0");
            d.R1 = parseConstMatrix(j["R1"], path + ".R1");
            d.Rt = parseConstMatrix(j["Rt"], path + ".Rt");
            if (!d.R0.sameShape(d.R1) || !d.R0.sameShape(d.Rt))
                schemaFail(path, "R0, R1, Rt must share one square shape");
            if (!d.hasT) schemaFail(path, "'t' is required for variant=fuchsian");
        } else {
            schemaFail(path + ".variant", "must be delta or fuchsian");
        }
        if (j.contains("eps-grid")) {
            const json& g = j["eps-grid"];
            if (!g.is_array() || g.empty())
                schemaFail(path + ".eps-grid", "expected a nonempty array");
            for (std::size_t k = 0; k < g.size(); ++k) {
                double v = parseNumber(g[k], path + ".eps-grid[" + std::to_string(k) + "]");
                if (!(v > 0.0)) schemaFail(path + ".eps-grid", "entries must be positive");
                d.epsGrid.push_back(v);
            }
        }
    }
    return d;
}

SystemDescription load_description(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::SchemaError, path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_description(buf.str(), path);
}

QContext context_of(const SystemDescription& d) { return QContext(d.q0, d.eps); }

namespace {

RationalQSystem buildAt(const SystemDescription& d, cplx t) {
    QContext ctx = context_of(d);
    CRationalFunction R = d.R.at(t);
    RationalMatrix A = d.A.at(t);
    if (d.form == "sigma-p") return RationalQSystem::fromSigmaP(ctx, R, A);
    return RationalQSystem(ctx, R, A);
}

} // namespace

RationalQSystem instantiate_system(const SystemDescription& d) {
    if (d.kind == "system") return buildAt(d, 0.0);
    if (d.kind == "deformation") return buildAt(d, d.t);
    fail(ErrorCode::SchemaError,
         d.path + ": kind '" + d.kind + "' does not define a single system");
}

RationalQSystem instantiate_system_at(const SystemDescription& d, cplx t) {
    if (d.kind != "deformation")
        fail(ErrorCode::SchemaError,
             d.path + ": a concrete t requires kind=deformation");
    return buildAt(d, t);
}

std::function<RationalQSystem(cplx)> family_builder(const SystemDescription& d) {
    if (d.kind != "deformation")
        fail(ErrorCode::SchemaError,
             d.path + ": family_builder requires kind=deformation");
    SystemDescription copy = d;
    return [copy](cplx t) { return buildAt(copy, t); };
}

ConfluenceFamily instantiate_confluence(const SystemDescription& d) {
    if (d.kind != "confluence")
        fail(ErrorCode::SchemaError, d.path + ": kind must be confluence");
    if (d.q0.imag() != 0.0 || d.q0.real() <= 1.0)
        fail(ErrorCode::SchemaError,
             d.path + ": confluence requires a real q0 > 1");
    if (d.variant == "delta")
        return make_confluence_delta(d.q0.real(), d.calA.at(0.0));
    return make_confluence_fuchsian(d.q0.real(), d.R0, d.R1, d.Rt, d.t);
}

JimboSakaiInstance instantiate_jimbo_sakai(const SystemDescription& d,
                                           double tol) {
    if (d.kind != "jimbo-sakai")
        fail(ErrorCode::SchemaError, d.path + ": kind must be jimbo-sakai");
    return build_jimbo_sakai(context_of(d), d.calA0, d.calA1, d.calAt, d.t, tol);
}

} // namespace qb
