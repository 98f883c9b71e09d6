#pragma once

// Config loading, CSV tables and gnuplot scripts. Units at this boundary are
// millimetres for lengths and diopters (1/m) for curvatures; everything
// handed to the library is SI.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "palcurv/compatibility.hpp"
#include "palcurv/curvature_lines.hpp"
#include "palcurv/error.hpp"
#include "palcurv/surface.hpp"

namespace palcurv::io {

inline constexpr double kMm = 1e-3;

struct FunctionalConfig {
    double H_target_D = 0.0;
    double alpha = 1.0;
    double beta = 1.0;
    std::size_t nx = 40, ny = 40;
};

struct RunConfig {
    SurfacePatch surface{shapes::Paraboloid{1.0}, Domain(-1, 1, -1, 1)};
    bool angular_chart = false;     // chart coordinates in radians instead of mm
    std::vector<Vec2> seeds;        // chart coordinates, SI
    std::size_t nx = 41, ny = 41;
    std::optional<Branch> branch;   // empty: both branches
    double step_mm = 0.05;
    double ds_mm = 0.1;
    double max_len_mm = 200.0;
    double umbilic_tol_D = kDefaultUmbilicTol;
    double kg_thresh = 1e-3;
    FunctionalConfig functional;

    TraceOptions trace_options() const {
        TraceOptions t;
        t.step = step_mm * kMm;
        t.max_length = max_len_mm * kMm;
        t.umbilic_tol = umbilic_tol_D;
        return t;
    }

    CompatibilityOptions compat_options() const {
        CompatibilityOptions o;
        o.ds = ds_mm * kMm;
        o.step = step_mm * kMm;
        o.kg_threshold = kg_thresh;
        o.umbilic_tol = umbilic_tol_D;
        return o;
    }

    std::vector<Branch> branches() const {
        if (branch) return {*branch};
        return {Branch::k_max, Branch::k_min};
    }

    // Chart coordinate to the unit used in files.
    double chart_out(double x) const { return angular_chart ? x : x / kMm; }
};

namespace detail {

using nlohmann::json;

inline const json& need(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError("missing field '" + std::string(key) + "' in " + where);
    return j.at(key);
}

inline double num(const json& j, const char* key, const std::string& where) {
    const json& v = need(j, key, where);
    if (!v.is_number()) throw ConfigError("field '" + std::string(key) + "' in " + where + " must be a number");
    return v.get<double>();
}

inline double num_or(const json& j, const char* key, double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigError("field '" + std::string(key) + "' must be a number");
    return j.at(key).get<double>();
}

inline std::pair<double, double> range(const json& d, const char* key) {
    const json& v = need(d, key, "domain");
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError("domain." + std::string(key) + " must be [min, max]");
    return {v[0].get<double>(), v[1].get<double>()};
}

inline Shape parse_shape(const std::string& kind, const json& p, bool& angular) {
    angular = false;
    if (kind == "pal_model") {
        PalParams q;
        q.k0 = num(p, "k0_D", "params");
        q.kA = num(p, "kA_D", "params");
        q.L = num(p, "L_mm", "params") * kMm;
        if (!(q.L > 0)) throw ConfigError("params.L_mm must be positive");
        return shapes::PalModel{q};
    }
    if (kind == "height_field_polynomial") {
        const json& c = need(p, "coeffs", "params");
        if (!c.is_array()) throw ConfigError("params.coeffs must be a list of {i, j, c}");
        shapes::PolynomialHeight h;
        for (const auto& t : c) {
            Monomial m;
            m.i = static_cast<int>(num(t, "i", "coeffs entry"));
            m.j = static_cast<int>(num(t, "j", "coeffs entry"));
            if (m.i < 0 || m.j < 0) throw ConfigError("coeffs exponents must be nonnegative");
            // z_mm = sum c x_mm^i y_mm^j
            m.c = num(t, "c", "coeffs entry") * std::pow(1e3, m.i + m.j - 1);
            h.terms.push_back(m);
        }
        return h;
    }
    if (kind == "paraboloid") {
        const double r = num(p, "radius_mm", "params") * kMm;
        if (!(r != 0.0)) throw ConfigError("params.radius_mm must be nonzero");
        return shapes::Paraboloid{r};
    }
    angular = true;
    if (kind == "sphere") {
        const double r = num(p, "radius_mm", "params") * kMm;
        if (!(r > 0)) throw ConfigError("params.radius_mm must be positive");
        return shapes::Sphere{r};
    }
    if (kind == "torus") {
        const double R = num(p, "R_mm", "params") * kMm, r = num(p, "r_mm", "params") * kMm;
        if (!(r > 0) || !(R > r)) throw ConfigError("torus needs R_mm > r_mm > 0");
        return shapes::Torus{R, r};
    }
    if (kind == "ellipsoid") {
        const double a = num(p, "a_mm", "params") * kMm, b = num(p, "b_mm", "params") * kMm,
                     c = num(p, "c_mm", "params") * kMm;
        if (!(a > 0 && b > 0 && c > 0)) throw ConfigError("ellipsoid semi-axes must be positive");
        return shapes::Ellipsoid{a, b, c};
    }
    throw ConfigError("unknown surface kind '" + kind + "'");
}

}  // namespace detail

inline Branch parse_branch(const std::string& s) {
    if (s == "k_max") return Branch::k_max;
    if (s == "k_min") return Branch::k_min;
    throw ConfigError("branch must be k_max, k_min or both (got '" + s + "')");
}

inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::num_or;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    const auto& kind_j = detail::need(j, "kind", "config");
    if (!kind_j.is_string()) throw ConfigError("kind must be a string");
    const std::string kind = kind_j.get<std::string>();
    const Shape shape = detail::parse_shape(kind, detail::need(j, "params", "config"), c.angular_chart);

    const auto& d = detail::need(j, "domain", "config");
    const char* ku = c.angular_chart ? "u_rad" : "x_mm";
    const char* kv = c.angular_chart ? "v_rad" : "y_mm";
    const double scale = c.angular_chart ? 1.0 : kMm;
    auto [u0, u1] = detail::range(d, ku);
    auto [v0, v1] = detail::range(d, kv);
    try {
        c.surface = SurfacePatch{shape, Domain(u0 * scale, u1 * scale, v0 * scale, v1 * scale)};
    } catch (const Error& e) {
        throw ConfigError(std::string("bad domain: ") + e.what());
    }

    if (j.contains("seeds")) {
        const auto& s = j.at("seeds");
        if (!s.is_array()) throw ConfigError("seeds must be a list of [u, v] pairs");
        for (const auto& p : s) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                throw ConfigError("each seed must be [u, v]");
            const Vec2 q(p[0].get<double>() * scale, p[1].get<double>() * scale);
            if (!c.surface.domain.contains(q.x(), q.y()))
                throw ConfigError("seed (" + std::to_string(p[0].get<double>()) + ", " +
                                  std::to_string(p[1].get<double>()) + ") lies outside the domain");
            c.seeds.push_back(q);
        }
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        const double nx = num_or(g, "nx", 41), ny = num_or(g, "ny", 41);
        if (nx < 2 || ny < 2) throw ConfigError("grid.nx and grid.ny must be >= 2");
        c.nx = static_cast<std::size_t>(nx);
        c.ny = static_cast<std::size_t>(ny);
    }
    if (j.contains("branch")) {
        if (!j.at("branch").is_string()) throw ConfigError("branch must be a string");
        const std::string b = j.at("branch").get<std::string>();
        if (b != "both") c.branch = parse_branch(b);
    }
    if (j.contains("trace")) {
        const auto& t = j.at("trace");
        c.step_mm = num_or(t, "step_mm", c.step_mm);
        c.ds_mm = num_or(t, "ds_mm", c.ds_mm);
        c.max_len_mm = num_or(t, "max_len_mm", c.max_len_mm);
        c.umbilic_tol_D = num_or(t, "umbilic_tol_D", c.umbilic_tol_D);
        c.kg_thresh = num_or(t, "kg_thresh", c.kg_thresh);
    }
    if (j.contains("functional")) {
        const auto& f = j.at("functional");
        c.functional.H_target_D = num_or(f, "H_target_D", 0.0);
        c.functional.alpha = num_or(f, "alpha", 1.0);
        c.functional.beta = num_or(f, "beta", 1.0);
        c.functional.nx = static_cast<std::size_t>(num_or(f, "nx", 40));
        c.functional.ny = static_cast<std::size_t>(num_or(f, "ny", 40));
    }
    if (!(c.step_mm > 0) || !(c.ds_mm > 0) || !(c.max_len_mm > 0)) throw ConfigError("trace lengths must be positive");
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

// Numeric table; integer columns are written without exponent.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<bool> integer_column;

    void add_row(std::vector<double> r) {
        if (r.size() != header.size()) throw InvalidArgument("csv row width does not match header");
        rows.push_back(std::move(r));
    }
};

inline std::string format_value(double x, bool integer) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    if (integer) std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(x));
    else std::snprintf(buf, sizeof buf, "%.9e", x);
    return buf;
}

inline std::string to_csv(const CsvTable& t) {
    std::string out;
    for (std::size_t c = 0; c < t.header.size(); ++c) out += (c ? "," : "") + t.header[c];
    out += '\n';
    for (const auto& r : t.rows) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            const bool integer = c < t.integer_column.size() && t.integer_column[c];
            out += (c ? "," : "") + format_value(r[c], integer);
        }
        out += '\n';
    }
    return out;
}

inline CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("empty csv");
    {
        std::istringstream h(line);
        std::string cell;
        while (std::getline(h, cell, ',')) t.header.push_back(cell);
    }
    t.integer_column.assign(t.header.size(), true);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream r(line);
        std::string cell;
        while (std::getline(r, cell, ',')) {
            const std::size_t c = row.size();
            if (c >= t.header.size()) throw InvalidArgument("csv line " + std::to_string(lineno) + " too wide");
            if (cell == "nan") {
                row.push_back(std::nan(""));
                t.integer_column[c] = false;
                continue;
            }
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw InvalidArgument("csv line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
            if (used != cell.size()) throw InvalidArgument("csv line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            if (cell.find_first_of(".eE") != std::string::npos) t.integer_column[c] = false;
            row.push_back(v);
        }
        if (row.size() != t.header.size()) throw InvalidArgument("csv line " + std::to_string(lineno) + " has wrong width");
        t.rows.push_back(std::move(row));
    }
    if (t.rows.empty()) t.integer_column.assign(t.header.size(), false);
    return t;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

inline CsvTable map_table(const RunConfig& c, const CurvatureGrid& g) {
    CsvTable t;
    t.header = {c.angular_chart ? "u_rad" : "x_mm", c.angular_chart ? "v_rad" : "y_mm", "k1_D", "k2_D", "H_D", "C_D",
                "umbilic"};
    t.integer_column = {false, false, false, false, false, false, true};
    for (std::size_t iy = 0; iy < g.ny; ++iy)
        for (std::size_t ix = 0; ix < g.nx; ++ix) {
            const auto& d = g.at(ix, iy);
            t.add_row({c.chart_out(g.u[ix]), c.chart_out(g.v[iy]), d.k1, d.k2, d.H, d.C, d.umbilic ? 1.0 : 0.0});
        }
    return t;
}

inline CsvTable line_table(const RunConfig& c, const CurvatureLine& line) {
    CsvTable t;
    t.header = {"s_mm", "u", "v", "x_mm", "y_mm", "z_mm", "tx", "ty", "tz", "kn_D"};
    t.integer_column.assign(t.header.size(), false);
    for (const auto& p : line.samples)
        t.add_row({p.s / kMm, c.chart_out(p.u), c.chart_out(p.v), p.r.x() / kMm, p.r.y() / kMm, p.r.z() / kMm, p.t.x(),
                   p.t.y(), p.t.z(), p.k_n});
    return t;
}

inline CsvTable report_table(const std::vector<CompatibilityReport>& rep) {
    CsvTable t;
    t.header = {"s_mm",     "x_mm",     "y_mm",          "C_direct_D",         "C_eq7_D",
                "C_eq8_D",  "dCds_direct_D_per_mm",      "dCds_eq9_D_per_mm", "dCds_minkwitz_D_per_mm",
                "kg_per_m", "degenerate"};
    t.integer_column.assign(t.header.size(), false);
    t.integer_column.back() = true;
    for (const auto& r : rep)
        t.add_row({r.s / kMm, r.r.x() / kMm, r.r.y() / kMm, r.C_direct, r.C_eq7, r.C_eq8 ? *r.C_eq8 : std::nan(""),
                   r.dC_ds_direct * kMm, r.dC_ds_eq9 * kMm, r.dC_ds_minkwitz * kMm, r.kg_used,
                   r.degenerate ? 1.0 : 0.0});
    return t;
}

// Exact vs classical derivative of the cylinder; the classical value is
// compared in magnitude, so both are written unsigned.
inline CsvTable minkwitz_table(const std::vector<CompatibilityReport>& rep) {
    CsvTable t;
    t.header = {"s_mm", "x_mm", "y_mm", "C_direct_D", "abs_dCds_exact_D_per_mm", "abs_dCds_minkwitz_D_per_mm",
                "abs_dCds_direct_D_per_mm", "low_confidence"};
    t.integer_column.assign(t.header.size(), false);
    t.integer_column.back() = true;
    for (const auto& r : rep)
        t.add_row({r.s / kMm, r.r.x() / kMm, r.r.y() / kMm, r.C_direct, std::abs(r.dC_ds_eq9) * kMm,
                   std::abs(r.dC_ds_minkwitz) * kMm, std::abs(r.dC_ds_direct) * kMm, r.low_confidence ? 1.0 : 0.0});
    return t;
}

// ---------------------------------------------------------------------------
// gnuplot scripts
// ---------------------------------------------------------------------------

inline std::string gnuplot_map(const std::string& csv, bool angular) {
    const std::string xl = angular ? "u (rad)" : "x (mm)", yl = angular ? "v (rad)" : "y (mm)";
    std::string s;
    s += "set datafile separator ','\n";
    s += "set terminal pngcairo size 1200,1000\n";
    s += "set output 'map.png'\n";
    s += "set multiplot layout 2,2\n";
    s += "set xlabel '" + xl + "'\nset ylabel '" + yl + "'\nset size ratio -1\n";
    const char* cols[][2] = {{"3", "k_max (D)"}, {"4", "k_min (D)"}, {"5", "mean curvature (D)"}, {"6", "cylinder (D)"}};
    for (auto& c : cols)
        s += "set title '" + std::string(c[1]) + "'\nplot '" + csv + "' every ::1 using 1:2:" + c[0] +
             " with image notitle\n";
    s += "unset multiplot\n";
    return s;
}

inline std::string gnuplot_net(const std::vector<std::string>& files, bool angular) {
    std::string s;
    s += "set datafile separator ','\n";
    s += "set terminal pngcairo size 900,900\n";
    s += "set output 'net.png'\n";
    s += std::string("set xlabel '") + (angular ? "u (rad)" : "x (mm)") + "'\n";
    s += std::string("set ylabel '") + (angular ? "v (rad)" : "y (mm)") + "'\n";
    s += "set size ratio -1\n";
    s += "plot \\\n";
    for (std::size_t i = 0; i < files.size(); ++i) {
        s += "  '" + files[i] + "' every ::1 using 2:3 with lines lc rgb '#228b22' notitle";
        s += i + 1 < files.size() ? ", \\\n" : "\n";
    }
    return s;
}

inline std::string gnuplot_verify(const std::vector<std::string>& files) {
    std::string s;
    s += "set datafile separator ','\n";
    s += "set terminal pngcairo size 1200,1000\n";
    s += "set output 'verify.png'\n";
    s += "set multiplot layout 2,2\n";
    s += "set xlabel 's (mm)'\n";
    const char* panels[][2] = {{"10", "geodesic curvature (1/m)"},
                               {"4", "cylinder, direct (D)"},
                               {"5", "cylinder from kg (D)"},
                               {"8", "dC/ds (D/mm)"}};
    for (auto& p : panels) {
        s += "set title '" + std::string(p[1]) + "'\nplot ";
        for (std::size_t i = 0; i < files.size(); ++i) {
            s += "'" + files[i] + "' every ::1 using 1:" + p[0] + " with lines title '" + files[i] + "'";
            s += i + 1 < files.size() ? ", " : "\n";
        }
    }
    s += "unset multiplot\n";
    return s;
}

inline std::string gnuplot_minkwitz(const std::vector<std::string>& files) {
    std::string s;
    s += "set datafile separator ','\n";
    s += "set terminal pngcairo size 900,700\n";
    s += "set output 'minkwitz.png'\n";
    s += "set xlabel 's (mm)'\nset ylabel '|dC/ds| (D/mm)'\n";
    s += "plot ";
    for (std::size_t i = 0; i < files.size(); ++i) {
        s += "'" + files[i] + "' every ::1 using 1:5 with lines dt 1 title 'exact " + files[i] + "', ";
        s += "'" + files[i] + "' every ::1 using 1:6 with lines dt 2 title 'Minkwitz " + files[i] + "'";
        s += i + 1 < files.size() ? ", " : "\n";
    }
    return s;
}

}  // namespace palcurv::io
