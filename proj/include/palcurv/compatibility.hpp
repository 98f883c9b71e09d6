#pragma once

// Exact compatibility relations between cylinder, principal curvatures and
// geodesic curvature along lines of curvature, with the classical Minkwitz
// and Alonso approximations for comparison.
//
// Notation used throughout: B is the base line (branch b), O an orthogonal
// line of the other branch o through a base sample. O is oriented so that
// t_O = n x t_B. With that orientation
//
//   C = (dk_b/ds_O) / kg_B        ("via base kg")
//   C = (dk_o/ds_B) / kg_O        ("via orthogonal kg")
//
// hold up to a common sign, and differentiating the first along B gives
//
//   dC/ds_B = ( d/ds_B (dk_b/ds_O) - C dkg_B/ds_B ) / kg_B.
//
// The second pairing differentiates just as well, and is the one used where
// |kg_O| > |kg_B| (e.g. torus meridians, where kg_B = 0):
//
//   dC/ds_B = ( d^2 k_o/ds_B^2 - C dkg_O/ds_B ) / kg_O.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "palcurv/curvature_lines.hpp"
#include "palcurv/error.hpp"
#include "palcurv/numerics.hpp"
#include "palcurv/surface.hpp"

namespace palcurv {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CompatibilityOptions {
    double ds = 0.1e-3;            // arc-length resampling step (m)
    double step = 0.05e-3;         // RK4 step for orthogonal lines (m)
    double kg_threshold = 1e-3;    // |kg| below this switches to the L'Hopital form (1/m)
    double dkg_tol = 1e-6;         // |dkg/ds| below this leaves the L'Hopital form unresolved (1/m^2)
    double umbilic_tol = kDefaultUmbilicTol;
    int orth_half_samples = 4;     // orthogonal line extent on each side, in ds
    double match_tol = 1e-6;       // intersection matching of two lines (m)
};

// ---------------------------------------------------------------------------
// Geodesic curvature
// ---------------------------------------------------------------------------

enum class GeodesicMethod { vector_formula, orthogonal_chart };

struct GeodesicSample {
    double s = 0;
    double kg = 0;
    GeodesicMethod method = GeodesicMethod::vector_formula;
    bool low_confidence = false;
};

namespace detail {

inline double uniform_spacing(const CurvatureLine& line) {
    if (line.samples.size() < 2) throw InvalidArgument("line has fewer than 2 samples");
    const double h = line.samples[1].s - line.samples[0].s;
    bool uniform = h > 0.0;
    for (std::size_t i = 1; uniform && i < line.samples.size(); ++i)
        uniform = std::abs(line.samples[i].s - line.samples[i - 1].s - h) <= 1e-9 * h;
    if (!uniform) throw InvalidArgument("line is not uniformly sampled in arc length; resample it first");
    return h;
}

inline std::vector<double> component(const CurvatureLine& line, int axis) {
    std::vector<double> out;
    out.reserve(line.samples.size());
    for (const auto& p : line.samples) out.push_back(p.r[axis]);
    return out;
}

inline double kg_vector_at(const CurvatureLine& line, std::size_t i, double h) {
    Vec3 d1, d2;
    for (int a = 0; a < 3; ++a) {
        const auto c = component(line, a);
        d1[a] = numerics::fd_at(c, i, h, 1);
        d2[a] = numerics::fd_at(c, i, h, 2);
    }
    return line.samples[i].n.cross(d1).dot(d2);
}

}  // namespace detail

// kg = (n x P') . P'' with P', P'' by finite differences along a uniformly
// resampled line.
inline std::vector<GeodesicSample> geodesic_curvature_vector(const CurvatureLine& line) {
    const std::size_t n = line.samples.size();
    if (n < 5) throw InvalidArgument("geodesic_curvature_vector: need at least 5 samples");
    const double h = detail::uniform_spacing(line);
    std::array<std::vector<double>, 3> d1, d2;
    for (int a = 0; a < 3; ++a) {
        const auto c = detail::component(line, a);
        d1[static_cast<std::size_t>(a)] = numerics::fd_derivative(c, h, 1, 4);
        d2[static_cast<std::size_t>(a)] = numerics::fd_derivative(c, h, 2, 4);
    }
    std::vector<GeodesicSample> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 p1(d1[0][i], d1[1][i], d1[2][i]);
        const Vec3 p2(d2[0][i], d2[1][i], d2[2][i]);
        out[i].s = line.samples[i].s;
        out[i].kg = line.samples[i].n.cross(p1).dot(p2);
        out[i].low_confidence = i < 2 || i + 2 >= n;
    }
    return out;
}

// First and second fundamental form coefficients and their chart partials.
struct FormPartials {
    FundamentalForms f, du, dv;
};

inline FormPartials form_partials(const SurfacePatch& s, double u, double v) {
    const double hu = 1e-3 * s.domain.u_span();
    const double hv = 1e-3 * s.domain.v_span();
    auto forms = [&](double uu, double vv) { return fundamental_forms(surface_jet(s, uu, vv)); };
    auto diff = [](const FundamentalForms& m2, const FundamentalForms& m1, const FundamentalForms& p1,
                   const FundamentalForms& p2, double h) {
        auto d = [h](double a, double b, double c, double e) { return (a - 8 * b + 8 * c - e) / (12 * h); };
        FundamentalForms r;
        r.E = d(m2.E, m1.E, p1.E, p2.E);
        r.F = d(m2.F, m1.F, p1.F, p2.F);
        r.G = d(m2.G, m1.G, p1.G, p2.G);
        r.L_ = d(m2.L_, m1.L_, p1.L_, p2.L_);
        r.M_ = d(m2.M_, m1.M_, p1.M_, p2.M_);
        r.N_ = d(m2.N_, m1.N_, p1.N_, p2.N_);
        return r;
    };
    FormPartials p;
    p.f = forms(u, v);
    p.du = diff(forms(u - 2 * hu, v), forms(u - hu, v), forms(u + hu, v), forms(u + 2 * hu, v), hu);
    p.dv = diff(forms(u, v - 2 * hv), forms(u, v - hv), forms(u, v + hv), forms(u, v + 2 * hv), hv);
    return p;
}

namespace detail {

inline void require_orthogonal(const FundamentalForms& f, const char* who) {
    if (std::abs(f.F) > 1e-10 * std::sqrt(f.E * f.G))
        throw InvalidArgument(std::string(who) + ": chart is not orthogonal (F != 0)");
}

}  // namespace detail

struct ChartGeodesic {
    double kg_u_cte = 0;  // curve u = const (runs along v)
    double kg_v_cte = 0;  // curve v = const (runs along u)
};

// Geodesic curvature of the coordinate curves of an orthogonal chart:
// (kg)_{u=c} = G_u / (2 G sqrt(E)),  (kg)_{v=c} = -E_v / (2 E sqrt(G)).
inline ChartGeodesic geodesic_curvature_chart(const SurfacePatch& s, double u, double v) {
    const FormPartials p = form_partials(s, u, v);
    detail::require_orthogonal(p.f, "geodesic_curvature_chart");
    ChartGeodesic g;
    g.kg_u_cte = p.du.G / (2 * p.f.G * std::sqrt(p.f.E));
    g.kg_v_cte = -p.dv.E / (2 * p.f.E * std::sqrt(p.f.G));
    return g;
}

// ---------------------------------------------------------------------------
// Codazzi-Mainardi residuals
// ---------------------------------------------------------------------------

struct CodazziResidual {
    double res1 = 0;  // L_v - M_u - (...);  reduces to L_v - E_v H when M = 0
    double res2 = 0;  // N_u - M_v - (...);  reduces to N_u - G_u H when M = 0
    bool curvature_line_chart = false;
    // Only when the chart follows lines of curvature (M = 0), with the signed
    // C = L/E - N/G:  C G_u - 2 G (N/G)_u  and  C E_v + 2 E (L/E)_v.
    double res3a = 0;
    double res3b = 0;
};

// Residuals of the Codazzi equations in an orthogonal chart (F = 0).
inline CodazziResidual codazzi_residual(const SurfacePatch& s, double u, double v) {
    const FormPartials p = form_partials(s, u, v);
    const auto& f = p.f;
    detail::require_orthogonal(f, "codazzi_residual");
    const double E = f.E, G = f.G, L = f.L_, M = f.M_, N = f.N_;
    const double Eu = p.du.E, Ev = p.dv.E, Gu = p.du.G, Gv = p.dv.G;

    CodazziResidual r;
    r.res1 = p.dv.L_ - p.du.M_ - (L * Ev / (2 * E) + M * (Gu / (2 * G) - Eu / (2 * E)) + N * Ev / (2 * G));
    r.res2 = p.du.N_ - p.dv.M_ - (L * Gu / (2 * E) - M * (Gv / (2 * G) - Ev / (2 * E)) + N * Gu / (2 * G));

    const double scale = std::abs(L) + std::abs(N) + 1e-300;
    r.curvature_line_chart = std::abs(M) <= 1e-10 * scale;
    if (r.curvature_line_chart) {
        const double c_signed = L / E - N / G;
        const double d_kn_u = (p.du.N_ * G - N * Gu) / (G * G);  // (N/G)_u
        const double d_kn_v = (p.dv.L_ * E - L * Ev) / (E * E);  // (L/E)_v
        r.res3a = c_signed * Gu - 2 * G * d_kn_u;
        r.res3b = c_signed * Ev + 2 * E * d_kn_v;
    }
    return r;
}

// Codazzi residuals in an arbitrary chart through the Christoffel symbols;
// an identity on every smooth surface.
inline std::pair<double, double> codazzi_residual_general(const SurfacePatch& s, double u, double v) {
    const FormPartials p = form_partials(s, u, v);
    const auto& f = p.f;
    const double E = f.E, F = f.F, G = f.G, L = f.L_, M = f.M_, N = f.N_;
    const double Eu = p.du.E, Ev = p.dv.E, Fu = p.du.F, Fv = p.dv.F, Gu = p.du.G, Gv = p.dv.G;
    const double D = 2 * (E * G - F * F);
    const double g111 = (G * Eu - 2 * F * Fu + F * Ev) / D;
    const double g211 = (2 * E * Fu - E * Ev - F * Eu) / D;
    const double g112 = (G * Ev - F * Gu) / D;
    const double g212 = (E * Gu - F * Ev) / D;
    const double g122 = (2 * G * Fv - G * Gu - F * Gv) / D;
    const double g222 = (E * Gv - 2 * F * Fv + F * Gu) / D;
    const double r1 = p.dv.L_ - p.du.M_ - (L * g112 + M * (g212 - g111) - N * g211);
    const double r2 = p.dv.M_ - p.du.N_ - (L * g122 + M * (g222 - g112) - N * g212);
    return {r1, r2};
}

// ---------------------------------------------------------------------------
// Orthogonal crossings
// ---------------------------------------------------------------------------

struct OrthogonalCrossing {
    bool ok = false;
    CurvatureLine line;             // resampled orthogonal line; seed at the base sample
    double orientation = 1.0;       // +1 when the line's own tangent equals n x t_B
    double kg = kNaN;               // kg_O at the crossing (oriented)
    double dk_base_ds = kNaN;       // d k_b / d s_O (oriented)
    double dk_other_ds = kNaN;      // d k_o / d s_O (oriented)
};

namespace detail {

inline std::vector<CurvatureData> curvatures_along(const SurfacePatch& s, const CurvatureLine& line, double tol) {
    std::vector<CurvatureData> out;
    out.reserve(line.samples.size());
    for (const auto& p : line.samples) out.push_back(curvature_at(s, p.u, p.v, tol));
    return out;
}

inline std::vector<double> branch_series(const std::vector<CurvatureData>& c, Branch b) {
    std::vector<double> out;
    out.reserve(c.size());
    for (const auto& x : c) out.push_back(branch_curvature(x, b));
    return out;
}

// Central 5-point derivative when the +-2 neighbours are finite, 3-point
// when only +-1 are, NaN otherwise.
inline double fd_finite(std::span<const double> f, std::size_t i, double h, int order, bool* reduced = nullptr) {
    const std::size_t n = f.size();
    auto fin = [&](long k) { return k >= 0 && static_cast<std::size_t>(k) < n && std::isfinite(f[static_cast<std::size_t>(k)]); };
    const long c = static_cast<long>(i);
    if (fin(c - 2) && fin(c - 1) && fin(c) && fin(c + 1) && fin(c + 2)) {
        if (reduced) *reduced = false;
        return numerics::central_stencil(order, 4, h).apply(f, i);
    }
    if (fin(c - 1) && fin(c) && fin(c + 1)) {
        if (reduced) *reduced = true;
        return numerics::central_stencil(order, 2, h).apply(f, i);
    }
    return kNaN;
}

}  // namespace detail

// Traces the line of the other branch through base sample i and evaluates
// its geodesic curvature and principal-curvature slopes at the crossing.
inline OrthogonalCrossing orthogonal_crossing(const SurfacePatch& s, const CurvatureLine& base, std::size_t i,
                                              const CompatibilityOptions& o = {}) {
    OrthogonalCrossing x;
    const auto& p = base.samples.at(i);
    TraceOptions to;
    to.step = o.step;
    to.umbilic_tol = o.umbilic_tol;
    to.max_length = 2.0 * (o.orth_half_samples + 0.5) * o.ds;
    CurvatureLine raw;
    try {
        raw = trace_line(s, Vec2(p.u, p.v), other(base.branch), to);
        x.line = reparametrize_arclength(s, raw, o.ds, o.umbilic_tol);
    } catch (const Error&) {
        return x;
    }
    const std::size_t j = x.line.seed_index;
    if (j < 2 || j + 2 >= x.line.samples.size()) return x;

    const Vec3 want = p.n.cross(p.t);
    x.orientation = x.line.samples[j].t.dot(want) >= 0.0 ? 1.0 : -1.0;
    const auto curv = detail::curvatures_along(s, x.line, o.umbilic_tol);
    const auto kb = detail::branch_series(curv, base.branch);
    const auto ko = detail::branch_series(curv, other(base.branch));
    x.kg = x.orientation * detail::kg_vector_at(x.line, j, o.ds);
    x.dk_base_ds = x.orientation * numerics::fd_at(kb, j, o.ds, 1);
    x.dk_other_ds = x.orientation * numerics::fd_at(ko, j, o.ds, 1);
    x.ok = true;
    return x;
}

// ---------------------------------------------------------------------------
// Cylinder from two given crossing lines
// ---------------------------------------------------------------------------

struct CylinderResult {
    double via_base_kg = kNaN;   // (dk_b/ds_O) / kg_B, signed
    double via_orth_kg = kNaN;   // (dk_o/ds_B) / kg_O, signed
    double kg_base = kNaN;
    double kg_orth = kNaN;
    bool degenerate_base = true;  // |kg_B| below threshold
    bool degenerate_orth = true;

    bool degenerate() const { return degenerate_base && degenerate_orth; }

    // Unsigned cylinder from the first non-degenerate pairing.
    double value() const {
        if (!degenerate_base) return std::abs(via_base_kg);
        if (!degenerate_orth) return std::abs(via_orth_kg);
        return kNaN;
    }
};

namespace detail {

inline std::size_t nearest_sample(const CurvatureLine& line, const Vec3& r, double tol) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < line.samples.size(); ++i) {
        const double d = (line.samples[i].r - r).norm();
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    if (bd > tol) throw InvalidArgument("line does not pass through the point (nearest sample " + std::to_string(bd) + " m away)");
    return best;
}

}  // namespace detail

// Both pairings of the exact cylinder relation at the common point of a base
// line and an orthogonal line (both resampled by arc length).
inline CylinderResult cylinder_eq7(const SurfacePatch& s, const Vec2& point, const CurvatureLine& base,
                              const CurvatureLine& orth, const CompatibilityOptions& o = {}) {
    if (base.branch == orth.branch) throw InvalidArgument("cylinder_eq7: lines must belong to different branches");
    const SurfaceJet jet = surface_jet(s, point.x(), point.y());
    const std::size_t i = detail::nearest_sample(base, jet.r, o.match_tol);
    const std::size_t j = detail::nearest_sample(orth, jet.r, o.match_tol);
    const double hb = detail::uniform_spacing(base), ho = detail::uniform_spacing(orth);
    if (base.samples.size() < 5 || orth.samples.size() < 5) throw InvalidArgument("cylinder_eq7: lines too short");

    const auto& pb = base.samples[i];
    const double orient = orth.samples[j].t.dot(pb.n.cross(pb.t)) >= 0.0 ? 1.0 : -1.0;
    const auto cb = detail::curvatures_along(s, base, o.umbilic_tol);
    const auto co = detail::curvatures_along(s, orth, o.umbilic_tol);
    if (cb[i].umbilic) throw UmbilicError("cylinder_eq7: point is umbilic", cb[i].C);

    CylinderResult r;
    r.kg_base = detail::kg_vector_at(base, i, hb);
    r.kg_orth = orient * detail::kg_vector_at(orth, j, ho);
    const double dkb_dso = orient * numerics::fd_at(detail::branch_series(co, base.branch), j, ho, 1);
    const double dko_dsb = numerics::fd_at(detail::branch_series(cb, orth.branch), i, hb, 1);
    r.degenerate_base = std::abs(r.kg_base) < o.kg_threshold;
    r.degenerate_orth = std::abs(r.kg_orth) < o.kg_threshold;
    if (!r.degenerate_base) r.via_base_kg = dkb_dso / r.kg_base;
    if (!r.degenerate_orth) r.via_orth_kg = dko_dsb / r.kg_orth;
    return r;
}

// ---------------------------------------------------------------------------
// L'Hopital form at geodesic points
// ---------------------------------------------------------------------------

// Along line A at sample i: C = (d^2 k_o / ds_A^2) / (d kg_O / ds_A), with
// kg_O the geodesic curvature of the other-branch lines crossing A (seeded at
// samples i-2..i+2). Returns the signed value.
inline double cylinder_eq8(const SurfacePatch& s, const CurvatureLine& line, std::size_t i,
                           const CompatibilityOptions& o = {}) {
    const double h = detail::uniform_spacing(line);
    if (i < 2 || i + 2 >= line.samples.size())
        throw InvalidArgument("cylinder_eq8: need two samples on each side of the point");
    std::vector<double> ko, kg;
    for (std::size_t k = i - 2; k <= i + 2; ++k) {
        const auto c = curvature_at(s, line.samples[k].u, line.samples[k].v, o.umbilic_tol);
        ko.push_back(branch_curvature(c, other(line.branch)));
        const auto x = orthogonal_crossing(s, line, k, o);
        if (!x.ok) throw DegenerateError("cylinder_eq8: orthogonal line unavailable near the point");
        kg.push_back(x.kg);
    }
    const double d2k = numerics::central_stencil(2, 4, h).apply(ko, 2);
    const double dkg = numerics::central_stencil(1, 4, h).apply(kg, 2);
    if (std::abs(dkg) < o.dkg_tol)
        throw DegenerateError("cylinder_eq8: geodesic curvature and its derivative both vanish (unresolved)");
    return d2k / dkg;
}

// ---------------------------------------------------------------------------
// Per-line compatibility report
// ---------------------------------------------------------------------------

struct CompatibilityReport {
    double s = 0;
    double u = 0, v = 0;
    Vec3 r = Vec3::Zero();
    double C_direct = 0;
    double C_eq7 = kNaN;           // unsigned, first non-degenerate pairing
    double C_eq7_via_base = kNaN;  // signed
    double C_eq7_via_orth = kNaN;  // signed
    std::optional<double> C_eq8;   // unsigned, only where both kg vanish
    double dC_ds_direct = kNaN;    // FD of C_direct along the base line
    double dC_ds_eq9 = kNaN;       // derivative of |C| along the base line
    bool eq9_via_orth = false;     // second pairing selected
    double dC_ds_eq9_via_base = kNaN;
    double dC_ds_eq9_via_orth = kNaN;
    double dC_ds_minkwitz = kNaN;  // 2 dk_o/ds_O (oriented)
    double kg_used = kNaN;
    double kg_base = kNaN;
    double kg_orth = kNaN;
    double k_base = 0, k_other = 0;
    bool degenerate = false;
    bool low_confidence = false;
};

inline std::vector<CompatibilityReport> analyze_line(const SurfacePatch& s, const CurvatureLine& base,
                                                     const CompatibilityOptions& o = {}) {
    const std::size_t n = base.samples.size();
    if (n < 5) throw InvalidArgument("analyze_line: need at least 5 samples");
    const double h = detail::uniform_spacing(base);
    const Branch b = base.branch, ob = other(b);

    const auto curv = detail::curvatures_along(s, base, o.umbilic_tol);
    const auto kb = detail::branch_series(curv, b);
    const auto ko = detail::branch_series(curv, ob);
    std::vector<double> cdir(n);
    for (std::size_t i = 0; i < n; ++i) cdir[i] = curv[i].C;

    const auto kg_b = geodesic_curvature_vector(base);
    std::vector<double> kgb(n);
    for (std::size_t i = 0; i < n; ++i) kgb[i] = kg_b[i].kg;

    std::vector<OrthogonalCrossing> cross(n);
    std::vector<double> f(n, kNaN), kgo(n, kNaN), dko_o(n, kNaN);
    for (std::size_t i = 0; i < n; ++i) {
        cross[i] = orthogonal_crossing(s, base, i, o);
        if (!cross[i].ok) continue;
        f[i] = cross[i].dk_base_ds;
        kgo[i] = cross[i].kg;
        dko_o[i] = cross[i].dk_other_ds;
        cross[i].line.samples.clear();  // keep memory flat
    }

    const auto dko_b = numerics::fd_derivative(ko, h, 1, 4);
    const auto d2ko_b = numerics::fd_derivative(ko, h, 2, 4);
    const auto dcdir = numerics::fd_derivative(cdir, h, 1, 4);
    const auto dkgb = numerics::fd_derivative(kgb, h, 1, 4);

    std::vector<CompatibilityReport> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = out[i];
        const auto& p = base.samples[i];
        r.s = p.s;
        r.u = p.u;
        r.v = p.v;
        r.r = p.r;
        r.C_direct = cdir[i];
        r.k_base = kb[i];
        r.k_other = ko[i];
        r.dC_ds_direct = dcdir[i];
        r.kg_base = kgb[i];
        r.kg_orth = kgo[i];
        r.low_confidence = i < 4 || i + 4 >= n;

        const bool base_ok = std::abs(kgb[i]) >= o.kg_threshold && std::isfinite(f[i]);
        const bool orth_ok = std::isfinite(kgo[i]) && std::abs(kgo[i]) >= o.kg_threshold;
        if (base_ok) r.C_eq7_via_base = f[i] / kgb[i];
        if (orth_ok) r.C_eq7_via_orth = dko_b[i] / kgo[i];
        // Prefer the pairing with the larger |kg|: its ratio is better conditioned.
        const bool use_orth = orth_ok && (!base_ok || std::abs(kgo[i]) > std::abs(kgb[i]));
        if (use_orth) {
            r.C_eq7 = std::abs(r.C_eq7_via_orth);
            r.kg_used = kgo[i];
        } else if (base_ok) {
            r.C_eq7 = std::abs(r.C_eq7_via_base);
            r.kg_used = kgb[i];
        }
        r.degenerate = !base_ok && !orth_ok;

        if (std::isfinite(dko_o[i])) r.dC_ds_minkwitz = 2.0 * dko_o[i];

        bool reduced_b = false, reduced_o = false;
        if (base_ok) {
            const double df = detail::fd_finite(f, i, h, 1, &reduced_b);
            if (std::isfinite(df)) {
                const double c = r.C_eq7_via_base;
                r.dC_ds_eq9_via_base = (c >= 0.0 ? 1.0 : -1.0) * (df - c * dkgb[i]) / kgb[i];
            }
        }
        if (orth_ok) {
            const double dkg = detail::fd_finite(kgo, i, h, 1, &reduced_o);
            if (std::isfinite(dkg)) {
                const double c = r.C_eq7_via_orth;
                r.dC_ds_eq9_via_orth = (c >= 0.0 ? 1.0 : -1.0) * (d2ko_b[i] - c * dkg) / kgo[i];
            }
        }
        if (use_orth && std::isfinite(r.dC_ds_eq9_via_orth)) {
            r.dC_ds_eq9 = r.dC_ds_eq9_via_orth;
            r.eq9_via_orth = true;
            if (reduced_o) r.low_confidence = true;
        } else if (std::isfinite(r.dC_ds_eq9_via_base)) {
            r.dC_ds_eq9 = r.dC_ds_eq9_via_base;
            if (reduced_b) r.low_confidence = true;
        }

        if (r.degenerate) {
            // L'Hopital along whichever line has a vanishing partner kg.
            try {
                if (std::isfinite(kgo[i]) && std::abs(kgo[i]) < o.kg_threshold) {
                    const double dkg = detail::fd_finite(kgo, i, h, 1);
                    if (std::isfinite(dkg) && std::abs(dkg) >= o.dkg_tol) r.C_eq8 = std::abs(d2ko_b[i] / dkg);
                }
                if (!r.C_eq8) {
                    TraceOptions to;
                    to.step = o.step;
                    to.umbilic_tol = o.umbilic_tol;
                    to.max_length = 2.0 * (o.orth_half_samples + 3.5) * o.ds;
                    const auto orth = reparametrize_arclength(
                        s, trace_line(s, Vec2(p.u, p.v), ob, to), o.ds, o.umbilic_tol);
                    r.C_eq8 = std::abs(cylinder_eq8(s, orth, orth.seed_index, o));
                }
            } catch (const Error&) {
                // unresolved indeterminacy: leave C_eq8 empty
            }
        }
    }
    return out;
}

// Exact derivative of |C| along the base line at sample i, from the
// orthogonal lines seeded at samples i-2..i+2.
inline double extended_minkwitz_eq9(const SurfacePatch& s, const CurvatureLine& base, std::size_t i,
                                    const CompatibilityOptions& o = {}) {
    const double h = detail::uniform_spacing(base);
    const std::size_t n = base.samples.size();
    if (i < 2 || i + 2 >= n) throw InvalidArgument("extended_minkwitz_eq9: need two samples on each side");
    const auto kgb = geodesic_curvature_vector(base);
    std::vector<double> f, kg_b, kg_o, k_o;
    for (std::size_t k = i - 2; k <= i + 2; ++k) {
        const auto x = orthogonal_crossing(s, base, k, o);
        if (!x.ok) throw DegenerateError("extended_minkwitz_eq9: orthogonal line unavailable near the point");
        f.push_back(x.dk_base_ds);
        kg_o.push_back(x.kg);
        kg_b.push_back(kgb[k].kg);
        const auto c = curvature_at(s, base.samples[k].u, base.samples[k].v, o.umbilic_tol);
        k_o.push_back(branch_curvature(c, other(base.branch)));
    }
    const auto d1 = numerics::central_stencil(1, 4, h);
    double c = 0.0, dc = 0.0;
    const bool base_ok = std::abs(kg_b[2]) >= o.kg_threshold;
    const bool orth_ok = std::abs(kg_o[2]) >= o.kg_threshold;
    if (base_ok && (!orth_ok || std::abs(kg_b[2]) >= std::abs(kg_o[2]))) {
        c = f[2] / kg_b[2];
        dc = (d1.apply(f, 2) - c * d1.apply(kg_b, 2)) / kg_b[2];
    } else if (orth_ok) {
        c = d1.apply(k_o, 2) / kg_o[2];
        dc = (numerics::central_stencil(2, 4, h).apply(k_o, 2) - c * d1.apply(kg_o, 2)) / kg_o[2];
    } else {
        throw DegenerateError("extended_minkwitz_eq9: geodesic curvature vanishes on both lines");
    }
    return (c >= 0.0 ? 1.0 : -1.0) * dc;
}

// Classical Minkwitz estimate of dC/ds_B: twice the slope of the orthogonal
// principal curvature along the orthogonal line (oriented n x t_B).
inline double classical_minkwitz(const SurfacePatch& s, const CurvatureLine& base, std::size_t i,
                                 const CompatibilityOptions& o = {}) {
    const auto x = orthogonal_crossing(s, base, i, o);
    if (!x.ok) throw DegenerateError("classical_minkwitz: orthogonal line unavailable at the point");
    return 2.0 * x.dk_other_ds;
}

// Index of the closest approach of a line to an umbilic locus: the sample of
// least cylinder, accepted when the line stopped there on umbilic proximity
// or the cylinder there is at most min_ratio of the line's maximum.
inline std::size_t umbilic_approach_index(const std::vector<CompatibilityReport>& rep, const CurvatureLine& line,
                                          double min_ratio = 0.1) {
    if (rep.empty()) throw InvalidArgument("umbilic_approach_index: empty report");
    std::size_t imin = 0;
    double cmax = 0.0;
    for (std::size_t i = 0; i < rep.size(); ++i) {
        if (rep[i].C_direct < rep[imin].C_direct) imin = i;
        cmax = std::max(cmax, rep[i].C_direct);
    }
    const bool stopped = (imin == 0 && line.termination_backward == Termination::umbilic_proximity) ||
                         (imin + 1 == rep.size() && line.termination == Termination::umbilic_proximity);
    if (!stopped && rep[imin].C_direct > min_ratio * cmax)
        throw DegenerateError("no umbilical reference line found along the line");
    return imin;
}

// Alonso form C = 2 (dk_u/ds_u) s_v, with s_v the arc length from the
// umbilic locus and the slope taken along the orthogonal line at sample i.
inline double alonso_cylinder(const SurfacePatch& s, const CurvatureLine& base, std::size_t i, double s_v,
                              const CompatibilityOptions& o = {}) {
    return std::abs(classical_minkwitz(s, base, i, o)) * std::abs(s_v);
}

inline double alonso_cylinder(const SurfacePatch& s, const CurvatureLine& base, std::size_t i,
                              const std::vector<CompatibilityReport>& rep, const CompatibilityOptions& o = {}) {
    const std::size_t k = umbilic_approach_index(rep, base);
    return alonso_cylinder(s, base, i, base.samples.at(i).s - base.samples.at(k).s, o);
}

}  // namespace palcurv
