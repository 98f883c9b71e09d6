#pragma once

// Parametric surfaces, their 2-jets, fundamental forms and pointwise
// curvature. Everything is SI: meters, and 1/m (= diopters) for curvature.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "palcurv/error.hpp"
#include "palcurv/numerics.hpp"

namespace palcurv {

struct Domain {
    double u_min = 0.0, u_max = 1.0, v_min = 0.0, v_max = 1.0;

    Domain() = default;
    Domain(double umin, double umax, double vmin, double vmax)
        : u_min(umin), u_max(umax), v_min(vmin), v_max(vmax) {
        if (!(u_min < u_max) || !(v_min < v_max)) throw InvalidArgument("Domain: need min < max on both axes");
    }

    double u_span() const { return u_max - u_min; }
    double v_span() const { return v_max - v_min; }

    bool contains(double u, double v, double rel_tol = 1e-12) const {
        const double eu = rel_tol * u_span(), ev = rel_tol * v_span();
        return u >= u_min - eu && u <= u_max + eu && v >= v_min - ev && v <= v_max + ev;
    }
};

// Progressive lens model: spherical base k0 plus a cubic-type power ramp of
// addition kA over length L toward negative y. Units: 1/m, 1/m, m.
struct PalParams {
    double k0 = 2.0;
    double kA = 2.0;
    double L = 0.002;
};

// z = sum c * x^i * y^j (SI coefficients).
struct Monomial {
    int i = 0;
    int j = 0;
    double c = 0.0;
};

namespace shapes {

struct HeightDerivs {
    double z = 0, zx = 0, zy = 0, zxx = 0, zxy = 0, zyy = 0;
};

struct PalModel {
    PalParams params;

    HeightDerivs height(double x, double y) const {
        const double k0 = params.k0, kA = params.kA, L = params.L;
        HeightDerivs h;
        h.z = 0.5 * k0 * (x * x + y * y);
        h.zx = k0 * x;
        h.zy = k0 * y;
        h.zxx = k0;
        h.zyy = k0;
        if (y >= 0.0) return h;  // addition terms are defined on y < 0 only

        const double t = y / L, t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t, t6 = t5 * t, t7 = t6 * t;
        const double ramp = 10 * t3 + 15 * t4 + 6 * t5;
        const double ramp_t = 30 * t2 + 60 * t3 + 30 * t4;
        const double ramp_tt = 60 * t + 180 * t2 + 120 * t3;
        const double tail = t5 / 2 + t6 / 2 + t7 / 7;
        const double tail_t = 2.5 * t4 + 3 * t5 + t6;
        // d^2 tail / dt^2 == ramp
        h.z += -0.5 * kA * x * x * ramp - kA * L * L * tail;
        h.zx += -kA * x * ramp;
        h.zy += -0.5 * kA * x * x * ramp_t / L - kA * L * tail_t;
        h.zxx += -kA * ramp;
        h.zxy += -kA * x * ramp_t / L;
        h.zyy += -0.5 * kA * x * x * ramp_tt / (L * L) - kA * ramp;
        return h;
    }
};

struct PolynomialHeight {
    std::vector<Monomial> terms;

    HeightDerivs height(double x, double y) const {
        auto pw = [](double b, int e) { return e < 0 ? 0.0 : std::pow(b, e); };
        HeightDerivs h;
        for (const auto& m : terms) {
            const double i = m.i, j = m.j;
            h.z += m.c * pw(x, m.i) * pw(y, m.j);
            h.zx += m.c * i * pw(x, m.i - 1) * pw(y, m.j);
            h.zy += m.c * j * pw(x, m.i) * pw(y, m.j - 1);
            h.zxx += m.c * i * (i - 1) * pw(x, m.i - 2) * pw(y, m.j);
            h.zxy += m.c * i * j * pw(x, m.i - 1) * pw(y, m.j - 1);
            h.zyy += m.c * j * (j - 1) * pw(x, m.i) * pw(y, m.j - 2);
        }
        return h;
    }
};

// Paraboloid of revolution with apex radius of curvature R: z = (x^2+y^2)/(2R).
struct Paraboloid {
    double radius = 1.0;

    HeightDerivs height(double x, double y) const {
        const double c = 1.0 / radius;
        return {0.5 * c * (x * x + y * y), c * x, c * y, c, 0.0, c};
    }
};

// Latitude/longitude chart (u = latitude, v = longitude); normal points inward.
struct Sphere {
    double radius = 1.0;
};

// Triaxial ellipsoid, same chart and orientation as Sphere.
struct Ellipsoid {
    double a = 1.0, b = 1.0, c = 1.0;
};

// Standard chart (u = tube angle theta, v = azimuth phi); normal points
// toward the tube axis so meridian curvature is +1/r.
struct Torus {
    double R = 2.0;
    double r = 1.0;
};

}  // namespace shapes

enum class SurfaceKind { pal_model, height_field_polynomial, sphere, paraboloid, torus, ellipsoid };

inline std::string to_string(SurfaceKind k) {
    switch (k) {
        case SurfaceKind::pal_model: return "pal_model";
        case SurfaceKind::height_field_polynomial: return "height_field_polynomial";
        case SurfaceKind::sphere: return "sphere";
        case SurfaceKind::paraboloid: return "paraboloid";
        case SurfaceKind::torus: return "torus";
        case SurfaceKind::ellipsoid: return "ellipsoid";
    }
    return "unknown";
}

using Shape = std::variant<shapes::PalModel, shapes::PolynomialHeight, shapes::Sphere, shapes::Paraboloid,
                           shapes::Torus, shapes::Ellipsoid>;

struct SurfacePatch {
    Shape shape;
    Domain domain;

    SurfaceKind kind() const {
        return std::visit(
            [](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, shapes::PalModel>) return SurfaceKind::pal_model;
                else if constexpr (std::is_same_v<T, shapes::PolynomialHeight>) return SurfaceKind::height_field_polynomial;
                else if constexpr (std::is_same_v<T, shapes::Sphere>) return SurfaceKind::sphere;
                else if constexpr (std::is_same_v<T, shapes::Paraboloid>) return SurfaceKind::paraboloid;
                else if constexpr (std::is_same_v<T, shapes::Torus>) return SurfaceKind::torus;
                else return SurfaceKind::ellipsoid;
            },
            shape);
    }

    // Height fields use (x, y) in meters as chart coordinates.
    bool is_height_field() const {
        const auto k = kind();
        return k == SurfaceKind::pal_model || k == SurfaceKind::height_field_polynomial ||
               k == SurfaceKind::paraboloid;
    }
};

struct SurfaceJet {
    Vec3 r = Vec3::Zero();
    Vec3 r_u = Vec3::Zero(), r_v = Vec3::Zero();
    Vec3 r_uu = Vec3::Zero(), r_uv = Vec3::Zero(), r_vv = Vec3::Zero();
    Vec3 n = Vec3::UnitZ();
};

struct FundamentalForms {
    double E = 1, F = 0, G = 1;
    double L_ = 0, M_ = 0, N_ = 0;
};

struct CurvatureData {
    double k1 = 0, k2 = 0;  // k1 >= k2
    double H = 0, K = 0, C = 0;
    Vec2 d1 = Vec2::UnitX(), d2 = Vec2::UnitY();  // unit tangent length, (du, dv)
    bool umbilic = false;
    double quality = 0;  // k1 - k2; how well d1, d2 are determined
};

namespace detail {

inline SurfaceJet height_jet(const shapes::HeightDerivs& h, double x, double y) {
    SurfaceJet j;
    j.r = Vec3(x, y, h.z);
    j.r_u = Vec3(1, 0, h.zx);
    j.r_v = Vec3(0, 1, h.zy);
    j.r_uu = Vec3(0, 0, h.zxx);
    j.r_uv = Vec3(0, 0, h.zxy);
    j.r_vv = Vec3(0, 0, h.zyy);
    return j;
}

inline SurfaceJet ellipsoidal_jet(double a, double b, double c, double th, double ph) {
    const double ct = std::cos(th), st = std::sin(th), cp = std::cos(ph), sp = std::sin(ph);
    SurfaceJet j;
    j.r = Vec3(a * ct * cp, b * ct * sp, c * st);
    j.r_u = Vec3(-a * st * cp, -b * st * sp, c * ct);
    j.r_v = Vec3(-a * ct * sp, b * ct * cp, 0);
    j.r_uu = Vec3(-a * ct * cp, -b * ct * sp, -c * st);
    j.r_uv = Vec3(a * st * sp, -b * st * cp, 0);
    j.r_vv = Vec3(-a * ct * cp, -b * ct * sp, 0);
    return j;
}

inline SurfaceJet raw_jet(const Shape& shape, double u, double v) {
    return std::visit(
        [u, v](const auto& s) -> SurfaceJet {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, shapes::Sphere>) {
                return ellipsoidal_jet(s.radius, s.radius, s.radius, u, v);
            } else if constexpr (std::is_same_v<T, shapes::Ellipsoid>) {
                return ellipsoidal_jet(s.a, s.b, s.c, u, v);
            } else if constexpr (std::is_same_v<T, shapes::Torus>) {
                const double ct = std::cos(u), st = std::sin(u), cp = std::cos(v), sp = std::sin(v);
                const double rho = s.R + s.r * ct;
                SurfaceJet j;
                j.r = Vec3(rho * cp, rho * sp, s.r * st);
                j.r_u = Vec3(-s.r * st * cp, -s.r * st * sp, s.r * ct);
                j.r_v = Vec3(-rho * sp, rho * cp, 0);
                j.r_uu = Vec3(-s.r * ct * cp, -s.r * ct * sp, -s.r * st);
                j.r_uv = Vec3(s.r * st * sp, -s.r * st * cp, 0);
                j.r_vv = Vec3(-rho * cp, -rho * sp, 0);
                return j;
            } else {
                return height_jet(s.height(u, v), u, v);
            }
        },
        shape);
}

}  // namespace detail

// Jet without the domain check; still rejects singular parametrizations.
inline SurfaceJet surface_jet(const SurfacePatch& surface, double u, double v) {
    SurfaceJet j = detail::raw_jet(surface.shape, u, v);
    const Vec3 cross = j.r_u.cross(j.r_v);
    const double area = cross.norm();
    const double scale = std::max(j.r_u.squaredNorm(), j.r_v.squaredNorm());
    if (!(area >= 1e-12 * scale) || scale == 0.0 || !std::isfinite(area)) {
        throw SingularPointError("singular parametrization at (u, v) = (" + std::to_string(u) + ", " +
                                 std::to_string(v) + ")");
    }
    j.n = cross / area;
    return j;
}

inline SurfaceJet evaluate_jet(const SurfacePatch& surface, double u, double v) {
    if (!surface.domain.contains(u, v))
        throw DomainError("point (" + std::to_string(u) + ", " + std::to_string(v) + ") outside the domain");
    return surface_jet(surface, u, v);
}

inline SurfacePatch pal_surface(const PalParams& params, const Domain& domain) {
    if (!(params.L > 0.0)) throw InvalidArgument("pal_surface: L must be positive");
    if (!std::isfinite(params.k0) || !std::isfinite(params.kA)) throw InvalidArgument("pal_surface: non-finite curvature");
    return SurfacePatch{shapes::PalModel{params}, domain};
}

inline FundamentalForms fundamental_forms(const SurfaceJet& j) {
    FundamentalForms f;
    f.E = j.r_u.dot(j.r_u);
    f.F = j.r_u.dot(j.r_v);
    f.G = j.r_v.dot(j.r_v);
    f.L_ = j.n.dot(j.r_uu);
    f.M_ = j.n.dot(j.r_uv);
    f.N_ = j.n.dot(j.r_vv);
    return f;
}

// Default umbilic tolerance: 1e-4 D.
inline constexpr double kDefaultUmbilicTol = 1e-4;

// Eigen-decomposition of the shape operator I^{-1} II through the
// similarity A = R^{-T} II R^{-1}, I = R^T R, which is symmetric.
inline CurvatureData curvature_data(const FundamentalForms& f, double umbilic_tol = kDefaultUmbilicTol) {
    const double det_i = f.E * f.G - f.F * f.F;
    if (!(f.E > 0.0) || !(det_i > 0.0)) throw SingularPointError("curvature_data: first form not positive definite");

    const double sE = std::sqrt(f.E);
    const double sD = std::sqrt(det_i / f.E);
    Eigen::Matrix2d r_inv;
    r_inv << 1.0 / sE, -f.F / (f.E * sD), 0.0, 1.0 / sD;
    Eigen::Matrix2d second;
    second << f.L_, f.M_, f.M_, f.N_;
    const Eigen::Matrix2d a = r_inv.transpose() * second * r_inv;

    const auto eig = numerics::sym_eig2(a(0, 0), 0.5 * (a(0, 1) + a(1, 0)), a(1, 1));
    CurvatureData c;
    c.k1 = eig.lambda1;
    c.k2 = eig.lambda2;
    c.H = 0.5 * (c.k1 + c.k2);
    c.K = (f.L_ * f.N_ - f.M_ * f.M_) / det_i;
    c.C = c.k1 - c.k2;
    c.quality = c.C;
    c.umbilic = eig.degenerate || c.C < umbilic_tol;
    c.d1 = r_inv * eig.e1;
    c.d2 = r_inv * eig.e2;
    return c;
}

inline CurvatureData curvature_at(const SurfacePatch& s, double u, double v, double umbilic_tol = kDefaultUmbilicTol) {
    return curvature_data(fundamental_forms(surface_jet(s, u, v)), umbilic_tol);
}

// Row-major grid of curvature data: index = iy * nx + ix, nodes include the
// domain bounds.
struct CurvatureGrid {
    std::size_t nx = 0, ny = 0;
    std::vector<double> u, v;  // node coordinates, sizes nx and ny
    std::vector<CurvatureData> data;

    const CurvatureData& at(std::size_t ix, std::size_t iy) const { return data[iy * nx + ix]; }
};

inline CurvatureGrid grid_map(const SurfacePatch& s, std::size_t nx, std::size_t ny,
                              double umbilic_tol = kDefaultUmbilicTol) {
    if (nx < 2 || ny < 2) throw InvalidArgument("grid_map: need at least 2x2 nodes");
    CurvatureGrid g;
    g.nx = nx;
    g.ny = ny;
    for (std::size_t i = 0; i < nx; ++i)
        g.u.push_back(s.domain.u_min + s.domain.u_span() * static_cast<double>(i) / static_cast<double>(nx - 1));
    for (std::size_t i = 0; i < ny; ++i)
        g.v.push_back(s.domain.v_min + s.domain.v_span() * static_cast<double>(i) / static_cast<double>(ny - 1));
    g.data.reserve(nx * ny);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            try {
                g.data.push_back(curvature_data(fundamental_forms(evaluate_jet(s, g.u[ix], g.v[iy])), umbilic_tol));
            } catch (Error& e) {
                e.add_context("grid node (" + std::to_string(ix) + ", " + std::to_string(iy) + ") at (" +
                              std::to_string(g.u[ix]) + ", " + std::to_string(g.v[iy]) + ")");
                throw;
            }
        }
    }
    return g;
}

using ScalarField = std::function<double(double, double)>;

// Midpoint-rule quadrature of alpha C^2 + beta (H - H_target)^2 over the
// domain, nx * ny cells, in chart coordinates.
inline double functional_value(const SurfacePatch& s, const ScalarField& h_target, const ScalarField& alpha,
                               const ScalarField& beta, std::size_t nx, std::size_t ny) {
    if (nx < 2 || ny < 2) throw InvalidArgument("functional_value: grid too coarse (need >= 2x2 cells)");
    const double du = s.domain.u_span() / static_cast<double>(nx);
    const double dv = s.domain.v_span() / static_cast<double>(ny);
    double sum = 0.0;
    for (std::size_t iy = 0; iy < ny; ++iy) {
        const double v = s.domain.v_min + (static_cast<double>(iy) + 0.5) * dv;
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const double u = s.domain.u_min + (static_cast<double>(ix) + 0.5) * du;
            const double a = alpha(u, v), b = beta(u, v);
            if (a < 0.0 || b < 0.0) throw InvalidArgument("functional_value: weights must be nonnegative");
            const CurvatureData c = curvature_at(s, u, v);
            const double dh = c.H - h_target(u, v);
            sum += a * c.C * c.C + b * dh * dh;
        }
    }
    return sum * du * dv;
}

}  // namespace palcurv
