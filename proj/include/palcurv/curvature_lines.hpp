#pragma once

// Lines of curvature: integration of the principal-direction fields with
// fixed-step RK4, and arc-length resampling of the traced curves.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "palcurv/error.hpp"
#include "palcurv/numerics.hpp"
#include "palcurv/surface.hpp"

namespace palcurv {

enum class Branch { k_max, k_min };

inline Branch other(Branch b) { return b == Branch::k_max ? Branch::k_min : Branch::k_max; }

inline std::string to_string(Branch b) { return b == Branch::k_max ? "k_max" : "k_min"; }

inline double branch_curvature(const CurvatureData& c, Branch b) { return b == Branch::k_max ? c.k1 : c.k2; }
inline const Vec2& branch_direction(const CurvatureData& c, Branch b) { return b == Branch::k_max ? c.d1 : c.d2; }

enum class Termination { boundary, umbilic_proximity, max_length, singularity };

inline std::string to_string(Termination t) {
    switch (t) {
        case Termination::boundary: return "boundary";
        case Termination::umbilic_proximity: return "umbilic_proximity";
        case Termination::max_length: return "max_length";
        case Termination::singularity: return "singularity";
    }
    return "unknown";
}

struct LineSample {
    double s = 0;  // arc length from the first sample (m)
    double u = 0, v = 0;
    Vec3 r = Vec3::Zero();
    Vec3 t = Vec3::UnitX();  // unit tangent, oriented along increasing s
    double k_n = 0;          // normal curvature along t == branch principal curvature
    Vec2 dir = Vec2::UnitX();  // (du/ds, dv/ds)
    Vec3 n = Vec3::UnitZ();
};

struct CurvatureLine {
    Branch branch = Branch::k_max;
    std::vector<LineSample> samples;
    std::size_t seed_index = 0;  // sample at the seed point
    Termination termination = Termination::max_length;           // forward end
    Termination termination_backward = Termination::max_length;  // backward end

    double length() const { return samples.empty() ? 0.0 : samples.back().s - samples.front().s; }
};

struct TraceOptions {
    double step = 0.05e-3;       // RK4 step (m)
    double max_length = 0.1;     // total over both directions (m)
    double umbilic_tol = kDefaultUmbilicTol;
    std::optional<Domain> boundary;  // defaults to the surface domain
    bool bidirectional = true;
};

namespace detail {

struct Direction {
    Vec2 dir;
    CurvatureData curv;
    SurfaceJet jet;
};

inline Direction principal_direction_full(const SurfacePatch& s, double u, double v, Branch b,
                                          const std::optional<Vec2>& prev, double umbilic_tol) {
    Direction d;
    d.jet = surface_jet(s, u, v);
    const FundamentalForms f = fundamental_forms(d.jet);
    d.curv = curvature_data(f, umbilic_tol);
    if (d.curv.umbilic) {
        throw UmbilicError("principal direction undefined near umbilic at (" + std::to_string(u) + ", " +
                               std::to_string(v) + "), k1-k2 = " + std::to_string(d.curv.C),
                           d.curv.C);
    }
    d.dir = branch_direction(d.curv, b);
    if (prev) {
        const Vec3 img = d.jet.r_u * d.dir.x() + d.jet.r_v * d.dir.y();
        const Vec3 prev_img = d.jet.r_u * prev->x() + d.jet.r_v * prev->y();
        if (img.dot(prev_img) < 0.0) d.dir = -d.dir;
    }
    return d;
}

inline Vec3 tangent_image(const SurfaceJet& j, const Vec2& d) { return (j.r_u * d.x() + j.r_v * d.y()).normalized(); }

inline LineSample make_sample(double s, double u, double v, const Direction& d, Branch b) {
    LineSample ls;
    ls.s = s;
    ls.u = u;
    ls.v = v;
    ls.r = d.jet.r;
    ls.n = d.jet.n;
    ls.dir = d.dir;
    ls.t = tangent_image(d.jet, d.dir);
    ls.k_n = branch_curvature(d.curv, b);
    return ls;
}

struct HalfTrace {
    std::vector<double> s;
    std::vector<Direction> dirs;
    std::vector<Vec2> pts;
    Termination why = Termination::max_length;
};

inline HalfTrace trace_half(const SurfacePatch& surf, const Vec2& start, const Direction& start_dir, Branch b,
                            const TraceOptions& o, const Domain& box, double max_len) {
    HalfTrace ht;
    Vec2 p = start;
    Direction cur = start_dir;
    double s = 0.0;

    auto advance = [&](const Vec2& from, const Vec2& ref, double h) {
        auto field = [&](const Vec2& q) {
            return principal_direction_full(surf, q.x(), q.y(), b, ref, o.umbilic_tol).dir;
        };
        return numerics::rk4_step(field, from, h);
    };

    while (s < max_len * (1.0 - 1e-12)) {
        double h = std::min(o.step, max_len - s);
        Vec2 next;
        try {
            next = advance(p, cur.dir, h);
            if (!box.contains(next.x(), next.y())) {
                // Bisect the step length onto the boundary.
                double lo = 0.0, hi = h;
                while (hi - lo > 1e-3 * o.step) {
                    const double mid = 0.5 * (lo + hi);
                    const Vec2 q = advance(p, cur.dir, mid);
                    if (box.contains(q.x(), q.y())) lo = mid;
                    else hi = mid;
                }
                ht.why = Termination::boundary;
                if (lo < 1e-6 * o.step) break;
                h = lo;
                next = advance(p, cur.dir, h);
            }
        } catch (const UmbilicError&) {
            ht.why = Termination::umbilic_proximity;
            break;
        } catch (const SingularPointError&) {
            ht.why = Termination::singularity;
            break;
        }

        Direction nd;
        try {
            nd = principal_direction_full(surf, next.x(), next.y(), b, cur.dir, o.umbilic_tol);
        } catch (const UmbilicError&) {
            ht.why = Termination::umbilic_proximity;
            break;
        } catch (const SingularPointError&) {
            ht.why = Termination::singularity;
            break;
        }

        const Vec3 chord = nd.jet.r - cur.jet.r;
        if (chord.dot(tangent_image(cur.jet, cur.dir)) <= 0.0 || chord.dot(tangent_image(nd.jet, nd.dir)) <= 0.0) {
            throw StepTooLargeError("direction field folds within one step at (" + std::to_string(next.x()) + ", " +
                                    std::to_string(next.y()) + "); reduce the step");
        }

        s += h;
        p = next;
        cur = nd;
        ht.s.push_back(s);
        ht.dirs.push_back(nd);
        ht.pts.push_back(next);
        if (ht.why == Termination::boundary) break;
    }
    return ht;
}

}  // namespace detail

// Unit-speed parameter-plane direction of the chosen principal field. With
// prev, the sign is chosen so the surface images point the same way.
inline Vec2 principal_direction(const SurfacePatch& s, double u, double v, Branch b,
                                const std::optional<Vec2>& prev = std::nullopt,
                                double umbilic_tol = kDefaultUmbilicTol) {
    return detail::principal_direction_full(s, u, v, b, prev, umbilic_tol).dir;
}

// Traces the line of curvature of branch b through start, forward and (by
// default) backward, each direction up to max_length / 2. The integration
// parameter of the unit-speed field is the arc length.
inline CurvatureLine trace_line(const SurfacePatch& surf, const Vec2& start, Branch b, const TraceOptions& o = {}) {
    if (!(o.step > 0.0)) throw InvalidArgument("trace_line: step must be positive");
    if (!(o.max_length > 0.0)) throw InvalidArgument("trace_line: max_length must be positive");
    const Domain box = o.boundary.value_or(surf.domain);
    if (!box.contains(start.x(), start.y())) throw DomainError("trace_line: start outside the domain");

    const detail::Direction d0 = detail::principal_direction_full(surf, start.x(), start.y(), b, std::nullopt,
                                                                  o.umbilic_tol);
    const double half = o.bidirectional ? 0.5 * o.max_length : o.max_length;

    detail::Direction fwd0 = d0;
    const auto forward = detail::trace_half(surf, start, fwd0, b, o, box, half);

    detail::HalfTrace backward;
    if (o.bidirectional) {
        detail::Direction bwd0 = d0;
        bwd0.dir = -bwd0.dir;
        backward = detail::trace_half(surf, start, bwd0, b, o, box, half);
    }

    CurvatureLine line;
    line.branch = b;
    line.termination = forward.why;
    line.termination_backward = o.bidirectional ? backward.why : Termination::max_length;
    const double s_back = backward.s.empty() ? 0.0 : backward.s.back();

    for (std::size_t k = backward.s.size(); k-- > 0;) {
        detail::Direction d = backward.dirs[k];
        d.dir = -d.dir;
        line.samples.push_back(detail::make_sample(s_back - backward.s[k], backward.pts[k].x(), backward.pts[k].y(), d, b));
    }
    line.seed_index = line.samples.size();
    line.samples.push_back(detail::make_sample(s_back, start.x(), start.y(), d0, b));
    for (std::size_t k = 0; k < forward.s.size(); ++k)
        line.samples.push_back(detail::make_sample(s_back + forward.s[k], forward.pts[k].x(), forward.pts[k].y(),
                                                   forward.dirs[k], b));
    return line;
}

// Uniform arc-length resampling. (u, v)(s) is interpolated by C2 cubic
// splines clamped with the known field direction at both ends; geometry is
// re-evaluated exactly at the new parameters. The output grid contains the
// seed, which stays at index seed_index.
inline CurvatureLine reparametrize_arclength(const SurfacePatch& surf, const CurvatureLine& line, double ds,
                                             double umbilic_tol = kDefaultUmbilicTol) {
    if (!(ds > 0.0)) throw InvalidArgument("reparametrize_arclength: ds must be positive");
    if (line.samples.size() < 4) throw InvalidArgument("reparametrize_arclength: need at least 4 samples");
    if (line.length() < 3.0 * ds) throw InvalidArgument("reparametrize_arclength: line shorter than 3 ds");

    std::vector<double> s, u, v;
    for (const auto& p : line.samples) {
        s.push_back(p.s);
        u.push_back(p.u);
        v.push_back(p.v);
    }
    const auto& a = line.samples.front();
    const auto& z = line.samples.back();
    const numerics::CubicSpline su(s, u, a.dir.x(), z.dir.x());
    const numerics::CubicSpline sv(s, v, a.dir.y(), z.dir.y());

    const double anchor = line.samples[line.seed_index].s;
    const double eps = 1e-9;
    const long k_lo = static_cast<long>(std::ceil((s.front() - anchor) / ds - eps));
    const long k_hi = static_cast<long>(std::floor((s.back() - anchor) / ds + eps));

    CurvatureLine out;
    out.branch = line.branch;
    out.termination = line.termination;
    out.termination_backward = line.termination_backward;
    out.seed_index = static_cast<std::size_t>(-k_lo);
    for (long k = k_lo; k <= k_hi; ++k) {
        const double sk = std::clamp(anchor + static_cast<double>(k) * ds, s.front(), s.back());
        const double uk = su(sk), vk = sv(sk);
        const Vec2 hint(su.derivative(sk), sv.derivative(sk));
        const auto d = detail::principal_direction_full(surf, uk, vk, line.branch, hint, umbilic_tol);
        out.samples.push_back(detail::make_sample(static_cast<double>(k - k_lo) * ds, uk, vk, d, line.branch));
    }
    return out;
}

struct NetResult {
    struct Failure {
        std::size_t seed = 0;
        Branch branch = Branch::k_max;
        std::string message;
    };
    std::vector<CurvatureLine> lines;  // seed-major, k_max then k_min
    std::vector<std::size_t> seed_of_line;
    std::vector<Failure> failures;
};

// Both branches through every seed; per-seed errors are collected.
inline NetResult curvature_net(const SurfacePatch& surf, const std::vector<Vec2>& seeds, const TraceOptions& o = {}) {
    NetResult net;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        for (Branch b : {Branch::k_max, Branch::k_min}) {
            try {
                net.lines.push_back(trace_line(surf, seeds[i], b, o));
                net.seed_of_line.push_back(i);
            } catch (const Error& e) {
                net.failures.push_back({i, b, e.what()});
            }
        }
    }
    return net;
}

}  // namespace palcurv
