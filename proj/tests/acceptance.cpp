// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "palcurv/palcurv.hpp"

using namespace palcurv;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char b[64];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

CurvatureLine resampled(const SurfacePatch& s, const Vec2& seed, Branch b, double step, double ds, double len,
                        double utol = kDefaultUmbilicTol) {
    TraceOptions t;
    t.step = step;
    t.max_length = len;
    t.umbilic_tol = utol;
    return reparametrize_arclength(s, trace_line(s, seed, b, t), ds, utol);
}

// ---------------------------------------------------------------------------
// 1. Sphere and plane identities
// ---------------------------------------------------------------------------

Outcome identity_suite() {
    const std::vector<SurfacePatch> zoo = {
        {shapes::Sphere{0.5}, Domain(-1.3, 1.3, -3.0, 3.0)},
        {shapes::PolynomialHeight{}, Domain(-0.05, 0.05, -0.05, 0.05)},
    };
    double cmax = 0.0, res = 0.0;
    bool all_umbilic = true;
    for (const auto& s : zoo) {
        const auto g = grid_map(s, 51, 51);
        for (const auto& d : g.data) {
            cmax = std::max(cmax, std::abs(d.C));
            all_umbilic = all_umbilic && d.umbilic;
        }
        for (std::size_t i = 0; i < g.nx; i += 5) {
            for (std::size_t j = 0; j < g.ny; j += 5) {
                const double u = std::clamp(g.u[i], 0.95 * s.domain.u_min, 0.95 * s.domain.u_max);
                const double v = std::clamp(g.v[j], 0.95 * s.domain.v_min, 0.95 * s.domain.v_max);
                const auto r = codazzi_residual(s, u, v);
                res = std::max({res, std::abs(r.res1), std::abs(r.res2), std::abs(r.res3a), std::abs(r.res3b)});
            }
        }
    }
    Outcome o;
    o.pass = cmax < 1e-12 && all_umbilic && res < 1e-9;
    o.detail = "max C " + fmt("%.2e", cmax) + " D (tol 1e-12), umbilic everywhere: " + (all_umbilic ? "yes" : "no") +
               ", max Codazzi residual " + fmt("%.2e", res) + " (tol 1e-9)";
    return o;
}

// ---------------------------------------------------------------------------
// 2 and 6. Torus oracle suite
// ---------------------------------------------------------------------------

constexpr double kR = 2.0, kr = 1.0;

double torus_C(double th) { return kR / (kr * (kR + kr * std::cos(th))); }
double torus_dC_dth(double th) {
    const double rho = kR + kr * std::cos(th);
    return kR * std::sin(th) / (rho * rho);
}

struct TorusResiduals {
    double k = 0;      // principal curvatures, relative
    double c = 0;      // |C_eq7| vs analytic, relative
    double kg = 0;     // vector vs chart kg, 1/m
    double dc = 0;     // exact dC/ds vs analytic, relative to the line's max |dC/ds|
    std::size_t compared = 0;
};

// Residuals over samples within `window` of the seed (arc length, m).
TorusResiduals torus_suite(double ds, double step, double window) {
    const SurfacePatch s{shapes::Torus{kR, kr}, Domain(-kPi, kPi, -kPi, kPi)};
    TorusResiduals r;

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int i = 0; i < 1000; ++i) {
        const double th = ang(rng), ph = ang(rng);
        const auto c = curvature_at(s, th, ph);
        const double kmin = std::cos(th) / (kR + kr * std::cos(th));
        r.k = std::max(r.k, std::abs(c.k1 - 1.0 / kr) * kr);
        r.k = std::max(r.k, std::abs(c.k2 - kmin) / std::max(std::abs(kmin), 1e-6));
    }

    CompatibilityOptions o;
    o.ds = ds;
    o.step = step;
    for (double th : {-2.0, -0.4, 0.7, 1.9}) {
        for (Branch b : {Branch::k_min, Branch::k_max}) {
            const auto line = resampled(s, Vec2(th, 0.3), b, step, ds, 2.0 * window + 8.0 * ds);
            const auto rep = analyze_line(s, line, o);
            const auto kgv = geodesic_curvature_vector(line);
            const double s0 = line.samples[line.seed_index].s;
            double scale = 0.0;
            for (const auto& p : line.samples) scale = std::max(scale, std::abs(torus_dC_dth(p.u) * p.dir.x()));
            for (std::size_t i = 0; i < rep.size(); ++i) {
                const auto& x = rep[i];
                const auto& p = line.samples[i];
                if (x.low_confidence || std::abs(p.s - s0) > window + 1e-9) continue;
                const auto chart = geodesic_curvature_chart(s, p.u, p.v);
                const double kg_chart = b == Branch::k_min ? chart.kg_u_cte : chart.kg_v_cte;
                r.kg = std::max(r.kg, std::abs(std::abs(kgv[i].kg) - std::abs(kg_chart)));
                if (std::abs(x.kg_used) >= 1e-3) r.c = std::max(r.c, std::abs(x.C_eq7 - torus_C(p.u)) / torus_C(p.u));
                // Parallels: dC/ds = 0, measured against C per unit length.
                const double expect = torus_dC_dth(p.u) * p.dir.x();
                const double denom = b == Branch::k_max ? scale : torus_C(p.u) / kr;
                r.dc = std::max(r.dc, std::abs(x.dC_ds_eq9 - expect) / denom);
                ++r.compared;
            }
        }
    }
    return r;
}

Outcome torus_criterion(double& seconds) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = torus_suite(0.01, 0.005, 0.5);
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Outcome o;
    o.pass = r.k < 1e-8 && r.c < 1e-4 && r.kg < 1e-6 && r.dc < 1e-5 && seconds < 10.0 && r.compared > 500;
    o.detail = "k rel " + fmt("%.1e", r.k) + " (1e-8), C_eq7 rel " + fmt("%.1e", r.c) + " (1e-4), kg diff " +
               fmt("%.1e", r.kg) + " (1e-6), exact dC/ds rel " + fmt("%.1e", r.dc) + " (1e-5), " +
               std::to_string(r.compared) + " samples, " + fmt("%.2f", seconds) + " s (10 s)";
    return o;
}

Outcome convergence_criterion() {
    const auto a = torus_suite(0.1, 0.05, 0.5);
    const auto b = torus_suite(0.05, 0.025, 0.5);
    const double rc = a.c / b.c, rkg = a.kg / b.kg, rdc = a.dc / b.dc;
    Outcome o;
    o.pass = rc >= 8.0 && rkg >= 8.0 && rdc >= 8.0;
    o.detail = "ds 0.1 -> 0.05 m: C_eq7 " + fmt("%.2e", a.c) + " -> " + fmt("%.2e", b.c) + " (x" + fmt("%.1f", rc) +
               "), kg " + fmt("%.2e", a.kg) + " -> " + fmt("%.2e", b.kg) + " (x" + fmt("%.1f", rkg) + "), exact dC/ds " +
               fmt("%.2e", a.dc) + " -> " + fmt("%.2e", b.dc) + " (x" + fmt("%.1f", rdc) + "); need >= 8";
    return o;
}

// ---------------------------------------------------------------------------
// 3. Lens model
// ---------------------------------------------------------------------------

Outcome pal_criterion(double& seconds) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    o.pass = true;
    for (double L : {0.002, 0.02}) {
        const auto s = pal_surface({2.0, 2.0, L}, Domain(-0.02, 0.02, -0.02, 0.005));
        const double h0 = curvature_at(s, 0.0, 0.0).H;
        const double dh = curvature_at(s, 0.0, -L).H - h0;
        double cmax = 0.0;
        for (int i = 0; i <= 2000; ++i) cmax = std::max(cmax, curvature_at(s, -0.02 + 2e-5 * i, 0.0).C);
        const bool ok = std::abs(h0 - 2.0) < 1e-3 && std::abs(dh - 2.0) < 0.05 * 2.0 && cmax < 0.01;
        o.pass = o.pass && ok;
        o.detail += (o.detail.empty() ? "" : "; ") + std::string("L=") + fmt("%.0f", L * 1e3) + " mm: H(0,0) " +
                    fmt("%.6f", h0) + " D, dH(0,-L) " + fmt("%.4f", dh) + " D, max C on y=0 " + fmt("%.2e", cmax) + " D";
    }
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.pass = o.pass && seconds < 30.0;
    o.detail += " (tol 1e-3 D, 5%, 0.01 D; " + fmt("%.2f", seconds) + " s)";
    return o;
}

// ---------------------------------------------------------------------------
// 4 and 5. Lens test lines
// ---------------------------------------------------------------------------

struct PalLine {
    CurvatureLine line;
    std::vector<CompatibilityReport> rep;
};

PalLine pal_line(double x_mm, double y_mm) {
    const auto s = pal_surface({2.0, 2.0, 0.02}, Domain(0.0, 0.02, -0.02, 0.0));
    CompatibilityOptions o;
    o.ds = 0.1e-3;
    o.step = 0.05e-3;
    PalLine p;
    p.line = resampled(s, Vec2(x_mm * 1e-3, y_mm * 1e-3), Branch::k_max, o.step, o.ds, 0.2);
    p.rep = analyze_line(s, p.line, o);
    return p;
}

// End-of-line samples on reduced stencils are not evaluable.
bool evaluable(const CompatibilityReport& r) {
    return !r.low_confidence && std::isfinite(r.dC_ds_eq9) && std::isfinite(r.dC_ds_minkwitz);
}

double mismatch(const CompatibilityReport& r) { return std::abs(std::abs(r.dC_ds_eq9) - std::abs(r.dC_ds_minkwitz)); }

double rel_mismatch(const CompatibilityReport& r) {
    return mismatch(r) / std::max({std::abs(r.dC_ds_eq9), std::abs(r.dC_ds_minkwitz), 1e-300});
}

Outcome minkwitz_criterion(const PalLine& blue, const PalLine& red) {
    Outcome o;
    std::size_t k = 0;
    try {
        k = umbilic_approach_index(blue.rep, blue.line);
    } catch (const Error& e) {
        o.detail = std::string("blue line: ") + e.what();
        return o;
    }
    // Approach from the longer side, ordered toward the umbilic reference.
    const auto& rep = blue.rep;
    std::vector<std::size_t> seq;
    if (k >= rep.size() - 1 - k) {
        for (std::size_t i = 0; i <= k; ++i)
            if (evaluable(rep[i])) seq.push_back(i);
    } else {
        for (std::size_t i = rep.size(); i-- > k;)
            if (evaluable(rep[i])) seq.push_back(i);
    }
    bool mono = seq.size() >= 10;
    const std::size_t first = seq.size() >= 10 ? seq.size() - 10 : 0;
    for (std::size_t j = first + 1; mono && j < seq.size(); ++j) mono = mismatch(rep[seq[j]]) < mismatch(rep[seq[j - 1]]);
    const double closest = seq.empty() ? INFINITY : rel_mismatch(rep[seq.back()]);
    const bool agree = closest <= 0.10;

    double red_max = 0.0;
    const std::size_t n = red.rep.size();
    for (std::size_t i = n / 4; i < 3 * n / 4; ++i)
        if (evaluable(red.rep[i])) red_max = std::max(red_max, rel_mismatch(red.rep[i]));
    const bool differ = red_max > 0.10;

    o.pass = mono && agree && differ;
    const auto& c = seq.empty() ? rep[k] : rep[seq.back()];
    o.detail = "blue: umbilic reference at x=" + fmt("%.3f", rep[k].u * 1e3) + " mm (C " + fmt("%.4f", rep[k].C_direct) +
               " D); last 10 mismatches decreasing: " + (mono ? "yes" : "no") + "; closest x=" +
               fmt("%.3f", c.u * 1e3) + " mm: exact dC/ds " + fmt("%.3f", c.dC_ds_eq9 * 1e-3) + " vs Minkwitz " +
               fmt("%.3f", c.dC_ds_minkwitz * 1e-3) + " D/mm, rel diff " + fmt("%.2f", closest) +
               " (<= 0.10), Minkwitz/exact " + fmt("%.2f", std::abs(c.dC_ds_minkwitz / c.dC_ds_eq9)) +
               "; red mid-arc max rel diff " + fmt("%.2f", red_max) + " (> 0.10)";
    return o;
}

// Span-normalized: |FD(C_eq7) - dC/ds| <= 1e-3 max|dC/ds|, away from degenerate,
// low-confidence and near-umbilic (C < 0.1 max C) samples.
Outcome consistency_criterion(const std::vector<std::pair<std::string, const PalLine*>>& lines) {
    Outcome o;
    o.pass = true;
    for (const auto& [name, p] : lines) {
        const auto& rep = p->rep;
        const std::size_t n = rep.size();
        const double h = p->line.samples[1].s - p->line.samples[0].s;
        double cmax = 0.0;
        for (const auto& r : rep) cmax = std::max(cmax, r.C_direct);
        std::vector<double> c7(n);
        for (std::size_t i = 0; i < n; ++i) c7[i] = rep[i].C_eq7;
        const auto d1 = numerics::central_stencil(1, 4, h);
        double worst = 0.0, scale = 0.0;
        std::size_t used = 0;
        std::vector<std::pair<double, double>> pairs;
        for (std::size_t i = 2; i + 2 < n; ++i) {
            bool ok = !rep[i].low_confidence && std::isfinite(rep[i].dC_ds_eq9);
            for (std::size_t k = i - 2; ok && k <= i + 2; ++k)
                ok = std::isfinite(c7[k]) && !rep[k].degenerate && rep[k].C_direct >= 0.1 * cmax;
            if (!ok) continue;
            pairs.push_back({d1.apply(c7, i), rep[i].dC_ds_eq9});
            scale = std::max(scale, std::abs(rep[i].dC_ds_eq9));
        }
        for (const auto& [fd, exact] : pairs) {
            worst = std::max(worst, std::abs(fd - exact));
            ++used;
        }
        const double rel = scale > 0 ? worst / scale : INFINITY;
        const bool ok = used > 20 && rel <= 1e-3;
        o.pass = o.pass && ok;
        o.detail += (o.detail.empty() ? "" : "; ") + name + ": " + std::to_string(used) + "/" + std::to_string(n) +
                    " samples, max rel " + fmt("%.2e", rel);
    }
    o.detail += " (tol 1e-3)";
    return o;
}

// ---------------------------------------------------------------------------
// 7. CLI determinism
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism_criterion() {
    const fs::path base = fs::temp_directory_path() / ("palcurv_accept_" + std::to_string(::getpid()));
    fs::remove_all(base);
    const std::string cfg = std::string(PALCURV_CONFIG_DIR) + "/pal_lines.json";
    Outcome o;
    o.pass = true;
    std::size_t files = 0;
    for (const std::string cmd : {"map", "trace", "net", "verify", "minkwitz-compare", "functional"}) {
        for (const char* run : {"a", "b"}) {
            const auto dir = base / cmd / run;
            const std::string line = std::string(PALCURV_CLI_PATH) + " " + cmd + " --config " + cfg + " --out " +
                                     dir.string() + " > /dev/null 2>&1";
            const int st = std::system(line.c_str());
            if (!WIFEXITED(st) || WEXITSTATUS(st) != 0) {
                o.pass = false;
                o.detail += cmd + " exited with status " + std::to_string(WEXITSTATUS(st)) + "; ";
            }
        }
        const auto a = base / cmd / "a", b = base / cmd / "b";
        if (!fs::exists(a)) continue;
        for (const auto& e : fs::directory_iterator(a)) {
            ++files;
            if (slurp(e.path()) != slurp(b / e.path().filename())) {
                o.pass = false;
                o.detail += cmd + "/" + e.path().filename().string() + " differs; ";
            }
        }
    }
    fs::remove_all(base);
    o.detail += std::to_string(files) + " files from 6 commands compared byte for byte";
    return o;
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        if (!o.pass) ++failed;
        std::printf("criterion %d [%s] %s: %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "identity suite", [] {
        const auto t0 = std::chrono::steady_clock::now();
        auto o = identity_suite();
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.pass = o.pass && sec < 1.0;
        o.detail += ", " + fmt("%.3f", sec) + " s (1 s)";
        return o;
    });
    report(2, "torus oracle", [] {
        double sec = 0;
        return torus_criterion(sec);
    });
    report(3, "lens model", [] {
        double sec = 0;
        return pal_criterion(sec);
    });

    PalLine blue, red;
    bool lines_ok = true;
    std::string line_error;
    try {
        blue = pal_line(1.0, -19.0);
        red = pal_line(1.0, -10.0);
    } catch (const std::exception& e) {
        lines_ok = false;
        line_error = e.what();
    }
    report(4, "exact vs classical Minkwitz", [&] {
        if (!lines_ok) return Outcome{false, "tracing failed: " + line_error};
        return minkwitz_criterion(blue, red);
    });
    report(5, "self-consistency", [&] {
        if (!lines_ok) return Outcome{false, "tracing failed: " + line_error};
        return consistency_criterion({{"blue (1,-19)", &blue}, {"red (1,-10)", &red}});
    });
    report(6, "convergence", [] { return convergence_criterion(); });
    report(7, "determinism", [] { return determinism_criterion(); });

    std::printf("%d of 7 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
