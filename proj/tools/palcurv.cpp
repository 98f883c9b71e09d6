// palcurv: curvature maps, lines of curvature and compatibility reports for
// parametric surfaces (progressive addition lens model and analytic tests).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "palcurv/palcurv.hpp"

namespace fs = std::filesystem;
using namespace palcurv;

namespace {

struct Cli {
    std::string config;
    std::string out = ".";
    double step_mm = 0.05;
    double ds_mm = 0.1;
    double umbilic_tol_D = kDefaultUmbilicTol;
    double kg_thresh = 1e-3;
};

// Numerical failure with the offending location.
struct PointFailure {
    std::string where;
    std::string what;
};

std::string seed_label(const io::RunConfig& c, const Vec2& s) {
    char buf[96];
    const char* unit = c.angular_chart ? "rad" : "mm";
    std::snprintf(buf, sizeof buf, "(%.6g, %.6g) %s", c.chart_out(s.x()), c.chart_out(s.y()), unit);
    return buf;
}

std::string file_name(const std::string& prefix, std::size_t seed, Branch b) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu_%s.csv", prefix.c_str(), seed, to_string(b).c_str());
    return buf;
}

void emit(const fs::path& dir, const std::string& name, const std::string& text) {
    io::write_text((dir / name).string(), text);
}

CurvatureLine traced(const io::RunConfig& c, const Vec2& seed, Branch b) {
    const auto raw = trace_line(c.surface, seed, b, c.trace_options());
    return reparametrize_arclength(c.surface, raw, c.ds_mm * io::kMm, c.umbilic_tol_D);
}

int run_map(const io::RunConfig& c, const fs::path& out) {
    const auto g = grid_map(c.surface, c.nx, c.ny, c.umbilic_tol_D);
    emit(out, "map.csv", io::to_csv(io::map_table(c, g)));
    emit(out, "map.gp", io::gnuplot_map("map.csv", c.angular_chart));
    return 0;
}

// Runs fn(seed index, branch, line) over every configured seed and branch,
// collecting per-line numerical failures.
template <class Fn>
std::vector<PointFailure> for_each_line(const io::RunConfig& c, const std::vector<Branch>& branches, Fn&& fn) {
    std::vector<PointFailure> fails;
    for (std::size_t k = 0; k < c.seeds.size(); ++k) {
        for (Branch b : branches) {
            try {
                fn(k, b, traced(c, c.seeds[k], b));
            } catch (const Error& e) {
                fails.push_back({"seed " + seed_label(c, c.seeds[k]) + " branch " + to_string(b), e.what()});
            }
        }
    }
    return fails;
}

std::vector<PointFailure> run_trace(const io::RunConfig& c, const fs::path& out) {
    return for_each_line(c, c.branches(), [&](std::size_t k, Branch b, const CurvatureLine& line) {
        emit(out, file_name("line", k, b), io::to_csv(io::line_table(c, line)));
    });
}

std::vector<PointFailure> run_net(const io::RunConfig& c, const fs::path& out) {
    std::vector<std::string> files;
    auto fails = for_each_line(c, {Branch::k_max, Branch::k_min}, [&](std::size_t k, Branch b, const CurvatureLine& line) {
        files.push_back(file_name("net", k, b));
        emit(out, files.back(), io::to_csv(io::line_table(c, line)));
    });
    emit(out, "net.gp", io::gnuplot_net(files, c.angular_chart));
    return fails;
}

std::vector<PointFailure> run_verify(const io::RunConfig& c, const fs::path& out) {
    std::vector<std::string> files;
    nlohmann::json summary = nlohmann::json::array();
    auto fails = for_each_line(c, c.branches(), [&](std::size_t k, Branch b, const CurvatureLine& line) {
        const auto rep = analyze_line(c.surface, line, c.compat_options());
        files.push_back(file_name("report", k, b));
        emit(out, files.back(), io::to_csv(io::report_table(rep)));
        double worst = 0.0, cmax = 0.0;
        std::size_t used = 0, degenerate = 0;
        for (const auto& r : rep) {
            cmax = std::max(cmax, r.C_direct);
            if (r.degenerate) ++degenerate;
            if (r.low_confidence || !std::isfinite(r.C_eq7)) continue;
            worst = std::max(worst, std::abs(r.C_eq7 - r.C_direct));
            ++used;
        }
        summary.push_back({{"file", files.back()},
                           {"samples", rep.size()},
                           {"compared", used},
                           {"degenerate", degenerate},
                           {"max_abs_C_eq7_minus_C_direct_D", worst},
                           {"max_C_direct_D", cmax}});
    });
    emit(out, "verify.gp", io::gnuplot_verify(files));
    emit(out, "verify_summary.json", summary.dump(2) + "\n");
    return fails;
}

std::vector<PointFailure> run_minkwitz(const io::RunConfig& c, const fs::path& out) {
    std::vector<std::string> files;
    auto fails = for_each_line(c, c.branches(), [&](std::size_t k, Branch b, const CurvatureLine& line) {
        const auto rep = analyze_line(c.surface, line, c.compat_options());
        files.push_back(file_name("minkwitz", k, b));
        emit(out, files.back(), io::to_csv(io::minkwitz_table(rep)));
    });
    emit(out, "minkwitz.gp", io::gnuplot_minkwitz(files));
    return fails;
}

int run_functional(const io::RunConfig& c, const fs::path& out) {
    const auto& f = c.functional;
    const double ht = f.H_target_D, a = f.alpha, b = f.beta;
    const double J = functional_value(
        c.surface, [ht](double, double) { return ht; }, [a](double, double) { return a; },
        [b](double, double) { return b; }, f.nx, f.ny);
    nlohmann::json j = {{"J", J}, {"H_target_D", ht}, {"alpha", a}, {"beta", b}, {"nx", f.nx}, {"ny", f.ny}};
    emit(out, "functional.json", j.dump(2) + "\n");
    return 0;
}

int report_failures(const std::vector<PointFailure>& fails) {
    for (const auto& f : fails) std::cerr << "palcurv: numerical failure at " << f.where << ": " << f.what << "\n";
    return fails.empty() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curvature lines and cylinder compatibility on parametric surfaces"};
    app.require_subcommand(1);
    Cli cli;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"map", "principal, mean curvature and cylinder on a grid"},
        {"trace", "lines of curvature through the configured seeds"},
        {"net", "both families of lines through the configured seeds"},
        {"verify", "compatibility report along the traced lines"},
        {"minkwitz-compare", "exact and classical cylinder derivative along the traced lines"},
        {"functional", "quadrature of alpha C^2 + beta (H - H_target)^2"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        auto* s = app.add_subcommand(name, help);
        s->add_option("--config", cli.config, "surface definition (JSON)")->required();
        s->add_option("--out", cli.out, "output directory");
        s->add_option("--step-mm", cli.step_mm, "RK4 step (mm)");
        s->add_option("--ds-mm", cli.ds_mm, "arc-length resampling step (mm)");
        s->add_option("--umbilic-tol-D", cli.umbilic_tol_D, "umbilic threshold on k1 - k2 (D)");
        s->add_option("--kg-thresh", cli.kg_thresh, "geodesic curvature degeneracy threshold (1/m)");
        subs.push_back(s);
    }
    CLI11_PARSE(app, argc, argv);

    CLI::App* cmd = nullptr;
    for (auto* s : subs)
        if (s->parsed()) cmd = s;

    io::RunConfig c;
    try {
        c = io::load_config(cli.config);
    } catch (const Error& e) {
        std::cerr << "palcurv: " << e.what() << "\n";
        return 2;
    }
    // Explicit flags override values from the config file.
    if (cmd->count("--step-mm")) c.step_mm = cli.step_mm;
    if (cmd->count("--ds-mm")) c.ds_mm = cli.ds_mm;
    if (cmd->count("--umbilic-tol-D")) c.umbilic_tol_D = cli.umbilic_tol_D;
    if (cmd->count("--kg-thresh")) c.kg_thresh = cli.kg_thresh;
    if (!(c.step_mm > 0) || !(c.ds_mm > 0) || !(c.umbilic_tol_D > 0) || !(c.kg_thresh >= 0)) {
        std::cerr << "palcurv: step, spacing and tolerances must be positive\n";
        return 2;
    }
    const std::string name = cmd->get_name();
    if (name != "map" && name != "functional" && c.seeds.empty()) {
        std::cerr << "palcurv: command '" << name << "' needs seeds in the config\n";
        return 2;
    }

    const fs::path out(cli.out);
    try {
        fs::create_directories(out);
        if (name == "map") return run_map(c, out);
        if (name == "functional") return run_functional(c, out);
        if (name == "trace") return report_failures(run_trace(c, out));
        if (name == "net") return report_failures(run_net(c, out));
        if (name == "verify") return report_failures(run_verify(c, out));
        return report_failures(run_minkwitz(c, out));
    } catch (const Error& e) {
        std::cerr << "palcurv: numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "palcurv: " << e.what() << "\n";
        return 3;
    }
}
