// Command-line driver: price, converge, greeks, validate.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "isofin/config.hpp"
#include "isofin/experiments.hpp"
#include "isofin/greeks.hpp"
#include "isofin/properties.hpp"

namespace fs = std::filesystem;
using namespace isofin;

namespace {

struct Common {
    std::string config;
    std::string out;
    double probe_s = 0.0;
    std::string oracle;
};

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = load_config(c.config);
    if (!c.out.empty()) cfg.output.dir = c.out;
    if (c.probe_s > 0.0) cfg.output.probe_s = c.probe_s;
    return cfg;
}

/// Files are rendered in memory first so a failed run leaves nothing behind.
void write_all(const std::string& dir, const std::map<std::string, std::string>& files) {
    fs::create_directories(dir);
    for (const auto& [name, body] : files) {
        std::ofstream os(fs::path(dir) / name, std::ios::binary);
        os << body;
        if (!os) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    }
}

void print_probe(const Probe& p) {
    fmt::print("value at S = {:.4f}: {:.4f}\n", p.S, p.value);
    fmt::print("nearest Greville S = {:.4f}: {:.4f}\n", p.nearest_S, p.nearest_value);
}

int cmd_price(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const auto disc = build_discretization(cfg, cfg.disc.elements);
    const auto surf = run_model(cfg, disc, cfg.time.steps, cfg.output.surface ? SliceRetention::All : SliceRetention::Ends);
    std::map<std::string, std::string> files;
    if (cfg.output.surface) {
        std::ostringstream os;
        write_surface_csv(os, surf);
        files["surface.csv"] = os.str();
    }
    {
        std::ostringstream os;
        write_final_slice_csv(os, surf);
        files["slice_t0.csv"] = os.str();
    }
    if (disc->basis.degree() >= 2 && surf.slices.size() >= 2) {
        std::ostringstream os;
        write_greeks_csv(os, surf);
        files["greeks.csv"] = os.str();
    }
    const Probe p = probe(surf, cfg.output.probe_s);
    write_all(cfg.output.dir, files);
    fmt::print("model {}, n_E = {}, n_tau = {}\n", to_string(surf.model), cfg.disc.elements, cfg.time.steps);
    print_probe(p);
    return 0;
}

Oracle default_oracle(ModelKind m) {
    switch (m) {
        case ModelKind::LinearBs: return Oracle::ClosedForm;
        case ModelKind::Leland: return Oracle::P1;
        case ModelKind::Afv: return Oracle::None;
    }
    return Oracle::None;
}

int cmd_converge(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const Oracle oracle = c.oracle.empty() ? default_oracle(cfg.model) : parse_oracle(c.oracle);
    const std::vector<Rung> rungs =
        cfg.ladder.empty() ? std::vector<Rung>{{cfg.disc.elements, cfg.time.steps}} : cfg.ladder;
    const auto rows = run_ladder(cfg, rungs, oracle, cfg.output.probe_s, thread_count());
    std::ostringstream os;
    write_ladder_csv(os, rows);
    write_all(cfg.output.dir, {{"ladder.csv", os.str()}});
    auto opt = [](const std::optional<double>& v, const char* spec) {
        return v ? fmt::format(fmt::runtime(spec), *v) : std::string("-");
    };
    fmt::print("{:>8} {:>8} {:>12} {:>12} {:>12} {:>8}\n", "n_E", "n_tau", "value", "oracle", "error", "ratio");
    for (const auto& r : rows)
        fmt::print("{:>8} {:>8} {:>12.4f} {:>12} {:>12} {:>8}\n", r.elements, r.steps, r.value,
                   opt(r.oracle_value, "{:.4f}"), opt(r.error, "{:.6f}"), opt(r.contraction, "{:.3f}"));
    return 0;
}

int cmd_greeks(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const auto surf = run_model(cfg, build_discretization(cfg, cfg.disc.elements), cfg.time.steps, SliceRetention::Ends);
    std::ostringstream os;
    write_greeks_csv(os, surf);
    const std::size_t last = surf.slices.size() - 1;
    const double S = cfg.output.probe_s;
    const double d = delta_at(surf, last, S), g = gamma_at(surf, last, S), t = theta_at(surf, last, S);
    write_all(cfg.output.dir, {{"greeks.csv", os.str()}});
    fmt::print("at S = {:.4f}: delta {:.6f}, gamma {:.6f}, theta {:.6f}\n", S, d, g, t);
    return 0;
}

int cmd_validate() {
    bool ok = true;
    for (const auto& r : run_property_suite()) {
        fmt::print("{} {}: {:.3e} (limit {:.1e})\n", !r.gating ? "info" : r.pass ? "ok  " : "FAIL", r.name, r.measured,
                   r.tolerance);
        ok = ok && (r.pass || !r.gating);
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IGA pricing of Black-Scholes, Leland and convertible-bond models"};
    app.require_subcommand(1);
    Common c;

    auto add_common = [&](CLI::App* sub, bool with_oracle) {
        sub->add_option("--config", c.config, "experiment configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", c.out, "output directory (overrides [output] dir)");
        sub->add_option("--probe-s", c.probe_s, "stock price to report (overrides [output] probe_s)")
            ->check(CLI::PositiveNumber);
        if (with_oracle)
            sub->add_option("--oracle", c.oracle, "reference for the error column")
                ->check(CLI::IsMember({"closed-form", "p1", "fdm", "none"}));
    };
    auto* price = app.add_subcommand("price", "solve once and write surface, t = 0 slice and Greeks CSVs");
    add_common(price, false);
    auto* converge = app.add_subcommand("converge", "run the [ladder] rungs and write ladder.csv");
    add_common(converge, true);
    auto* greeks = app.add_subcommand("greeks", "write Delta, Gamma, Theta at t = 0");
    add_common(greeks, false);
    app.add_subcommand("validate", "run the invariant suite");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*price) return cmd_price(c);
        if (*converge) return cmd_converge(c);
        if (*greeks) return cmd_greeks(c);
        return cmd_validate();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
