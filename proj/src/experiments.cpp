#include "isofin/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "isofin/greeks.hpp"
#include "isofin/reference.hpp"

namespace isofin {

Oracle parse_oracle(const std::string& text) {
    if (text == "closed-form") return Oracle::ClosedForm;
    if (text == "p1") return Oracle::P1;
    if (text == "fdm") return Oracle::Fdm;
    if (text == "none") return Oracle::None;
    throw std::invalid_argument("unknown oracle '" + text + "' (closed-form, p1, fdm, none)");
}

NurbsBasis build_basis(const ExperimentConfig& cfg, int elements) {
    const auto& d = cfg.disc;
    KnotVector knots = d.knots == KnotMode::Uniform
                           ? make_uniform_open_knots(elements, d.degree)
                           : make_refined_open_knots(elements, d.degree, cfg.kink_xi(),
                                                     std::pow(d.kink_grading, 2.0 / elements), d.kink_multiplicity);
    switch (d.weights) {
        case WeightSource::None: return NurbsBasis(std::move(knots));
        case WeightSource::File: {
            auto w = load_weights(d.weights_file, knots.n_basis());
            return NurbsBasis(std::move(knots), std::move(w));
        }
        case WeightSource::Calibrated: {
            const auto [lo, hi] = cfg.domain();
            std::function<double(double)> payoff;
            if (cfg.model == ModelKind::Afv) {
                payoff = [&, lo = lo, hi = hi](double xi) {
                    return afv_terminal(cfg.afv.s_int * std::exp(lo + (hi - lo) * xi), cfg.afv).U;
                };
            } else {
                payoff = [&, lo = lo, hi = hi](double xi) { return leland_initial(lo + (hi - lo) * xi, cfg.leland); };
            }
            auto w = calibrate_weights(knots, payoff);
            return NurbsBasis(std::move(knots), std::move(w));
        }
    }
    throw std::logic_error("unhandled weight source");
}

std::shared_ptr<const Discretization> build_discretization(const ExperimentConfig& cfg, int elements) {
    const auto [lo, hi] = cfg.domain();
    return std::make_shared<const Discretization>(build_basis(cfg, elements), PhysicalMap(lo, hi),
                                                  cfg.disc.quadrature);
}

SolutionSurface run_model(const ExperimentConfig& cfg, std::shared_ptr<const Discretization> disc, int steps,
                          SliceRetention retention) {
    RunOptions o = cfg.run_options(steps);
    o.retention = retention;
    if (cfg.model == ModelKind::Afv) return run_afv(std::move(disc), cfg.afv, o);
    return run_leland(std::move(disc), cfg.leland, o, cfg.model);
}

Probe probe(const SolutionSurface& surface, double S) {
    const auto& s = surface.final_slice();
    Probe p;
    p.S = S;
    p.value = price_at(surface, s, S);
    p.nearest_S = nearest_greville_S(surface, s, S);
    p.nearest_value = price_at(surface, s, p.nearest_S);
    return p;
}

int thread_count() {
    if (const char* env = std::getenv("ISOFIN_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

LadderRow solve_rung(const ExperimentConfig& cfg, const Rung& rung, Oracle oracle, double S) {
    const auto t0 = std::chrono::steady_clock::now();
    LadderRow row;
    row.elements = rung.elements;
    row.steps = rung.steps;
    const auto surf = run_model(cfg, build_discretization(cfg, rung.elements), rung.steps, SliceRetention::Ends);
    row.value = price_at(surf, surf.final_slice(), S);
    const auto [lo, hi] = cfg.domain();

    switch (oracle) {
        case Oracle::None: break;
        case Oracle::ClosedForm: {
            if (cfg.model != ModelKind::LinearBs)
                throw std::invalid_argument("the closed-form oracle exists only for linear-bs");
            const auto& p = cfg.leland;
            row.oracle_value = bs_exact_call(S, p.strike, p.r, p.sigma, p.maturity);
            row.error = std::abs(row.value - *row.oracle_value);
            break;
        }
        case Oracle::P1: {
            const RunOptions o = [&] {
                RunOptions r = cfg.run_options(rung.steps);
                r.retention = SliceRetention::Ends;
                return r;
            }();
            if (cfg.model == ModelKind::Afv) {
                const auto p1 = p1fem_solve_afv(cfg.afv, lo, hi, rung.elements, o);
                row.oracle_value = price_at(p1, p1.final_slice(), S);
                row.error = std::abs(row.value - *row.oracle_value);
            } else {
                const auto p1 = p1fem_solve_leland(cfg.leland, lo, hi, rung.elements, o, cfg.model);
                row.oracle_value = price_at(p1, p1.final_slice(), S);
                // Leland ladders report the misfit of the whole final slice
                row.error = cfg.model == ModelKind::Leland ? leland_misfit(surf, p1)
                                                           : std::abs(row.value - *row.oracle_value);
            }
            break;
        }
        case Oracle::Fdm: {
            FdmConfig fc;
            fc.x_min = lo;
            fc.x_max = hi;
            fc.n_intervals = rung.elements;
            fc.n_steps = rung.steps;
            fc.theta = cfg.time.theta;
            fc.rannacher_steps = cfg.time.rannacher;
            if (cfg.model == ModelKind::Afv) {
                const auto g = fdm_solve_afv(cfg.afv, fc);
                row.oracle_value = g.value_at(Unknown::U, std::log(S / cfg.afv.s_int));
            } else {
                const auto g = fdm_solve_leland(cfg.leland, fc);
                row.oracle_value = fdm_price_leland(g, cfg.leland, S);
            }
            row.error = std::abs(row.value - *row.oracle_value);
            break;
        }
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

}  // namespace

std::vector<LadderRow> run_ladder(const ExperimentConfig& cfg, const std::vector<Rung>& rungs, Oracle oracle,
                                  double probe_S, int threads) {
    if (rungs.empty()) throw std::invalid_argument("ladder needs at least one rung");
    std::vector<LadderRow> rows(rungs.size());
    std::vector<std::exception_ptr> errors(rungs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < rungs.size(); i = next++) {
            try {
                rows[i] = solve_rung(cfg, rungs[i], oracle, probe_S);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::clamp(threads, 1, static_cast<int>(rungs.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    for (std::size_t i = 0; i < rungs.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error(fmt::format("rung {} (n_E = {}, n_tau = {}): {}", i, rungs[i].elements,
                                                 rungs[i].steps, e.what()));
        }
    }
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i - 1].error && rows[i].error && *rows[i].error > 0.0)
            rows[i].contraction = *rows[i - 1].error / *rows[i].error;
    return rows;
}

std::string csv_number(double v) { return fmt::format("{:.10g}", v); }

namespace {

void write_slice_rows(std::ostream& os, const SolutionSurface& surf, const TimeSlice& slice) {
    const auto& d = *surf.disc;
    const bool afv = surf.model == ModelKind::Afv;
    const double scale = afv ? 1.0 : std::exp(-surf.leland.kappa() * slice.tau);
    const auto S = greville_S(surf, slice);
    std::vector<std::vector<double>> cols;
    if (afv) {
        for (Unknown u : {Unknown::U, Unknown::B, Unknown::C}) cols.push_back(d.collocator.values(slice[u]));
    } else {
        cols.push_back(d.collocator.values(slice[Unknown::VHat]));
    }
    for (std::size_t i = 0; i < S.size(); ++i) {
        os << csv_number(slice.tau) << ',' << csv_number(d.greville_x[i]) << ',' << csv_number(S[i]);
        for (const auto& c : cols) os << ',' << csv_number(scale * c[i]);
        os << '\n';
    }
}

void write_surface_header(std::ostream& os, const SolutionSurface& surf) {
    os << (surf.model == ModelKind::Afv ? "tau,x,S,U,B,C\n" : "tau,x,S,U\n");
}

}  // namespace

void write_surface_csv(std::ostream& os, const SolutionSurface& surf) {
    write_surface_header(os, surf);
    for (const auto& s : surf.slices) write_slice_rows(os, surf, s);
}

void write_final_slice_csv(std::ostream& os, const SolutionSurface& surf) {
    write_surface_header(os, surf);
    write_slice_rows(os, surf, surf.final_slice());
}

void write_greeks_csv(std::ostream& os, const SolutionSurface& surf) {
    const std::size_t last = surf.slices.size() - 1;
    const auto d = delta(surf, last);
    const auto g = gamma(surf, last);
    const auto t = theta(surf, last);
    os << "S,delta,gamma,theta\n";
    for (std::size_t i = 0; i < d.S.size(); ++i)
        os << csv_number(d.S[i]) << ',' << csv_number(d.values[i]) << ',' << csv_number(g.values[i]) << ','
           << csv_number(t.values[i]) << '\n';
}

void write_ladder_csv(std::ostream& os, const std::vector<LadderRow>& rows) {
    auto opt = [](const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); };
    os << "n_elements,n_steps,value,oracle,error,contraction\n";
    for (const auto& r : rows)
        os << r.elements << ',' << r.steps << ',' << csv_number(r.value) << ',' << opt(r.oracle_value) << ','
           << opt(r.error) << ',' << opt(r.contraction) << '\n';
}

}  // namespace isofin
