#pragma once

#include <map>
#include <string>
#include <vector>

#include "isofin/models.hpp"
#include "isofin/stepper.hpp"

namespace isofin {

/// Black-Scholes call; at maturity the payoff.
double bs_exact_call(double S, double K, double r, double sigma, double maturity);

struct BsGreeks {
    double delta, gamma, theta;  ///< theta is ∂V/∂t
};

BsGreeks bs_exact_greeks(double S, double K, double r, double sigma, double maturity);

struct FdmConfig {
    double x_min = 0.0;
    double x_max = 1.0;
    int n_intervals = 100;
    int n_steps = 100;
    double theta = 0.5;
    int rannacher_steps = 2;
};

/// Central-difference solution on a uniform grid; values at the final level.
struct FdmGrid {
    std::vector<double> x;
    double dx = 0.0;
    double dtau = 0.0;
    int n_steps = 0;
    std::map<Unknown, std::vector<double>> values;
    std::vector<std::string> warnings;

    double ratio_dx() const { return dtau / dx; }
    double ratio_dx2() const { return dtau / (dx * dx); }
    /// Piecewise-linear interpolation of the final values.
    double value_at(Unknown u, double x) const;
};

/// Transformed Leland equation with the auxiliary term frozen at level m.
FdmGrid fdm_solve_leland(const LelandParams& params, const FdmConfig& config);
/// Call price at S from a Leland grid.
double fdm_price_leland(const FdmGrid& grid, const LelandParams& params, double S);

/// Same level ordering as the IGA stepper, with pointwise sources and penalties.
FdmGrid fdm_solve_afv(const AfvParams& params, const FdmConfig& config);

/// The IGA pipeline with degree-1 uniform open knots (hat functions).
SolutionSurface p1fem_solve_leland(const LelandParams& params, double x_min, double x_max, int n_elements,
                                   const RunOptions& options, ModelKind kind = ModelKind::Leland);
SolutionSurface p1fem_solve_afv(const AfvParams& params, double x_min, double x_max, int n_elements,
                                const RunOptions& options);

/// Plain discrete 2-norm of a - b.
double misfit_epsilon(const std::vector<double>& a, const std::vector<double>& b);

/// ε between the final v̂ of an IGA surface and a P1 surface, sampled at the P1 nodes.
double leland_misfit(const SolutionSurface& iga, const SolutionSurface& p1);

}  // namespace isofin
