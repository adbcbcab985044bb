#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "isofin/basis.hpp"

namespace isofin {

enum class ModelKind { LinearBs, Leland, Afv };
enum class Unknown { VHat, U, B, C };

std::string to_string(ModelKind kind);
std::string to_string(Unknown unknown);

/// European call under Leland's transaction-cost volatility adjustment. Le = 0 is
/// plain Black-Scholes.
struct LelandParams {
    double r = 0.05;
    double sigma = 0.2;
    double strike = 100.0;
    double maturity = 1.0;
    double leland = 0.0;

    double kappa() const { return 2.0 * r / (sigma * sigma); }
    /// Backward-time horizon ½σ²T of the transformed problem.
    double tau_max() const { return 0.5 * sigma * sigma * maturity; }
    void validate() const;
};

/// Le = sqrt(2/π) · c / (σ sqrt(δt)) for round-trip cost fraction c and rebalancing interval δt.
double leland_number(double cost, double rebalance_interval, double sigma);

struct Coupon {
    double time;
    double amount;
};

/// Clean price active for calendar times t in (start, end].
struct ConstraintWindow {
    double start = 0.0;
    double end = 0.0;
    double clean_price = 0.0;

    bool degenerate() const { return end <= start; }
    bool contains(double t) const { return t > start && t <= end; }
};

/// Accrued interest reported exactly on a payment date.
enum class AccrualAtPayment {
    Ex,   ///< coupon already detached: 0
    Cum,  ///< full coupon K_i
};

/// Convertible bond with default risk (bond U, bond part B, equity part C).
struct AfvParams {
    double r = 0.05;
    double sigma = 0.2;
    double hazard = 0.02;      ///< p
    double eta = 0.0;          ///< partial-default share η
    double recovery = 0.0;     ///< R̂
    double conversion = 1.0;   ///< k
    double face = 100.0;       ///< F
    double final_coupon = 4.0; ///< K_coup paid at maturity
    std::vector<Coupon> coupons;
    std::optional<ConstraintWindow> call;
    std::optional<ConstraintWindow> put;
    double penalty = 1e6;      ///< ρ
    double tolerance = 1e-6;
    int max_newton = 50;
    double s_int = 100.0;
    double maturity = 5.0;
    /// Apply a zero-width window on the single time level nearest to its date.
    bool snap_point_windows = false;
    AccrualAtPayment accrual_at_payment = AccrualAtPayment::Ex;
    /// When false the conversion floor, call and put are all ignored (no penalty, no clipping).
    bool enforce_constraints = true;

    void validate() const;
};

/// Five-year semiannual 4% convertible: call 110 after year 2, put 105 at year 3.
AfvParams example_convertible();

/// Coefficients of w_τ = Υ1 w_xx + Υ2 w_x - Υ3 w.
struct UnifiedCoefficients {
    double diffusion;
    double advection;
    double reaction;
};

UnifiedCoefficients unified_coefficients(const LelandParams& params, Unknown unknown);
UnifiedCoefficients unified_coefficients(const AfvParams& params, Unknown unknown);

struct LelandPoint {
    double x, tau, vhat;
};
struct MarketPoint {
    double S, t, V;
};

/// τ = ½σ²(T - t), x = ln S + κτ, v̂ = e^{κτ} V.
LelandPoint leland_transform(double S, double t, double V, const LelandParams& params);
MarketPoint leland_inverse(double x, double tau, double vhat, const LelandParams& params);

/// τ = T - t, x = ln(S / S_int); prices are not rescaled.
LelandPoint afv_transform(double S, double t, double V, const AfvParams& params);
MarketPoint afv_inverse(double x, double tau, double value, const AfvParams& params);

double leland_initial(double x, const LelandParams& params);
double leland_left_boundary(double x, double tau, const LelandParams& params);
double leland_right_boundary(double x, double tau, const LelandParams& params);

struct AfvValues {
    double U, B, C;
};

AfvValues afv_terminal(double S, const AfvParams& params);

/// Linear accrual since the previous payment; t_0 = 0 and times past the last
/// payment are clamped to the final bracket.
double accrued_interest(double t, const std::vector<Coupon>& schedule,
                        AccrualAtPayment at_payment = AccrualAtPayment::Cum);

struct DefaultSources {
    double delta, gamma;
};

DefaultSources default_source_terms(double x, double B, const AfvParams& params);

/// Dirty call/put levels at one time level; inactive bounds are ±infinity.
struct ConstraintState {
    double tau = 0.0;
    double t = 0.0;
    double call_dirty = std::numeric_limits<double>::infinity();
    double put_dirty = -std::numeric_limits<double>::infinity();

    bool call_active() const { return call_dirty != std::numeric_limits<double>::infinity(); }
    bool put_active() const { return put_dirty != -std::numeric_limits<double>::infinity(); }
    double ustar_put(double S, double k) const;
    double ustar_call(double S, double k) const;
};

/// Constraint levels at calendar time t. `dt` is the level spacing used to place
/// zero-width windows when params.snap_point_windows is set.
ConstraintState constraint_state(const AfvParams& params, double t, double dt);

/// B <- min(B, call) where the call is active; B <- max(B, put - C) where the put is.
void apply_B_constraints(std::vector<double>& B, const std::vector<double>& C, const ConstraintState& state);

/// Clips B so that kS <= B + C <= max(call, kS) at every entry.
void apply_joint_constraints(std::vector<double>& B, const std::vector<double>& C, const ConstraintState& state,
                             const std::vector<double>& S, double conversion);

struct PenaltyTerms {
    /// ρ(α_put (U*_put - U) - α_call (U - U*_call)); the right-hand side forcing.
    std::vector<double> forcing;
    std::vector<double> alpha_put;
    std::vector<double> alpha_call;
};

PenaltyTerms penalty_terms(const std::vector<double>& U, const std::vector<double>& ustar_put,
                           const std::vector<double>& ustar_call, double rho);

struct CalibrationOptions {
    double lower = 0.1;
    double upper = 50.0;
    int samples_per_span = 16;
    int max_sweeps = 200;
    double initial_step = 2.0;
    double min_step = 1.0 + 1e-4;
};

/// Coordinate descent on the weights: minimizes Σ (Σ_j R_j(ξ) f(g_j) - f(ξ))² over a
/// dense sample, where f is the payoff in parameter space and g the Greville abscissae.
std::vector<double> calibrate_weights(const KnotVector& knots, const std::function<double(double)>& payoff_xi,
                                      const CalibrationOptions& options = {});

/// The squared misfit minimized by calibrate_weights for a fixed basis.
double payoff_misfit(const NurbsBasis& basis, const std::function<double(double)>& payoff_xi,
                     int samples_per_span = 16);

}  // namespace isofin
