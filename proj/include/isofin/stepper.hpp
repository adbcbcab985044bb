#pragma once

#include <map>
#include <memory>
#include <vector>

#include "isofin/assembly.hpp"
#include "isofin/banded.hpp"
#include "isofin/basis.hpp"
#include "isofin/models.hpp"
#include "isofin/quadrature.hpp"

namespace isofin {

/// θ-scheme settings. θ weights level m+1; the first `rannacher_steps` steps use θ = 1.
struct SchemeConfig {
    double theta = 0.5;
    int rannacher_steps = 2;
    int n_steps = 100;
    double horizon = 1.0;

    double dt() const { return horizon / n_steps; }
    double theta_for_step(int m) const { return m < rannacher_steps ? 1.0 : theta; }
    void validate() const;
};

/// How the initial coefficients are taken from the payoff.
enum class InitialMode {
    Nodal,        ///< c_i = payoff(g_i)
    Interpolate,  ///< Σ_j c_j R_j(g_i) = payoff(g_i)
};

/// How pointwise nonlinear terms become basis coefficients.
enum class SourceProjection {
    Collocation,  ///< group_project at the Greville abscissae
    Nodal,        ///< coefficients used as point values
};

enum class SliceRetention {
    All,   ///< every time level
    Ends,  ///< first slice plus the last two
};

/// Basis, map, assembled matrices and Greville data shared by runs on one mesh.
struct Discretization {
    NurbsBasis basis;
    PhysicalMap map;
    QuadratureRule rule;
    GalerkinSystem system;
    Collocator collocator;
    std::vector<double> greville_xi;
    std::vector<double> greville_x;

    Discretization(NurbsBasis basis, PhysicalMap map, int quadrature_order = 5);
    int n_basis() const { return basis.n_basis(); }
    double xi_of(double x) const { return map.to_parameter(x); }
};

struct RunOptions {
    SchemeConfig scheme;
    InitialMode initial = InitialMode::Nodal;
    SourceProjection projection = SourceProjection::Collocation;
    SliceRetention retention = SliceRetention::All;
};

/// Full coefficient vectors (boundary entries first and last) per unknown at one level.
struct TimeSlice {
    int step = 0;
    double tau = 0.0;
    std::map<Unknown, std::vector<double>> fields;

    const std::vector<double>& operator[](Unknown u) const { return fields.at(u); }
    std::vector<double> interior(Unknown u) const;
};

struct SolutionSurface {
    ModelKind model = ModelKind::Leland;
    std::shared_ptr<const Discretization> disc;
    LelandParams leland;
    AfvParams afv;
    RunOptions options;
    std::vector<TimeSlice> slices;
    std::vector<int> newton_iterations;  ///< per step (AFV only)
    std::vector<int> coupon_steps;       ///< step indices at which a coupon was injected

    double dt() const { return options.scheme.dt(); }
    Unknown primary() const { return model == ModelKind::Afv ? Unknown::U : Unknown::VHat; }
    const TimeSlice& final_slice() const { return slices.back(); }
};

/// Υ1 K + Υ2 N + Υ3 M, so that M w_τ = -A w + sources.
InteriorOperator compose_operator(const GalerkinSystem& system, const UnifiedCoefficients& coeffs);

/// θ-scheme for M w_τ = -A w + M s with factorizations cached per θ.
class LinearStepper {
public:
    LinearStepper(const GalerkinSystem& system, const UnifiedCoefficients& coeffs, double dt,
                  const std::vector<double>& thetas);

    /// One step from full vector w; returns the full vector at m+1 with the given
    /// boundary values. Sources are full coefficient vectors or null.
    std::vector<double> step(const std::vector<double>& w, double first_next, double last_next, double theta,
                             const std::vector<double>* src_m = nullptr,
                             const std::vector<double>* src_next = nullptr) const;

    /// Right-hand side of the interior system for the same step.
    std::vector<double> rhs(const std::vector<double>& w, double first_next, double last_next, double theta,
                            const std::vector<double>* src_m, const std::vector<double>* src_next) const;

    /// M + θΔτA on the interior.
    BandedMatrix lhs_matrix(double theta) const;
    const BandedLU& factor(double theta) const;
    const InteriorOperator& A() const { return A_; }
    double dt() const { return dt_; }

private:
    const GalerkinSystem* sys_;
    InteriorOperator A_;
    double dt_;
    std::map<double, BandedLU> lu_;
};

std::vector<double> step_linear(const GalerkinSystem& system, const UnifiedCoefficients& coeffs,
                                const std::vector<double>& w, double first_next, double last_next, double dt,
                                double theta);

/// Linearized Leland step: the auxiliary ṽ is taken from level m.
class LelandStepper {
public:
    LelandStepper(const Discretization& disc, const LelandParams& params, double dt, const std::vector<double>& thetas,
                  SourceProjection projection);

    /// ṽ = -M^{-1} A v̂ on the interior; boundary entries are zero.
    std::vector<double> auxiliary(const std::vector<double>& vhat) const;
    std::vector<double> step(const std::vector<double>& vhat, double theta, double tau_next) const;

private:
    const Discretization* disc_;
    LelandParams params_;
    SourceProjection projection_;
    LinearStepper linear_;
    BandedLU mass_lu_;
};

/// Values at x_min advanced by one θ-step of the S = 0 ODEs.
AfvValues step_afv_boundary(const AfvValues& at_m, const AfvParams& params, double dt, double theta);

struct NewtonResult {
    std::vector<double> U;  ///< interior coefficients
    int iterations = 0;
    double last_update = 0.0;
};

/// Algorithm for one AFV level: B, C, constraints, penalty Newton for U, coupons.
class AfvStepper {
public:
    AfvStepper(const Discretization& disc, const AfvParams& params, double dt, const std::vector<double>& thetas,
               SourceProjection projection);

    TimeSlice step(const TimeSlice& prev, double theta, int* newton_iterations = nullptr,
                   bool* coupon_paid = nullptr) const;

    /// Penalized solve of A1 U = rhs + ρΔτ M forcing(U) by Newton from `guess`.
    NewtonResult newton_solve_U(const std::vector<double>& guess, const std::vector<double>& rhs,
                                const ConstraintState& state, double theta) const;

    /// Stock prices at the Greville abscissae.
    const std::vector<double>& S() const { return S_; }
    /// Coupon amount paid at the level ending the step from t_prev to t_next (0 if none).
    double coupon_between(double t_prev, double t_next) const;

private:
    std::vector<double> source_coeffs(const std::vector<double>& B, bool delta) const;

    const Discretization* disc_;
    AfvParams params_;
    SourceProjection projection_;
    double dt_;
    LinearStepper u_;
    LinearStepper b_;
    std::vector<double> S_;
};

SolutionSurface run_leland(std::shared_ptr<const Discretization> disc, const LelandParams& params,
                           const RunOptions& options, ModelKind kind = ModelKind::Leland);
SolutionSurface run_afv(std::shared_ptr<const Discretization> disc, const AfvParams& params,
                        const RunOptions& options);

/// Initial coefficients of the Leland model (boundary entries set from the boundary data).
std::vector<double> leland_initial_slice(const Discretization& disc, const LelandParams& params, InitialMode mode);
TimeSlice afv_initial_slice(const Discretization& disc, const AfvParams& params, InitialMode mode);

/// Price in market variables at stock price S from one slice of the surface.
double price_at(const SolutionSurface& surface, const TimeSlice& slice, double S);
/// Calendar time of a slice.
double calendar_time(const SolutionSurface& surface, const TimeSlice& slice);
/// Stock price at the Greville image closest to S at the given slice.
double nearest_greville_S(const SolutionSurface& surface, const TimeSlice& slice, double S);
/// Greville abscissae mapped to stock prices at the given slice.
std::vector<double> greville_S(const SolutionSurface& surface, const TimeSlice& slice);

}  // namespace isofin
