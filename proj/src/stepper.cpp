#include "isofin/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace isofin {

void SchemeConfig::validate() const {
    if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in [0,1]");
    if (rannacher_steps < 0) throw std::invalid_argument("rannacher_steps must be >= 0");
    if (n_steps < 0) throw std::invalid_argument("n_steps must be >= 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("time horizon must be positive");
}

Discretization::Discretization(NurbsBasis basis_, PhysicalMap map_, int quadrature_order)
    : basis(std::move(basis_)),
      map(map_),
      rule(gauss_legendre(quadrature_order)),
      system(assemble(basis, map, rule)),
      collocator(basis),
      greville_xi(greville_abscissae(basis.knots())) {
    greville_x.reserve(greville_xi.size());
    for (double xi : greville_xi) greville_x.push_back(map.to_physical(xi));
}

std::vector<double> TimeSlice::interior(Unknown u) const {
    const auto& f = fields.at(u);
    return {f.begin() + 1, f.end() - 1};
}

InteriorOperator compose_operator(const GalerkinSystem& sys, const UnifiedCoefficients& c) {
    InteriorOperator a = combine(c.diffusion, sys.K, c.advection, sys.N);
    return combine(1.0, a, c.reaction, sys.M);
}

LinearStepper::LinearStepper(const GalerkinSystem& system, const UnifiedCoefficients& coeffs, double dt,
                             const std::vector<double>& thetas)
    : sys_(&system), A_(compose_operator(system, coeffs)), dt_(dt) {
    for (double th : thetas)
        if (!lu_.count(th)) lu_.emplace(th, lu_factor(lhs_matrix(th)));
}

BandedMatrix LinearStepper::lhs_matrix(double theta) const {
    BandedMatrix m = sys_->M.interior;
    m.add_scaled(A_.interior, theta * dt_);
    return m;
}

const BandedLU& LinearStepper::factor(double theta) const {
    auto it = lu_.find(theta);
    if (it == lu_.end()) throw std::logic_error("no factorization cached for this theta");
    return it->second;
}

std::vector<double> LinearStepper::rhs(const std::vector<double>& w, double first_next, double last_next,
                                       double theta, const std::vector<double>* src_m,
                                       const std::vector<double>* src_next) const {
    const auto& M = sys_->M;
    std::vector<double> r = M.apply_full(w);
    const auto aw = A_.apply_full(w);
    const auto lm = M.lift(first_next, last_next);
    const auto la = A_.lift(first_next, last_next);
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] -= (1.0 - theta) * dt_ * aw[i] + lm[i] + theta * dt_ * la[i];
    if (src_m || src_next) {
        std::vector<double> s(w.size(), 0.0);
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (src_m) s[j] += (1.0 - theta) * (*src_m)[j];
            if (src_next) s[j] += theta * (*src_next)[j];
        }
        const auto ms = M.apply_full(s);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] += dt_ * ms[i];
    }
    return r;
}

std::vector<double> LinearStepper::step(const std::vector<double>& w, double first_next, double last_next,
                                        double theta, const std::vector<double>* src_m,
                                        const std::vector<double>* src_next) const {
    const auto r = rhs(w, first_next, last_next, theta, src_m, src_next);
    auto it = lu_.find(theta);
    const auto inner = it != lu_.end() ? it->second.solve(r) : lu_factor(lhs_matrix(theta)).solve(r);
    std::vector<double> out(w.size());
    out.front() = first_next;
    out.back() = last_next;
    std::copy(inner.begin(), inner.end(), out.begin() + 1);
    return out;
}

std::vector<double> step_linear(const GalerkinSystem& system, const UnifiedCoefficients& coeffs,
                                const std::vector<double>& w, double first_next, double last_next, double dt,
                                double theta) {
    return LinearStepper(system, coeffs, dt, {theta}).step(w, first_next, last_next, theta);
}

LelandStepper::LelandStepper(const Discretization& disc, const LelandParams& params, double dt,
                             const std::vector<double>& thetas, SourceProjection projection)
    : disc_(&disc),
      params_(params),
      projection_(projection),
      linear_(disc.system, unified_coefficients(params, Unknown::VHat), dt, thetas),
      mass_lu_(lu_factor(disc.system.M.interior)) {}

std::vector<double> LelandStepper::auxiliary(const std::vector<double>& vhat) const {
    auto av = linear_.A().apply_full(vhat);
    for (double& v : av) v = -v;
    const auto inner = mass_lu_.solve(av);
    std::vector<double> out(vhat.size(), 0.0);
    std::copy(inner.begin(), inner.end(), out.begin() + 1);
    return out;
}

std::vector<double> LelandStepper::step(const std::vector<double>& vhat, double theta, double tau_next) const {
    const double left = leland_left_boundary(disc_->map.x_min, tau_next, params_);
    const double right = leland_right_boundary(disc_->map.x_max, tau_next, params_);
    const auto aux = auxiliary(vhat);
    std::vector<double> src;
    if (projection_ == SourceProjection::Collocation) {
        auto vals = disc_->collocator.values(aux);
        for (double& v : vals) v = std::abs(v);
        src = disc_->collocator.project(vals);
    } else {
        src.resize(aux.size());
        for (std::size_t i = 0; i < aux.size(); ++i) src[i] = std::abs(aux[i]);
    }
    for (double& v : src) v *= params_.leland;
    // |ṽ^{m+1}| is frozen at |ṽ^m|, so both θ-weights see the same source
    return linear_.step(vhat, left, right, theta, &src, &src);
}

AfvValues step_afv_boundary(const AfvValues& at, const AfvParams& p, double dt, double theta) {
    const double rb = p.r + (1.0 - p.recovery) * p.hazard;
    const double rc = p.r + p.hazard;
    const double db = 1.0 + theta * dt * rb, dc = 1.0 + theta * dt * rc;
    if (!(db > 0.0) || !(dc > 0.0)) throw std::invalid_argument("nonpositive boundary step denominator");
    AfvValues next;
    next.B = (1.0 - (1.0 - theta) * dt * rb) / db * at.B;
    next.C = (1.0 - (1.0 - theta) * dt * rc) / dc * at.C;
    // at S = 0 the default source is R̂pB (δ = R̂B)
    const double rp = p.recovery * p.hazard;
    next.U = (at.U - (1.0 - theta) * dt * (rc * at.U - rp * at.B) + theta * dt * rp * next.B) / dc;
    return next;
}

AfvStepper::AfvStepper(const Discretization& disc, const AfvParams& params, double dt,
                       const std::vector<double>& thetas, SourceProjection projection)
    : disc_(&disc),
      params_(params),
      projection_(projection),
      dt_(dt),
      u_(disc.system, unified_coefficients(params, Unknown::U), dt, thetas),
      b_(disc.system, unified_coefficients(params, Unknown::B), dt, thetas) {
    S_.reserve(disc.greville_x.size());
    for (double x : disc.greville_x) S_.push_back(params.s_int * std::exp(x));
}

double AfvStepper::coupon_between(double t_prev, double t_next) const {
    const double eps = 1e-9 * params_.maturity;
    double paid = 0.0;
    for (const auto& c : params_.coupons) {
        if (c.time >= params_.maturity - eps) continue;  // the final coupon is part of the payoff
        if (c.time >= t_next - eps && c.time < t_prev - eps) paid += c.amount;
    }
    return paid;
}

std::vector<double> AfvStepper::source_coeffs(const std::vector<double>& B, bool delta) const {
    const auto& x = disc_->greville_x;
    const std::vector<double> bvals = projection_ == SourceProjection::Collocation ? disc_->collocator.values(B) : B;
    std::vector<double> vals(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto d = default_source_terms(x[i], bvals[i], params_);
        vals[i] = params_.hazard * (delta ? d.delta : d.gamma);
    }
    return projection_ == SourceProjection::Collocation ? disc_->collocator.project(vals) : vals;
}

NewtonResult AfvStepper::newton_solve_U(const std::vector<double>& guess, const std::vector<double>& rhs,
                                        const ConstraintState& state, double theta) const {
    const int m = static_cast<int>(guess.size());
    const double k = params_.conversion, rho = params_.penalty;
    std::vector<double> up(m), uc(m);
    for (int i = 0; i < m; ++i) {
        up[i] = state.ustar_put(S_[i + 1], k);
        uc[i] = state.ustar_call(S_[i + 1], k);
    }
    const BandedMatrix a1 = u_.lhs_matrix(theta);
    const auto& M = disc_->system.M.interior;

    NewtonResult res;
    res.U = guess;
    std::vector<double> prev_put, prev_call;
    bool converged = false;
    for (int it = 0; it < params_.max_newton; ++it) {
        const PenaltyTerms pt = penalty_terms(res.U, up, uc, rho);
        if (it > 0 && pt.alpha_put == prev_put && pt.alpha_call == prev_call) {
            converged = true;
            break;
        }
        auto f = a1.multiply(res.U);
        const auto mf = M.multiply(pt.forcing);
        for (int i = 0; i < m; ++i) f[i] -= rhs[i] + dt_ * mf[i];

        bool any = false;
        BandedMatrix jac = a1;
        for (int i = 0; i < m; ++i)
            for (int j = std::max(0, i - M.lower()); j <= std::min(m - 1, i + M.upper()); ++j) {
                const double a = pt.alpha_put[j] + pt.alpha_call[j];
                if (a != 0.0) {
                    jac.at(i, j) += rho * dt_ * M(i, j) * a;
                    any = true;
                }
            }
        const auto du = any ? lu_factor(jac).solve(f) : u_.factor(theta).solve(f);
        double step = 0.0;
        for (int i = 0; i < m; ++i) {
            res.U[i] -= du[i];
            step = std::max(step, std::abs(du[i]));
        }
        res.iterations = it + 1;
        res.last_update = step;
        prev_put = pt.alpha_put;
        prev_call = pt.alpha_call;
        if (!std::isfinite(step)) break;
        if (step <= params_.tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream os;
        os << "Newton iteration did not converge in " << params_.max_newton
           << " iterations (last update " << res.last_update << ")";
        throw std::runtime_error(os.str());
    }
    return res;
}

TimeSlice AfvStepper::step(const TimeSlice& prev, double theta, int* newton_iterations, bool* coupon_paid) const {
    const auto& U = prev[Unknown::U];
    const auto& B = prev[Unknown::B];
    const auto& C = prev[Unknown::C];
    const double tau_next = prev.tau + dt_;
    const double t_prev = params_.maturity - prev.tau;
    const double t_next = params_.maturity - tau_next;

    const AfvValues left = step_afv_boundary({U.front(), B.front(), C.front()}, params_, dt_, theta);
    const ConstraintState state = constraint_state(params_, t_next, dt_);

    auto Bn = b_.step(B, left.B, B.back(), theta);
    const auto gam_m = source_coeffs(B, false);
    const auto gam_n = source_coeffs(Bn, false);
    auto Cn = u_.step(C, left.C, C.back(), theta, &gam_m, &gam_n);
    if (params_.enforce_constraints) apply_B_constraints(Bn, Cn, state);

    const auto del_m = source_coeffs(B, true);
    const auto del_n = source_coeffs(Bn, true);
    const auto rhs = u_.rhs(U, left.U, U.back(), theta, &del_m, &del_n);
    const auto guess = u_.factor(theta).solve(rhs);
    NewtonResult nr;
    if (params_.enforce_constraints) nr = newton_solve_U(guess, rhs, state, theta);
    else nr.U = guess;

    std::vector<double> Un(U.size());
    Un.front() = left.U;
    Un.back() = U.back();
    std::copy(nr.U.begin(), nr.U.end(), Un.begin() + 1);

    if (params_.enforce_constraints) apply_joint_constraints(Bn, Cn, state, S_, params_.conversion);

    const double coupon = coupon_between(t_prev, t_next);
    if (coupon != 0.0) {
        for (double& v : Un) v += coupon;
        for (double& v : Bn) v += coupon;
    }
    if (newton_iterations) *newton_iterations = nr.iterations;
    if (coupon_paid) *coupon_paid = coupon != 0.0;

    TimeSlice out;
    out.step = prev.step + 1;
    out.tau = tau_next;
    out.fields[Unknown::U] = std::move(Un);
    out.fields[Unknown::B] = std::move(Bn);
    out.fields[Unknown::C] = std::move(Cn);
    return out;
}

namespace {

std::vector<double> initial_coeffs(const Discretization& disc, const std::vector<double>& values, InitialMode mode) {
    return mode == InitialMode::Nodal ? values : disc.collocator.project(values);
}

template <class Stepper>
void drive(SolutionSurface& surf, TimeSlice first, Stepper&& advance) {
    const auto& sc = surf.options.scheme;
    surf.slices.clear();
    surf.slices.push_back(first);
    TimeSlice prev = std::move(first);
    TimeSlice before_prev;
    for (int m = 0; m < sc.n_steps; ++m) {
        TimeSlice next;
        try {
            next = advance(prev, sc.theta_for_step(m), m);
        } catch (const std::exception& e) {
            throw std::runtime_error("step " + std::to_string(m + 1) + ": " + e.what());
        }
        for (const auto& [u, f] : next.fields)
            for (double v : f)
                if (!std::isfinite(v))
                    throw std::runtime_error("step " + std::to_string(m + 1) + ": non-finite value in " +
                                             to_string(u));
        if (surf.options.retention == SliceRetention::All) surf.slices.push_back(next);
        before_prev = std::move(prev);
        prev = std::move(next);
    }
    if (surf.options.retention == SliceRetention::Ends && sc.n_steps > 0) {
        if (sc.n_steps >= 2) surf.slices.push_back(std::move(before_prev));
        surf.slices.push_back(std::move(prev));
    }
}

}  // namespace

std::vector<double> leland_initial_slice(const Discretization& disc, const LelandParams& params, InitialMode mode) {
    std::vector<double> vals(disc.n_basis());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = leland_initial(disc.greville_x[i], params);
    auto c = initial_coeffs(disc, vals, mode);
    c.front() = leland_left_boundary(disc.map.x_min, 0.0, params);
    c.back() = leland_right_boundary(disc.map.x_max, 0.0, params);
    return c;
}

TimeSlice afv_initial_slice(const Discretization& disc, const AfvParams& params, InitialMode mode) {
    const int n = disc.n_basis();
    std::vector<double> u(n), b(n), c(n);
    for (int i = 0; i < n; ++i) {
        const auto v = afv_terminal(params.s_int * std::exp(disc.greville_x[i]), params);
        u[i] = v.U;
        b[i] = v.B;
        c[i] = v.C;
    }
    TimeSlice s;
    s.fields[Unknown::U] = initial_coeffs(disc, u, mode);
    s.fields[Unknown::B] = initial_coeffs(disc, b, mode);
    s.fields[Unknown::C] = initial_coeffs(disc, c, mode);
    // conversion value at the far boundary
    const double conv = params.conversion * params.s_int * std::exp(disc.map.x_max);
    s.fields[Unknown::U].back() = conv;
    s.fields[Unknown::B].back() = 0.0;
    s.fields[Unknown::C].back() = conv;
    return s;
}

SolutionSurface run_leland(std::shared_ptr<const Discretization> disc, const LelandParams& params,
                           const RunOptions& options, ModelKind kind) {
    params.validate();
    if (kind == ModelKind::Afv) throw std::invalid_argument("run_leland handles the linear and Leland models");
    if (kind == ModelKind::LinearBs && params.leland != 0.0)
        throw std::invalid_argument("the linear model requires a zero Leland number");
    SolutionSurface surf;
    surf.model = kind;
    surf.disc = disc;
    surf.leland = params;
    surf.options = options;
    surf.options.scheme.horizon = params.tau_max();
    surf.options.scheme.validate();
    const double dt = surf.options.scheme.dt();

    TimeSlice first;
    first.fields[Unknown::VHat] = leland_initial_slice(*disc, params, options.initial);
    if (surf.options.scheme.n_steps == 0) {
        surf.slices.push_back(std::move(first));
        return surf;
    }
    const LelandStepper stepper(*disc, params, dt, {1.0, surf.options.scheme.theta}, options.projection);
    drive(surf, std::move(first), [&](const TimeSlice& prev, double theta, int) {
        TimeSlice next;
        next.step = prev.step + 1;
        next.tau = prev.tau + dt;
        next.fields[Unknown::VHat] = stepper.step(prev[Unknown::VHat], theta, next.tau);
        return next;
    });
    return surf;
}

SolutionSurface run_afv(std::shared_ptr<const Discretization> disc, const AfvParams& params,
                        const RunOptions& options) {
    params.validate();
    SolutionSurface surf;
    surf.model = ModelKind::Afv;
    surf.disc = disc;
    surf.afv = params;
    surf.options = options;
    surf.options.scheme.horizon = params.maturity;
    surf.options.scheme.validate();
    const double dt = surf.options.scheme.dt();

    TimeSlice first = afv_initial_slice(*disc, params, options.initial);
    if (surf.options.scheme.n_steps == 0) {
        surf.slices.push_back(std::move(first));
        return surf;
    }
    const AfvStepper stepper(*disc, params, dt, {1.0, surf.options.scheme.theta}, options.projection);
    drive(surf, std::move(first), [&](const TimeSlice& prev, double theta, int m) {
        int its = 0;
        bool coupon = false;
        TimeSlice next = stepper.step(prev, theta, &its, &coupon);
        surf.newton_iterations.push_back(its);
        if (coupon) surf.coupon_steps.push_back(m + 1);
        return next;
    });
    return surf;
}

double calendar_time(const SolutionSurface& surf, const TimeSlice& slice) {
    if (surf.model == ModelKind::Afv) return surf.afv.maturity - slice.tau;
    const double s2 = surf.leland.sigma * surf.leland.sigma;
    return surf.leland.maturity - 2.0 * slice.tau / s2;
}

namespace {

double x_of_S(const SolutionSurface& surf, const TimeSlice& slice, double S) {
    if (!(S > 0.0)) throw std::domain_error("S must be positive");
    if (surf.model == ModelKind::Afv) return std::log(S / surf.afv.s_int);
    return std::log(S) + surf.leland.kappa() * slice.tau;
}

double S_of_x(const SolutionSurface& surf, const TimeSlice& slice, double x) {
    if (surf.model == ModelKind::Afv) return surf.afv.s_int * std::exp(x);
    return std::exp(x - surf.leland.kappa() * slice.tau);
}

}  // namespace

double price_at(const SolutionSurface& surf, const TimeSlice& slice, double S) {
    const auto& d = *surf.disc;
    const double x = x_of_S(surf, slice, S);
    if (x < d.map.x_min || x > d.map.x_max) throw std::domain_error("S lies outside the computational domain");
    const double v = evaluate_expansion(d.basis, slice[surf.primary()], d.map.to_parameter(x));
    if (surf.model == ModelKind::Afv) return v;
    return std::exp(-surf.leland.kappa() * slice.tau) * v;
}

std::vector<double> greville_S(const SolutionSurface& surf, const TimeSlice& slice) {
    std::vector<double> out;
    for (double x : surf.disc->greville_x) out.push_back(S_of_x(surf, slice, x));
    return out;
}

double nearest_greville_S(const SolutionSurface& surf, const TimeSlice& slice, double S) {
    const auto s = greville_S(surf, slice);
    return *std::min_element(s.begin(), s.end(),
                             [&](double a, double b) { return std::abs(a - S) < std::abs(b - S); });
}

}  // namespace isofin
