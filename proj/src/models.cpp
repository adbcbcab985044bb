#include "isofin/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace isofin {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::LinearBs: return "linear-bs";
        case ModelKind::Leland: return "leland";
        case ModelKind::Afv: return "afv";
    }
    return "?";
}

std::string to_string(Unknown unknown) {
    switch (unknown) {
        case Unknown::VHat: return "vhat";
        case Unknown::U: return "U";
        case Unknown::B: return "B";
        case Unknown::C: return "C";
    }
    return "?";
}

void LelandParams::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!(maturity > 0.0)) throw std::invalid_argument("maturity must be positive");
    if (!(strike > 0.0)) throw std::invalid_argument("strike must be positive");
    if (!(leland >= 0.0)) throw std::invalid_argument("Leland number must be nonnegative");
}

double leland_number(double cost, double rebalance_interval, double sigma) {
    if (!(rebalance_interval > 0.0) || !(sigma > 0.0))
        throw std::invalid_argument("rebalancing interval and sigma must be positive");
    return std::sqrt(2.0 / std::numbers::pi) * cost / (sigma * std::sqrt(rebalance_interval));
}

void AfvParams::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!(maturity > 0.0)) throw std::invalid_argument("maturity must be positive");
    if (!(s_int > 0.0)) throw std::invalid_argument("s_int must be positive");
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("eta must lie in [0,1]");
    if (recovery < 0.0 || recovery > 1.0) throw std::invalid_argument("recovery must lie in [0,1]");
    if (!(penalty > 0.0)) throw std::invalid_argument("penalty must be positive");
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (max_newton < 1) throw std::invalid_argument("max_newton must be >= 1");
    for (std::size_t i = 0; i < coupons.size(); ++i) {
        if (!(coupons[i].time > 0.0) || coupons[i].time > maturity)
            throw std::invalid_argument("coupon times must lie in (0, T]");
        if (i > 0 && !(coupons[i].time > coupons[i - 1].time))
            throw std::invalid_argument("coupon times must be strictly increasing");
    }
    for (const auto* w : {&call, &put}) {
        if (*w && ((*w)->start < 0.0 || (*w)->end > maturity || (*w)->end < (*w)->start))
            throw std::invalid_argument("constraint windows must lie inside [0, T]");
    }
}

AfvParams example_convertible() {
    AfvParams p;
    for (int i = 1; i <= 10; ++i) p.coupons.push_back({0.5 * i, 4.0});
    p.call = ConstraintWindow{2.0, 5.0, 110.0};
    p.put = ConstraintWindow{3.0, 3.0, 105.0};
    return p;
}

UnifiedCoefficients unified_coefficients(const LelandParams&, Unknown unknown) {
    if (unknown != Unknown::VHat) throw std::invalid_argument("the Leland model has only the unknown vhat");
    return {1.0, -1.0, 0.0};
}

UnifiedCoefficients unified_coefficients(const AfvParams& p, Unknown unknown) {
    const double half_var = 0.5 * p.sigma * p.sigma;
    const double adv = p.r + p.hazard * p.eta - half_var;
    switch (unknown) {
        case Unknown::U:
        case Unknown::C: return {half_var, adv, p.r + p.hazard};
        case Unknown::B: return {half_var, adv, p.r + p.hazard - p.recovery * p.hazard};
        case Unknown::VHat: break;
    }
    throw std::invalid_argument("the AFV model has unknowns U, B and C");
}

LelandPoint leland_transform(double S, double t, double V, const LelandParams& p) {
    if (!(S > 0.0)) throw std::domain_error("S must be positive");
    const double tau = 0.5 * p.sigma * p.sigma * (p.maturity - t);
    const double kt = p.kappa() * tau;
    return {std::log(S) + kt, tau, std::exp(kt) * V};
}

MarketPoint leland_inverse(double x, double tau, double vhat, const LelandParams& p) {
    const double kt = p.kappa() * tau;
    return {std::exp(x - kt), p.maturity - 2.0 * tau / (p.sigma * p.sigma), std::exp(-kt) * vhat};
}

LelandPoint afv_transform(double S, double t, double V, const AfvParams& p) {
    if (!(S > 0.0)) throw std::domain_error("S must be positive");
    return {std::log(S / p.s_int), p.maturity - t, V};
}

MarketPoint afv_inverse(double x, double tau, double value, const AfvParams& p) {
    return {p.s_int * std::exp(x), p.maturity - tau, value};
}

double leland_initial(double x, const LelandParams& p) { return std::max(std::exp(x) - p.strike, 0.0); }

double leland_left_boundary(double, double, const LelandParams&) { return 0.0; }

double leland_right_boundary(double x, double, const LelandParams& p) { return std::exp(x) - p.strike; }

AfvValues afv_terminal(double S, const AfvParams& p) {
    const double redemption = p.face + p.final_coupon;
    const double conv = p.conversion * S;
    return {redemption >= conv ? redemption : conv, redemption, std::max(conv - redemption, 0.0)};
}

double accrued_interest(double t, const std::vector<Coupon>& schedule, AccrualAtPayment at_payment) {
    if (schedule.empty()) return 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const double ti = schedule[i].time;
        const bool last = i + 1 == schedule.size();
        if (t < ti || last || (t == ti && at_payment == AccrualAtPayment::Cum)) {
            if (t == ti && at_payment == AccrualAtPayment::Ex) return 0.0;
            const double s = std::clamp(t, prev, ti);
            return schedule[i].amount * (s - prev) / (ti - prev);
        }
        prev = ti;
    }
    return 0.0;
}

DefaultSources default_source_terms(double x, double B, const AfvParams& p) {
    const double equity = p.conversion * p.s_int * std::exp(x) * (1.0 - p.eta);
    const double rb = p.recovery * B;
    return {std::max(equity, rb), std::max(equity - rb, 0.0)};
}

double ConstraintState::ustar_put(double S, double k) const { return std::max(put_dirty, k * S); }

double ConstraintState::ustar_call(double S, double k) const { return std::max(call_dirty, k * S); }

namespace {

bool window_active(const ConstraintWindow& w, double t, double dt, bool snap) {
    if (!w.degenerate()) return w.contains(t);
    if (!snap) return false;
    const double d = t - w.start;
    return d > -0.5 * dt && d <= 0.5 * dt;
}

}  // namespace

ConstraintState constraint_state(const AfvParams& p, double t, double dt) {
    ConstraintState s;
    s.t = t;
    s.tau = p.maturity - t;
    const double acc = accrued_interest(t, p.coupons, p.accrual_at_payment);
    if (p.call && window_active(*p.call, t, dt, p.snap_point_windows)) s.call_dirty = p.call->clean_price + acc;
    if (p.put && window_active(*p.put, t, dt, p.snap_point_windows)) s.put_dirty = p.put->clean_price + acc;
    return s;
}

void apply_B_constraints(std::vector<double>& B, const std::vector<double>& C, const ConstraintState& state) {
    if (B.size() != C.size()) throw std::invalid_argument("B and C slices differ in length");
    for (std::size_t i = 0; i < B.size(); ++i) {
        if (state.call_active()) B[i] = std::min(B[i], state.call_dirty);
        if (state.put_active()) B[i] = std::max(B[i], state.put_dirty - C[i]);
    }
}

void apply_joint_constraints(std::vector<double>& B, const std::vector<double>& C, const ConstraintState& state,
                             const std::vector<double>& S, double conversion) {
    if (B.size() != C.size() || B.size() != S.size()) throw std::invalid_argument("slices differ in length");
    for (std::size_t i = 0; i < B.size(); ++i) {
        const double conv = conversion * S[i];
        if (state.call_active()) B[i] = std::min(B[i], std::max(state.call_dirty, conv) - C[i]);
        B[i] = std::max(B[i], conv - C[i]);
    }
}

PenaltyTerms penalty_terms(const std::vector<double>& U, const std::vector<double>& ustar_put,
                           const std::vector<double>& ustar_call, double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("penalty parameter must be positive");
    const std::size_t n = U.size();
    if (ustar_put.size() != n || ustar_call.size() != n) throw std::invalid_argument("slices differ in length");
    PenaltyTerms out;
    out.forcing.assign(n, 0.0);
    out.alpha_put.assign(n, 0.0);
    out.alpha_call.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (ustar_put[i] - U[i] >= 0.0) {
            out.alpha_put[i] = 1.0;
            out.forcing[i] += rho * (ustar_put[i] - U[i]);
        }
        if (U[i] - ustar_call[i] >= 0.0) {
            out.alpha_call[i] = 1.0;
            out.forcing[i] -= rho * (U[i] - ustar_call[i]);
        }
    }
    return out;
}

double payoff_misfit(const NurbsBasis& basis, const std::function<double(double)>& payoff_xi, int samples_per_span) {
    const auto g = greville_abscissae(basis.knots());
    std::vector<double> c(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) c[i] = payoff_xi(g[i]);
    const auto bp = basis.knots().breakpoints();
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
        for (int q = 0; q < samples_per_span; ++q) {
            const double xi = bp[k] + (bp[k + 1] - bp[k]) * (q + 0.5) / samples_per_span;
            const double e = evaluate_expansion(basis, c, xi) - payoff_xi(xi);
            s += e * e;
        }
    }
    return s;
}

std::vector<double> calibrate_weights(const KnotVector& knots, const std::function<double(double)>& payoff_xi,
                                      const CalibrationOptions& opt) {
    std::vector<double> w(knots.n_basis(), 1.0);
    auto misfit = [&](const std::vector<double>& ww) {
        return payoff_misfit(NurbsBasis(knots, ww), payoff_xi, opt.samples_per_span);
    };
    double best = misfit(w);
    double step = opt.initial_step;
    for (int sweep = 0; sweep < opt.max_sweeps && step > opt.min_step; ++sweep) {
        bool improved = false;
        for (std::size_t i = 0; i < w.size(); ++i) {
            for (double f : {step, 1.0 / step}) {
                const double trial = std::clamp(w[i] * f, opt.lower, opt.upper);
                if (trial == w[i]) continue;
                const double old = w[i];
                w[i] = trial;
                const double m = misfit(w);
                if (m < best) {
                    best = m;
                    improved = true;
                    break;
                }
                w[i] = old;
            }
        }
        if (!improved) step = std::sqrt(step);
    }
    return w;
}

}  // namespace isofin
