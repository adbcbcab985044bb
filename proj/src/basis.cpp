#include "isofin/basis.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace isofin {

KnotVector::KnotVector(std::vector<double> values, int degree)
    : values_(std::move(values)), degree_(degree) {
    if (degree_ < 1) throw std::invalid_argument("knot vector degree must be >= 1");
    const int m = static_cast<int>(values_.size());
    if (m < 2 * (degree_ + 1)) throw std::invalid_argument("knot vector too short for its degree");
    for (int i = 0; i + 1 < m; ++i)
        if (!(values_[i] <= values_[i + 1])) throw std::invalid_argument("knot values must be nondecreasing");
    if (!(values_.front() < values_.back())) throw std::invalid_argument("knot vector has zero length");
    for (int i = 0; i <= degree_; ++i) {
        if (values_[i] != values_.front() || values_[m - 1 - i] != values_.back())
            throw std::invalid_argument("knot vector is not open");
    }
    if (values_[degree_ + 1] == values_.front() || values_[m - degree_ - 2] == values_.back())
        throw std::invalid_argument("end knots repeated more than degree+1 times");
    int run = 1;
    for (int i = degree_ + 2; i < m - degree_ - 1; ++i) {
        run = values_[i] == values_[i - 1] ? run + 1 : 1;
        if (run > degree_) throw std::invalid_argument("interior knot multiplicity exceeds degree");
    }
}

int KnotVector::find_span(double xi, SpanSide side) const {
    if (!(xi >= front() && xi <= back())) {
        std::ostringstream os;
        os << "parameter " << xi << " outside knot range [" << front() << ", " << back() << "]";
        throw std::domain_error(os.str());
    }
    const int n = n_basis();
    const int p = degree_;
    if (side == SpanSide::Left) {
        if (xi <= values_[p + 1]) return p;
        // first index with values[k] >= xi, then step back to a nonempty span
        auto it = std::lower_bound(values_.begin() + p + 1, values_.begin() + n + 1, xi);
        return static_cast<int>(it - values_.begin()) - 1;
    }
    if (xi >= values_[n]) return n - 1;
    auto it = std::upper_bound(values_.begin() + p, values_.begin() + n + 1, xi);
    return static_cast<int>(it - values_.begin()) - 1;
}

std::vector<double> KnotVector::breakpoints() const {
    std::vector<double> out;
    for (double v : values_)
        if (out.empty() || v != out.back()) out.push_back(v);
    return out;
}

int KnotVector::multiplicity(double v, double tol) const {
    return static_cast<int>(
        std::count_if(values_.begin(), values_.end(), [&](double u) { return std::abs(u - v) <= tol; }));
}

KnotVector make_uniform_open_knots(int n_elements, int degree) {
    if (n_elements < 1) throw std::invalid_argument("n_elements must be >= 1");
    if (degree < 1) throw std::invalid_argument("degree must be >= 1");
    std::vector<double> u(degree, 0.0);
    for (int i = 0; i <= n_elements; ++i) u.push_back(static_cast<double>(i) / n_elements);
    u.back() = 1.0;
    u.insert(u.end(), degree, 1.0);
    return KnotVector(std::move(u), degree);
}

namespace {

// Widths of n spans covering `length`, outermost first, each span cluster_ratio
// times the previous one.
std::vector<double> geometric_widths(int n, double length, double ratio) {
    std::vector<double> w(n);
    double total = 0.0;
    double f = 1.0;
    for (int i = 0; i < n; ++i) {
        w[i] = f;
        total += f;
        f *= ratio;
    }
    for (double& x : w) x *= length / total;
    return w;
}

}  // namespace

KnotVector make_refined_open_knots(int n_elements, int degree, double kink, double cluster_ratio,
                                   int kink_multiplicity) {
    if (n_elements < 2) throw std::invalid_argument("refined knots need at least 2 elements");
    if (degree < 1) throw std::invalid_argument("degree must be >= 1");
    if (!(kink > 0.0 && kink < 1.0)) throw std::invalid_argument("kink must lie strictly inside (0,1)");
    if (!(cluster_ratio > 0.0)) throw std::invalid_argument("cluster_ratio must be positive");
    if (kink_multiplicity < 1 || kink_multiplicity > degree)
        throw std::invalid_argument("kink multiplicity must be in [1, degree]");

    const int n_left = std::clamp(static_cast<int>(std::lround(n_elements * kink)), 1, n_elements - 1);
    const int n_right = n_elements - n_left;
    const auto wl = geometric_widths(n_left, kink, cluster_ratio);
    const auto wr = geometric_widths(n_right, 1.0 - kink, cluster_ratio);

    std::vector<double> u(degree + 1, 0.0);
    double x = 0.0;
    for (int i = 0; i + 1 < n_left; ++i) {
        x += wl[i];
        u.push_back(x);
    }
    u.insert(u.end(), kink_multiplicity, kink);
    // right side listed from the kink outward, so the smallest span comes first
    x = kink;
    for (int i = n_right - 1; i > 0; --i) {
        x += wr[i];
        u.push_back(x);
    }
    u.insert(u.end(), degree + 1, 1.0);
    return KnotVector(std::move(u), degree);
}

NurbsBasis::NurbsBasis(KnotVector knots)
    : knots_(std::move(knots)), weights_(knots_.n_basis(), 1.0), unit_(true) {}

NurbsBasis::NurbsBasis(KnotVector knots, std::vector<double> weights)
    : knots_(std::move(knots)), weights_(std::move(weights)), unit_(true) {
    if (static_cast<int>(weights_.size()) != knots_.n_basis())
        throw std::invalid_argument("weight count must equal the number of basis functions");
    for (double w : weights_) {
        if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be positive and finite");
        if (w != weights_.front()) unit_ = false;
    }
}

LocalBasis eval_bspline_local(const KnotVector& knots, double xi, int max_order, SpanSide side) {
    const int p = knots.degree();
    const auto& u = knots.values();
    const int s = knots.find_span(xi, side);
    const int nd = std::max(0, max_order);

    // Triangular Cox-de Boor table; ndu[j][r] below the diagonal stores knot differences.
    std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
    std::vector<double> left(p + 1), right(p + 1);
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = xi - u[s + 1 - j];
        right[j] = u[s + j] - xi;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double tmp = ndu[j][r] == 0.0 ? 0.0 : ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        ndu[j][j] = saved;
    }

    LocalBasis out;
    out.first = s - p;
    out.d.assign(nd + 1, std::vector<double>(p + 1, 0.0));
    for (int j = 0; j <= p; ++j) out.d[0][j] = ndu[j][p];

    std::vector<std::vector<double>> a(2, std::vector<double>(p + 1, 0.0));
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a[0][0] = 1.0;
        for (int k = 1; k <= std::min(nd, p); ++k) {
            double d = 0.0;
            const int rk = r - k, pk = p - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            out.d[k][r] = d;
            std::swap(s1, s2);
        }
    }
    double f = p;
    for (int k = 1; k <= std::min(nd, p); ++k) {
        for (double& v : out.d[k]) v *= f;
        f *= (p - k);
    }
    return out;
}

LocalBasis eval_nurbs_local(const NurbsBasis& basis, double xi, int max_order, SpanSide side) {
    LocalBasis b = eval_bspline_local(basis.knots(), xi, max_order, side);
    if (basis.unit_weights()) return b;
    const auto& w = basis.weights();
    const int p = basis.degree();
    const int nd = static_cast<int>(b.d.size()) - 1;
    if (nd > 2) throw std::invalid_argument("NURBS derivatives are provided up to order 2");

    double W[3] = {0.0, 0.0, 0.0};
    for (int k = 0; k <= nd; ++k)
        for (int j = 0; j <= p; ++j) W[k] += w[b.first + j] * b.d[k][j];
    assert(W[0] > 0.0);

    LocalBasis r = b;
    for (int j = 0; j <= p; ++j) {
        const double wj = w[b.first + j];
        r.d[0][j] = wj * b.d[0][j] / W[0];
        if (nd >= 1) r.d[1][j] = (wj * b.d[1][j] - r.d[0][j] * W[1]) / W[0];
        if (nd >= 2) r.d[2][j] = (wj * b.d[2][j] - 2.0 * r.d[1][j] * W[1] - r.d[0][j] * W[2]) / W[0];
    }
    return r;
}

namespace {

std::vector<double> scatter(const LocalBasis& b, int order, int n) {
    std::vector<double> out(n, 0.0);
    const auto& row = b.d[order];
    for (std::size_t j = 0; j < row.size(); ++j) out[b.first + j] = row[j];
    return out;
}

}  // namespace

std::vector<double> eval_bspline_all(const KnotVector& knots, double xi) {
    return scatter(eval_bspline_local(knots, xi, 0), 0, knots.n_basis());
}

std::vector<double> eval_bspline_deriv_all(const KnotVector& knots, double xi, int order) {
    if (order < 1 || order > 2) throw std::invalid_argument("derivative order must be 1 or 2");
    if (order > knots.degree()) throw std::invalid_argument("derivative order exceeds degree");
    return scatter(eval_bspline_local(knots, xi, order), order, knots.n_basis());
}

std::vector<double> eval_nurbs_all(const NurbsBasis& basis, double xi, int order) {
    if (order < 0 || order > 2) throw std::invalid_argument("order must be 0, 1 or 2");
    if (order > basis.degree()) throw std::invalid_argument("derivative order exceeds degree");
    return scatter(eval_nurbs_local(basis, xi, order), order, basis.n_basis());
}

std::vector<double> greville_abscissae(const KnotVector& knots) {
    const int p = knots.degree();
    const auto& u = knots.values();
    std::vector<double> g(knots.n_basis());
    for (int i = 0; i < knots.n_basis(); ++i) {
        double s = 0.0;
        for (int k = 1; k <= p; ++k) s += u[i + k];
        g[i] = s / p;
    }
    g.front() = knots.front();
    g.back() = knots.back();
    return g;
}

double evaluate_expansion(const NurbsBasis& basis, const std::vector<double>& coeffs, double xi, int order,
                          SpanSide side) {
    if (static_cast<int>(coeffs.size()) != basis.n_basis())
        throw std::invalid_argument("coefficient count must equal the number of basis functions");
    const LocalBasis b = eval_nurbs_local(basis, xi, order, side);
    double v = 0.0;
    for (std::size_t j = 0; j < b.d[order].size(); ++j) v += coeffs[b.first + j] * b.d[order][j];
    return v;
}

std::vector<double> load_weights(const std::string& path, int n_basis) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open weight file " + path);
    std::vector<double> w;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream is(line);
        double v = 0.0;
        std::string rest;
        if (!(is >> v) || (is >> rest) || !(v > 0.0) || !std::isfinite(v))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected one positive number");
        w.push_back(v);
    }
    if (static_cast<int>(w.size()) != n_basis)
        throw std::runtime_error(path + ": expected " + std::to_string(n_basis) + " weights, found " +
                                 std::to_string(w.size()));
    return w;
}

}  // namespace isofin
