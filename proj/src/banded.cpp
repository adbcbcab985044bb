#include "isofin/banded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace isofin {

BandedMatrix::BandedMatrix(int n, int lower, int upper) : n_(n), kl_(lower), ku_(upper) {
    if (n < 1) throw std::invalid_argument("banded matrix dimension must be >= 1");
    if (lower < 0 || upper < 0) throw std::invalid_argument("bandwidths must be nonnegative");
    a_.assign(static_cast<std::size_t>(n) * (kl_ + ku_ + 1), 0.0);
}

double& BandedMatrix::at(int i, int j) {
    if (i < 0 || j < 0 || i >= n_ || j >= n_ || !in_band(i, j))
        throw std::out_of_range("banded matrix index outside the band");
    return a_[static_cast<std::size_t>(i) * (kl_ + ku_ + 1) + (j - i + kl_)];
}

double BandedMatrix::operator()(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_ || !in_band(i, j)) return 0.0;
    return a_[static_cast<std::size_t>(i) * (kl_ + ku_ + 1) + (j - i + kl_)];
}

std::vector<double> BandedMatrix::multiply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("dimension mismatch in banded multiply");
    std::vector<double> y(n_, 0.0);
    const int w = kl_ + ku_ + 1;
    for (int i = 0; i < n_; ++i) {
        const int j0 = std::max(0, i - kl_), j1 = std::min(n_ - 1, i + ku_);
        const double* row = &a_[static_cast<std::size_t>(i) * w + kl_ - i];
        double s = 0.0;
        for (int j = j0; j <= j1; ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

void BandedMatrix::add_scaled(const BandedMatrix& other, double s) {
    if (other.n_ != n_ || other.kl_ != kl_ || other.ku_ != ku_)
        throw std::invalid_argument("banded matrices differ in shape");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += s * other.a_[k];
}

void BandedMatrix::scale(double s) {
    for (double& v : a_) v *= s;
}

BandedLU lu_factor(const BandedMatrix& a) {
    BandedLU f;
    f.n_ = a.size();
    f.kl_ = a.lower();
    f.ku_ = a.upper();
    f.width_ = 2 * f.kl_ + f.ku_ + 1;
    f.lu_.assign(static_cast<std::size_t>(f.n_) * f.width_, 0.0);
    f.piv_.assign(f.n_, 0);
    const int n = f.n_, kl = f.kl_, ku_fill = f.kl_ + f.ku_;

    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - kl); j <= std::min(n - 1, i + a.upper()); ++j) {
            f.e(i, j) = a(i, j);
            scale = std::max(scale, std::abs(a(i, j)));
        }
    const double tiny = std::numeric_limits<double>::epsilon() * std::max(scale, std::numeric_limits<double>::min());

    for (int k = 0; k < n; ++k) {
        const int last_row = std::min(n - 1, k + kl);
        int p = k;
        for (int i = k + 1; i <= last_row; ++i)
            if (std::abs(f.e(i, k)) > std::abs(f.e(p, k))) p = i;
        if (!(std::abs(f.e(p, k)) > tiny))
            throw SingularMatrixError("singular matrix: zero pivot at index " + std::to_string(k), k);
        f.piv_[k] = p;
        const int last_col = std::min(n - 1, k + ku_fill);
        if (p != k)
            for (int j = k; j <= last_col; ++j) std::swap(f.e(k, j), f.e(p, j));
        const double inv = 1.0 / f.e(k, k);
        for (int i = k + 1; i <= last_row; ++i) {
            const double l = f.e(i, k) * inv;
            f.e(i, k) = l;
            if (l == 0.0) continue;
            for (int j = k + 1; j <= last_col; ++j) f.e(i, j) -= l * f.e(k, j);
        }
    }
    return f;
}

std::vector<double> BandedLU::solve(std::vector<double> b) const {
    if (static_cast<int>(b.size()) != n_) throw std::invalid_argument("dimension mismatch in banded solve");
    const int n = n_, kl = kl_, ku_fill = kl_ + ku_;
    for (int k = 0; k < n; ++k) {
        if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
        const double bk = b[k];
        if (bk == 0.0) continue;
        for (int i = k + 1; i <= std::min(n - 1, k + kl); ++i) b[i] -= e(i, k) * bk;
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j <= std::min(n - 1, i + ku_fill); ++j) s -= e(i, j) * b[j];
        b[i] = s / e(i, i);
    }
    return b;
}

std::vector<double> solve(const BandedLU& lu, const std::vector<double>& b) { return lu.solve(b); }

}  // namespace isofin
