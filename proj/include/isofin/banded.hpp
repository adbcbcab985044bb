#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace isofin {

/// Square matrix with `lower` subdiagonals and `upper` superdiagonals.
class BandedMatrix {
public:
    BandedMatrix() = default;
    BandedMatrix(int n, int lower, int upper);

    int size() const { return n_; }
    int lower() const { return kl_; }
    int upper() const { return ku_; }
    bool in_band(int i, int j) const { return j - i <= ku_ && i - j <= kl_; }

    /// Entry reference; throws for positions outside the band.
    double& at(int i, int j);
    /// Entry value; zero outside the band.
    double operator()(int i, int j) const;

    std::vector<double> multiply(const std::vector<double>& x) const;

    /// this += s * other (same shape required).
    void add_scaled(const BandedMatrix& other, double s);
    void scale(double s);

private:
    int n_ = 0, kl_ = 0, ku_ = 0;
    std::vector<double> a_;  // row-major, entry (i, j) at i * (kl + ku + 1) + (j - i + kl)
};

/// Raised when a pivot vanishes to working precision.
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, int index) : std::runtime_error(what), index_(index) {}
    int index() const { return index_; }

private:
    int index_;
};

/// LU factors with row interchanges, stored with widened upper band kl + ku.
class BandedLU {
public:
    int size() const { return n_; }
    std::vector<double> solve(std::vector<double> b) const;

private:
    friend BandedLU lu_factor(const BandedMatrix& a);
    int n_ = 0, kl_ = 0, ku_ = 0, width_ = 0;
    std::vector<double> lu_;
    std::vector<int> piv_;
    double& e(int i, int j) { return lu_[static_cast<std::size_t>(i) * width_ + (j - i + kl_)]; }
    double e(int i, int j) const { return lu_[static_cast<std::size_t>(i) * width_ + (j - i + kl_)]; }
};

BandedLU lu_factor(const BandedMatrix& a);

std::vector<double> solve(const BandedLU& lu, const std::vector<double>& b);

}  // namespace isofin
