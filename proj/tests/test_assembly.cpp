#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "isofin/assembly.hpp"

using namespace isofin;

namespace {

using Dense = std::vector<std::vector<double>>;

// Global evaluation of every basis function with a 14-point rule per span.
void dense_matrices(const NurbsBasis& b, const PhysicalMap& map, Dense& M, Dense& K, Dense& N) {
    const int n = b.n_basis();
    M = K = N = Dense(n, std::vector<double>(n, 0.0));
    const auto rule = gauss_legendre(14);
    const auto bp = b.knots().breakpoints();
    const double J = (map.x_max - map.x_min) / (map.xi_max - map.xi_min);
    for (std::size_t s = 0; s + 1 < bp.size(); ++s)
        for (int q = 0; q < rule.order; ++q) {
            const double xi = 0.5 * (bp[s] + bp[s + 1]) + 0.5 * (bp[s + 1] - bp[s]) * rule.nodes[q];
            const double w = 0.5 * (bp[s + 1] - bp[s]) * rule.weights[q];
            const auto R = eval_nurbs_all(b, xi, 0);
            const auto dR = eval_nurbs_all(b, xi, 1);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    M[i][j] += w * R[i] * R[j] * J;
                    K[i][j] += w * dR[i] * dR[j] / J;
                    N[i][j] += w * R[j] * dR[i];
                }
        }
}

}  // namespace

TEST_CASE("physical map") {
    const PhysicalMap m(-6.0, 2.0);
    CHECK(m.jacobian() == 8.0);
    CHECK(m.to_physical(0.25) == -4.0);
    CHECK(m.to_parameter(-4.0) == 0.25);
    CHECK_THROWS(PhysicalMap(1.0, 1.0));
}

TEST_CASE("hat functions: closed-form stencils") {
    const int nE = 10;
    const double h = 1.0 / nE;
    const auto sys = assemble(NurbsBasis(make_uniform_open_knots(nE, 1)), PhysicalMap(0.0, 1.0), gauss_legendre(2));
    const auto& M = sys.M.interior;
    const auto& K = sys.K.interior;
    for (int i = 1; i + 1 < M.size(); ++i) {
        CHECK(M(i, i - 1) == doctest::Approx(h / 6).epsilon(1e-14));
        CHECK(M(i, i) == doctest::Approx(4 * h / 6).epsilon(1e-14));
        CHECK(M(i, i + 1) == doctest::Approx(h / 6).epsilon(1e-14));
        CHECK(K(i, i - 1) == doctest::Approx(-1 / h).epsilon(1e-14));
        CHECK(K(i, i) == doctest::Approx(2 / h).epsilon(1e-14));
        CHECK(K(i, i + 1) == doctest::Approx(-1 / h).epsilon(1e-14));
    }
    CHECK(sys.M.col_first[0] == doctest::Approx(h / 6));
    CHECK(sys.K.col_last.back() == doctest::Approx(-1 / h));
    // N(i, j) = ∫ R_j R_i': antisymmetric stencil ±1/2 inside
    CHECK(sys.N_full(3, 2) == doctest::Approx(0.5));
    CHECK(sys.N_full(3, 4) == doctest::Approx(-0.5));
    CHECK(std::abs(sys.N_full(3, 3)) < 1e-14);
}

TEST_CASE("banded assembly matches dense assembly") {
    std::mt19937 gen(4);
    std::uniform_real_distribution<double> W(0.4, 2.5);
    std::vector<NurbsBasis> bases = {NurbsBasis(make_uniform_open_knots(16, 3)),
                                     NurbsBasis(make_refined_open_knots(12, 3, 0.4, 0.8, 3)),
                                     NurbsBasis(make_uniform_open_knots(9, 2))};
    auto kv = make_uniform_open_knots(8, 3);
    std::vector<double> w(kv.n_basis());
    for (double& v : w) v = W(gen);
    bases.emplace_back(kv, w);
    const PhysicalMap map(-1.5, 2.5);
    for (const auto& b : bases) {
        // polynomial products are integrated exactly with degree + 1 points; rational ones need the oracle's rule
        const auto sys = assemble(b, map, gauss_legendre(b.unit_weights() ? b.degree() + 1 : 14));
        Dense M, K, N;
        dense_matrices(b, map, M, K, N);
        const int n = b.n_basis();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                CHECK(std::abs(sys.M_full(i, j) - M[i][j]) <= 1e-10);
                CHECK(std::abs(sys.K_full(i, j) - K[i][j]) <= 1e-10);
                CHECK(std::abs(sys.N_full(i, j) - N[i][j]) <= 1e-10);
                if (std::abs(i - j) > b.degree()) CHECK(M[i][j] == 0.0);
            }
    }
}

TEST_CASE("structural properties") {
    const auto sys =
        assemble(NurbsBasis(make_refined_open_knots(24, 3, 0.55, 0.85, 3)), PhysicalMap(0.0, 3.0), gauss_legendre(5));
    const int n = sys.n_basis;
    double rowmax = 0.0;
    for (int i = 0; i < n; ++i) {
        double rs = 0.0, ns = 0.0;
        for (int j = 0; j < n; ++j) {
            CHECK(sys.M_full(i, j) == doctest::Approx(sys.M_full(j, i)).epsilon(1e-14));
            CHECK(sys.K_full(i, j) == doctest::Approx(sys.K_full(j, i)).epsilon(1e-14));
            rs += sys.K_full(i, j);
            ns += sys.N_full(j, i);
        }
        rowmax = std::max(rowmax, std::abs(rs));
        // Σ_i N(i, j) = ∫ R_j (Σ_i R_i)' = 0
        CHECK(std::abs(ns) < 1e-12);
    }
    CHECK(rowmax <= 1e-10);
    // positive quadratic forms
    std::mt19937 gen(8);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> v(n);
        for (double& x : v) x = U(gen);
        const auto Mv = sys.M_full.multiply(v);
        const auto Kv = sys.K_full.multiply(v);
        double qm = 0.0, qk = 0.0;
        for (int i = 0; i < n; ++i) {
            qm += v[i] * Mv[i];
            qk += v[i] * Kv[i];
        }
        CHECK(qm > 0.0);
        CHECK(qk >= -1e-12);
    }
}

TEST_CASE("boundary lifting") {
    const auto sys = assemble(NurbsBasis(make_uniform_open_knots(10, 3)), PhysicalMap(0.0, 1.0), gauss_legendre(5));
    auto zero = lift_boundary(sys, 0.0, 0.0);
    for (double v : zero.b_M) CHECK(v == 0.0);
    auto first = lift_boundary(sys, 1.0, 0.0);
    CHECK(first.b_M == sys.M.col_first);
    const auto b = lift_boundary(sys, 2.0, 3.0);
    std::vector<double> full(sys.n_basis, 0.0);
    full.front() = 2.0;
    full.back() = 3.0;
    const auto Mf = sys.M_full.multiply(full);
    const auto Kf = sys.K_full.multiply(full);
    int nonzero_left = 0;
    for (int i = 0; i + 2 < sys.n_basis; ++i) {
        CHECK(b.b_M[i] == doctest::Approx(Mf[i + 1]).epsilon(1e-14));
        CHECK(b.b_K[i] == doctest::Approx(Kf[i + 1]).epsilon(1e-14));
        nonzero_left += sys.M.col_first[i] != 0.0;
    }
    CHECK(nonzero_left <= 3);
    // apply_full = interior product + lift
    std::vector<double> w(sys.n_basis);
    for (int i = 0; i < sys.n_basis; ++i) w[i] = std::sin(i);
    const auto y = sys.K.apply_full(w);
    const auto Kw = sys.K_full.multiply(w);
    for (int i = 0; i + 2 < sys.n_basis; ++i) CHECK(y[i] == doctest::Approx(Kw[i + 1]).epsilon(1e-12));
}

TEST_CASE("group projection at the Greville abscissae") {
    const auto kv = make_uniform_open_knots(12, 3);
    const NurbsBasis nb(kv);
    const auto g = greville_abscissae(kv);
    const int n = nb.n_basis();
    for (double v : group_project(std::vector<double>(n, 0.0), nb)) CHECK(v == 0.0);
    for (double v : group_project(std::vector<double>(n, 3.5), nb)) CHECK(v == doctest::Approx(3.5).epsilon(1e-13));

    auto cubic = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x; };
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) vals[i] = cubic(g[i]);
    const auto c = group_project(vals, nb);
    CHECK(c.front() == doctest::Approx(vals.front()));
    CHECK(c.back() == doctest::Approx(vals.back()));
    std::mt19937 gen(6);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const double xi = U(gen);
        CHECK(std::abs(evaluate_expansion(nb, c, xi) - cubic(xi)) <= 1e-10);
    }
    const Collocator col(nb);
    const auto back = col.values(c);
    for (int i = 0; i < n; ++i) CHECK(back[i] == doctest::Approx(vals[i]).epsilon(1e-12));
    CHECK_THROWS(col.project(std::vector<double>(n - 1, 0.0)));
}

TEST_CASE("matrix export") {
    BandedMatrix a(3, 1, 1);
    a.at(0, 0) = 1.5;
    a.at(1, 0) = 1.0 / 3.0;
    std::ostringstream os;
    write_matrix_csv(os, a);
    const std::string s = os.str();
    CHECK(s.find("0,0,1.5\n") != std::string::npos);
    CHECK(s.find("1,0,0.3333333333\n") != std::string::npos);
}
