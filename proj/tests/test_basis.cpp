#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include "isofin/basis.hpp"

using namespace isofin;

namespace {

// Textbook recursion with the 0/0 = 0 convention; the last nonempty span is closed on the right.
double naive_N(const std::vector<double>& u, int i, int p, double xi) {
    if (p == 0) {
        const double a = u[i], b = u[i + 1];
        if (a == b) return 0.0;
        if (xi >= a && xi < b) return 1.0;
        if (xi == u.back() && b == u.back() && a < b) return 1.0;
        return 0.0;
    }
    double v = 0.0;
    const double d1 = u[i + p] - u[i];
    const double d2 = u[i + p + 1] - u[i + 1];
    if (d1 > 0.0) v += (xi - u[i]) / d1 * naive_N(u, i, p - 1, xi);
    if (d2 > 0.0) v += (u[i + p + 1] - xi) / d2 * naive_N(u, i + 1, p - 1, xi);
    return v;
}

const std::vector<double> kFigUniform = {0, 0, 0, 0, 0.2, 0.4, 0.6, 0.8, 1, 1, 1, 1};
const std::vector<double> kFigTriple = {0, 0, 0, 0, 0.2, 0.4, 0.6, 0.6, 0.6, 0.8, 1, 1, 1, 1};

}  // namespace

TEST_CASE("uniform open knot vectors") {
    CHECK(make_uniform_open_knots(5, 3).values() == std::vector<double>(kFigUniform));
    CHECK(make_uniform_open_knots(1, 1).values() == std::vector<double>{0, 0, 1, 1});
    CHECK(make_uniform_open_knots(4, 2).values() == std::vector<double>{0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1});
    CHECK(make_uniform_open_knots(7, 3).n_basis() == 10);
    CHECK_THROWS_AS(make_uniform_open_knots(0, 3), std::invalid_argument);
}

TEST_CASE("knot vector validation") {
    CHECK_THROWS(KnotVector({0, 0, 1, 0.5, 1, 1}, 1));
    CHECK_THROWS(KnotVector({0, 0, 0.5, 1, 1, 1}, 2));  // not open at the left
    CHECK_THROWS(KnotVector({0, 0, 0, 0, 0.5, 0.5, 0.5, 0.5, 1, 1, 1, 1}, 3));
}

TEST_CASE("refined knots: five-span example with a triple knot") {
    const auto kv = make_refined_open_knots(5, 3, 0.6, 1.0, 3);
    REQUIRE(kv.values().size() == kFigTriple.size());
    for (std::size_t i = 0; i < kFigTriple.size(); ++i) CHECK(kv.values()[i] == doctest::Approx(kFigTriple[i]).epsilon(1e-14));
    CHECK(kv.multiplicity(0.6) == 3);
}

TEST_CASE("refined knots: unit ratio without insertion is uniform") {
    const auto kv = make_refined_open_knots(8, 3, 0.5, 1.0, 1);
    const auto u = make_uniform_open_knots(8, 3);
    for (std::size_t i = 0; i < u.values().size(); ++i) CHECK(kv.values()[i] == doctest::Approx(u.values()[i]));
}

TEST_CASE("refined knots: geometric widths toward the kink") {
    const double kink = 0.5, q = 0.7;
    const auto kv = make_refined_open_knots(8, 3, kink, q, 3);
    const auto bp = kv.breakpoints();
    REQUIRE(bp.size() == 9);
    // four spans on each side; inward widths are w, wq, wq^2, wq^3 with total 0.5
    const double w = kink * (1 - q) / (1 - std::pow(q, 4));
    for (int k = 0; k < 4; ++k) {
        CHECK(bp[k + 1] - bp[k] == doctest::Approx(w * std::pow(q, k)).epsilon(1e-12));
        CHECK(bp[8 - k] - bp[7 - k] == doctest::Approx(w * std::pow(q, k)).epsilon(1e-12));
    }
    CHECK_THROWS(make_refined_open_knots(8, 2, 0.5, 0.7, 3));
}

TEST_CASE("B-splines agree with the naive recursion") {
    std::mt19937 gen(1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (const auto& kv : {KnotVector(kFigUniform, 3), KnotVector(kFigTriple, 3), make_uniform_open_knots(6, 2),
                           make_refined_open_knots(12, 4, 0.3, 0.8, 2)}) {
        for (int k = 0; k < 200; ++k) {
            const double xi = k == 0 ? 0.0 : k == 1 ? 1.0 : U(gen);
            const auto N = eval_bspline_all(kv, xi);
            REQUIRE(static_cast<int>(N.size()) == kv.n_basis());
            int nonzero = 0;
            for (int i = 0; i < kv.n_basis(); ++i) {
                CHECK(N[i] == doctest::Approx(naive_N(kv.values(), i, kv.degree(), xi)).epsilon(1e-13));
                CHECK(N[i] >= 0.0);
                nonzero += N[i] != 0.0;
            }
            CHECK(nonzero <= kv.degree() + 1);
        }
    }
}

TEST_CASE("interpolatory endpoints and the triple knot") {
    const KnotVector u(kFigUniform, 3);
    auto N = eval_bspline_all(u, 0.0);
    CHECK(N[0] == 1.0);
    N = eval_bspline_all(u, 1.0);
    CHECK(N[7] == 1.0);
    N = eval_bspline_all(KnotVector(kFigTriple, 3), 0.6);
    CHECK(N[5] == doctest::Approx(1.0));
    CHECK_THROWS(eval_bspline_all(u, 1.2));
}

TEST_CASE("hat function slopes") {
    const KnotVector kv({0, 0, 0.5, 1, 1}, 1);
    const auto d = eval_bspline_deriv_all(kv, 0.25, 1);
    CHECK(d[0] == doctest::Approx(-2.0));
    CHECK(d[1] == doctest::Approx(2.0));
    CHECK(d[2] == doctest::Approx(0.0));
    CHECK_THROWS(eval_bspline_deriv_all(kv, 0.25, 2));
}

TEST_CASE("derivatives: sums vanish and match central differences") {
    const KnotVector kv(kFigUniform, 3);
    std::mt19937 gen(2);
    std::uniform_real_distribution<double> U(0.01, 0.99);
    for (int k = 0; k < 50; ++k) {
        const double xi = U(gen);
        for (int order : {1, 2}) {
            double s = 0.0;
            for (double v : eval_bspline_deriv_all(kv, xi, order)) s += v;
            CHECK(std::abs(s) < 1e-9);
        }
    }
    const double h = 1e-6;
    for (double xi : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const auto d1 = eval_bspline_deriv_all(kv, xi, 1);
        const auto d2 = eval_bspline_deriv_all(kv, xi, 2);
        for (int i = 0; i < kv.n_basis(); ++i) {
            const double fd1 = (naive_N(kv.values(), i, 3, xi + h) - naive_N(kv.values(), i, 3, xi - h)) / (2 * h);
            CHECK(d1[i] == doctest::Approx(fd1).epsilon(1e-6).scale(1.0));
            const double fd2 =
                (eval_bspline_deriv_all(kv, xi + h, 1)[i] - eval_bspline_deriv_all(kv, xi - h, 1)[i]) / (2 * h);
            CHECK(d2[i] == doctest::Approx(fd2).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("NURBS with unit weights reduce to B-splines") {
    const KnotVector kv(kFigTriple, 3);
    const NurbsBasis nb(kv, std::vector<double>(kv.n_basis(), 2.5));
    CHECK(NurbsBasis(kv).unit_weights());
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        const double xi = U(gen);
        const auto R = eval_nurbs_all(nb, xi);
        const auto N = eval_bspline_all(kv, xi);
        for (std::size_t i = 0; i < R.size(); ++i) CHECK(R[i] == doctest::Approx(N[i]).epsilon(1e-14));
    }
}

TEST_CASE("NURBS values and derivatives with unequal weights") {
    const KnotVector kv(kFigUniform, 3);
    const std::vector<double> w = {1, 1, 1, 4, 3, 5, 1, 1};
    const NurbsBasis nb(kv, w);
    auto direct = [&](double xi) {
        std::vector<double> out(w.size());
        double den = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) den += w[i] * naive_N(kv.values(), i, 3, xi);
        for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] * naive_N(kv.values(), i, 3, xi) / den;
        return out;
    };
    const auto R = eval_nurbs_all(nb, 0.37);
    double s = 0.0;
    for (double v : R) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    const auto Rd = direct(0.37);
    for (std::size_t i = 0; i < R.size(); ++i) CHECK(R[i] == doctest::Approx(Rd[i]).epsilon(1e-13));

    const double h = 1e-6;
    for (double xi : {0.11, 0.37, 0.52, 0.9}) {
        const auto d1 = eval_nurbs_all(nb, xi, 1);
        const auto d2 = eval_nurbs_all(nb, xi, 2);
        const auto lo = direct(xi - h), hi = direct(xi + h), mid = direct(xi);
        for (std::size_t i = 0; i < w.size(); ++i) {
            CHECK(d1[i] == doctest::Approx((hi[i] - lo[i]) / (2 * h)).epsilon(1e-6).scale(1.0));
            CHECK(d2[i] == doctest::Approx((hi[i] - 2 * mid[i] + lo[i]) / (h * h)).epsilon(1e-3).scale(10.0));
        }
    }
    CHECK_THROWS(NurbsBasis(kv, std::vector<double>(8, -1.0)));
    CHECK_THROWS(NurbsBasis(kv, std::vector<double>(7, 1.0)));
}

TEST_CASE("Greville abscissae") {
    const auto g = greville_abscissae(KnotVector(kFigUniform, 3));
    const std::vector<double> expect = {0, 0.2 / 3, 0.2, 0.4, 0.6, 0.8, 2.8 / 3, 1};
    REQUIRE(g.size() == expect.size());
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(expect[i]).epsilon(1e-14));
    CHECK(greville_abscissae(KnotVector({0, 0, 0.5, 1, 1}, 1)) == std::vector<double>{0, 0.5, 1});
    CHECK(greville_abscissae(KnotVector(kFigTriple, 3))[5] == doctest::Approx(0.6));
}

TEST_CASE("span lookup on breakpoints") {
    const KnotVector kv(kFigTriple, 3);
    CHECK(kv.find_span(0.0) == 3);
    CHECK(kv.find_span(1.0) == 9);
    CHECK(kv.find_span(0.6, SpanSide::Right) == 8);
    CHECK(kv.find_span(0.6, SpanSide::Left) == 5);
    CHECK(kv.find_span(0.2, SpanSide::Left) == 3);
    CHECK(kv.breakpoints() == std::vector<double>{0, 0.2, 0.4, 0.6, 0.8, 1});
}

TEST_CASE("expansion evaluation: Greville coefficients reproduce linear functions") {
    const auto kv = make_uniform_open_knots(9, 3);
    const NurbsBasis nb(kv);
    const auto g = greville_abscissae(kv);
    std::vector<double> c(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) c[j] = 2.0 - 3.0 * g[j];
    for (double xi : {0.0, 0.13, 0.5, 0.77, 1.0}) {
        CHECK(evaluate_expansion(nb, c, xi) == doctest::Approx(2.0 - 3.0 * xi).epsilon(1e-14));
        CHECK(evaluate_expansion(nb, c, xi, 1) == doctest::Approx(-3.0).epsilon(1e-12));
        CHECK(std::abs(evaluate_expansion(nb, c, xi, 2)) < 1e-9);
    }
}

TEST_CASE("weights file") {
    const std::string path = "test_basis_weights.txt";
    {
        std::ofstream os(path);
        os << "1\n2.5\n0.5\n1\n";
    }
    CHECK(load_weights(path, 4) == std::vector<double>{1, 2.5, 0.5, 1});
    CHECK_THROWS(load_weights(path, 5));
    {
        std::ofstream os(path);
        os << "1\n-2\n1\n";
    }
    CHECK_THROWS(load_weights(path, 3));
    std::remove(path.c_str());
    CHECK_THROWS(load_weights("does_not_exist.txt", 3));
}
