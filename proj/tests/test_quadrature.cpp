#include <doctest.h>

#include <cmath>

#include "isofin/basis.hpp"
#include "isofin/quadrature.hpp"

using namespace isofin;

TEST_CASE("low-order rules") {
    const auto r1 = gauss_legendre(1);
    CHECK(r1.nodes == std::vector<double>{0.0});
    CHECK(r1.weights[0] == doctest::Approx(2.0));
    const auto r2 = gauss_legendre(2);
    CHECK(r2.nodes[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(r2.nodes[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(r2.weights[0] == doctest::Approx(1.0));
    CHECK(r2.weights[1] == doctest::Approx(1.0));
    // three-point rule: ±sqrt(3/5) with weight 5/9, centre 8/9
    const auto r3 = gauss_legendre(3);
    CHECK(r3.nodes[2] == doctest::Approx(std::sqrt(0.6)).epsilon(1e-15));
    CHECK(r3.weights[1] == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
    CHECK_THROWS(gauss_legendre(0));
    CHECK_THROWS(gauss_legendre(17));
}

TEST_CASE("exactness for monomials up to degree 2q-1") {
    for (int q = 1; q <= 16; ++q) {
        const auto rule = gauss_legendre(q);
        double wsum = 0.0;
        for (int k = 0; k < q; ++k) {
            CHECK(rule.weights[k] > 0.0);
            if (k > 0) CHECK(rule.nodes[k] > rule.nodes[k - 1]);
            wsum += rule.weights[k];
        }
        CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
        for (int d = 0; d <= 2 * q - 1; ++d) {
            const double v = integrate_interval([d](double z) { return std::pow(z, d); }, -1.0, 1.0, rule);
            const double exact = d % 2 == 0 ? 2.0 / (d + 1) : 0.0;
            CHECK(std::abs(v - exact) <= 1e-13);
        }
    }
    const double v = integrate_interval([](double z) { return std::pow(z, 8); }, -1.0, 1.0, gauss_legendre(5));
    CHECK(std::abs(v - 2.0 / 9.0) <= 1e-13);
}

TEST_CASE("mapped intervals") {
    const auto r3 = gauss_legendre(3);
    CHECK(integrate_interval([](double) { return 1.0; }, 0.0, 1.0, r3) == doctest::Approx(1.0));
    CHECK(integrate_interval([](double x) { return x * x * x; }, 0.0, 0.2, r3) == doctest::Approx(0.0004).epsilon(1e-14));
    CHECK(integrate_interval([](double x) { return x; }, 0.4, 0.4, r3) == 0.0);
    // a degree-2q polynomial is not integrated exactly
    const double v = integrate_interval([](double x) { return std::pow(x, 6); }, -1.0, 1.0, r3);
    CHECK(std::abs(v - 2.0 / 7.0) > 1e-6);
}

TEST_CASE("span-wise integration") {
    const KnotVector uni({0, 0, 0, 0, 0.2, 0.4, 0.6, 0.8, 1, 1, 1, 1}, 3);
    const KnotVector tri({0, 0, 0, 0, 0.2, 0.4, 0.6, 0.6, 0.6, 0.8, 1, 1, 1, 1}, 3);
    for (const auto* kv : {&uni, &tri})
        CHECK(integrate_spans([](double) { return 1.0; }, *kv, gauss_legendre(2)) == doctest::Approx(1.0));

    // products of cubics are degree 6: four points suffice, twelve is the oracle
    for (int i = 0; i < uni.n_basis(); ++i)
        for (int j = 0; j < uni.n_basis(); ++j) {
            auto f = [&](double xi) {
                const auto N = eval_bspline_all(uni, xi);
                return N[i] * N[j];
            };
            CHECK(std::abs(integrate_spans(f, uni, gauss_legendre(4)) - integrate_spans(f, uni, gauss_legendre(12))) <=
                  1e-13);
        }

    // a C0 product across the triple knot vs an adaptive Simpson oracle on each side
    auto f = [&](double xi) {
        const auto N = eval_bspline_all(tri, xi);
        return N[5] * N[4];
    };
    auto simpson = [&](double a, double b) {
        const int n = 20000;
        const double h = (b - a) / n;
        double s = f(a) + f(b - 1e-15);
        for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
        return s * h / 3.0;
    };
    const double oracle = simpson(0.2, 0.6) + simpson(0.6, 0.8);
    CHECK(std::abs(integrate_spans(f, tri, gauss_legendre(4)) - oracle) <= 1e-10);
}
