#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "isofin/config.hpp"

using namespace isofin;

namespace {

ExperimentConfig parse(const std::string& text, const std::string& base = ".") {
    std::istringstream in(text);
    return parse_config(in, "test.ini", base);
}

int error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

std::string error_text(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("defaults") {
    const auto c = parse("[model]\nkind = linear-bs\n");
    CHECK(c.model == ModelKind::LinearBs);
    CHECK(c.disc.degree == 3);
    CHECK(c.disc.elements == 128);
    CHECK(c.time.steps == 100);
    CHECK(c.time.theta == 0.5);
    CHECK(c.time.rannacher == 2);
    CHECK(c.output.probe_s == 100.0);
    const auto [lo, hi] = c.domain();
    CHECK(lo == doctest::Approx(std::log(100.0) - 5.0));
    CHECK(hi == doctest::Approx(std::log(100.0) + 3.0));
    CHECK(c.kink_xi() == doctest::Approx(5.0 / 8.0));
    const auto o = c.run_options(40);
    CHECK(o.scheme.n_steps == 40);
    CHECK(o.scheme.theta == 0.5);
}

TEST_CASE("a full Leland file") {
    const auto c = parse(R"(# comment
[model]
kind = leland   ; trailing comment

[discretization]
degree = 2
elements = 64
knots = refined
kink_grading = 0.2
kink_multiplicity = 2
x_min = 0.5
x_max = 6.5
quadrature = 4
initial = interpolate
projection = nodal

[time]
steps = 80
theta = 0.6
rannacher = 0

[leland]
r = 0.1
sigma = 0.25
strike = 90
maturity = 0.5
leland = 0.8

[output]
dir = somewhere
probe_s = 95
surface = false

[ladder]
rungs = 32:10, 64:40
)");
    CHECK(c.model == ModelKind::Leland);
    CHECK(c.disc.degree == 2);
    CHECK(c.disc.knots == KnotMode::Refined);
    CHECK(c.disc.kink_grading == 0.2);
    CHECK(c.disc.kink_multiplicity == 2);
    CHECK(c.domain().first == 0.5);
    CHECK(c.domain().second == 6.5);
    CHECK(c.disc.initial == InitialMode::Interpolate);
    CHECK(c.disc.projection == SourceProjection::Nodal);
    CHECK(c.time.theta == 0.6);
    CHECK(c.leland.r == 0.1);
    CHECK(c.leland.strike == 90.0);
    CHECK(c.leland.leland == 0.8);
    CHECK(c.kink_xi() == doctest::Approx((std::log(90.0) - 0.5) / 6.0));
    CHECK_FALSE(c.output.surface);
    CHECK(c.output.dir == "somewhere");
    REQUIRE(c.ladder.size() == 2);
    CHECK(c.ladder[1].elements == 64);
    CHECK(c.ladder[1].steps == 40);
}

TEST_CASE("Leland number from costs") {
    const auto c = parse("[model]\nkind = leland\n[leland]\nsigma = 0.2\ncost = 0.01\nrebalance_interval = 0.01\n");
    CHECK(c.leland.leland == doctest::Approx(leland_number(0.01, 0.01, 0.2)));
    CHECK(error_line("[model]\nkind = leland\n[leland]\nleland = 0.5\ncost = 0.01\nrebalance_interval = 0.1\n") == 4);
    CHECK(error_line("[model]\nkind = leland\n[leland]\ncost = 0.01\n") == 4);
    CHECK(error_line("[model]\nkind = linear-bs\n[leland]\nleland = 0.5\n") == 4);
}

TEST_CASE("convertible section") {
    const auto c = parse(R"([model]
kind = afv
[afv]
hazard = 0.03
coupons = 1:5, 2:5
call = 1:2:108
put = none
snap_point_windows = true
accrual_at_payment = cum
enforce_constraints = false
maturity = 2
)");
    CHECK(c.model == ModelKind::Afv);
    CHECK(c.afv.hazard == 0.03);
    REQUIRE(c.afv.coupons.size() == 2);
    CHECK(c.afv.coupons[1].time == 2.0);
    CHECK(c.afv.coupons[1].amount == 5.0);
    REQUIRE(c.afv.call.has_value());
    CHECK(c.afv.call->clean_price == 108.0);
    CHECK_FALSE(c.afv.put.has_value());
    CHECK(c.afv.snap_point_windows);
    CHECK(c.afv.accrual_at_payment == AccrualAtPayment::Cum);
    CHECK_FALSE(c.afv.enforce_constraints);
    CHECK(c.domain().first == -6.0);
    CHECK(c.domain().second == 2.0);
    // kink at ln((F + K) / (k S_int))
    CHECK(c.kink_xi() == doctest::Approx((std::log(1.04) + 6.0) / 8.0));

    const auto d = parse("[model]\nkind = afv\n");
    CHECK(d.afv.coupons.size() == 10);
    CHECK(d.afv.call->start == 2.0);
}

TEST_CASE("errors carry line numbers") {
    CHECK(error_line("[model]\nkind = leland\n[leland]\nvolatility = 0.2\n") == 4);
    CHECK(error_line("[model]\nkind = leland\n[colour]\nred = 1\n") == 3);
    CHECK(error_line("[model]\nkind = leland\n[time]\nsteps = ten\n") == 4);
    CHECK(error_line("[model]\nkind = leland\n[time]\nsteps = 1.5\n") == 4);
    CHECK(error_line("[model]\nkind = leland\n[time]\ntheta = 2\n") == 4);
    CHECK(error_line("[model]\nkind = heston\n") == 2);
    CHECK(error_line("[model]\nkind = leland\nkind = afv\n") == 3);
    CHECK(error_line("[model]\nkind = leland\n[model]\n") == 3);
    CHECK(error_line("kind = leland\n") == 1);
    CHECK(error_line("[model\nkind = leland\n") == 1);
    CHECK(error_line("[model]\nkind\n") == 2);
    CHECK(error_line("[model]\nkind =\n") == 2);
    CHECK(error_line("[model]\nkind = leland\n[discretization]\nelements = 0\n") == 4);
    CHECK(error_line("[model]\nkind = leland\n[discretization]\nquadrature = 20\n") == 4);
    CHECK(error_line("[model]\nkind = afv\n[afv]\ncall = 2:5\n") == 4);
    CHECK(error_line("[model]\nkind = afv\n[afv]\ncoupons = 1-4\n") == 4);
    CHECK(error_line("[model]\nkind = leland\n[ladder]\nrungs = 32\n") == 4);
    CHECK(error_line("[model]\nkind = leland\n[output]\nsurface = maybe\n") == 4);
    CHECK(error_line("[model]\nkind = leland\n[discretization]\nweights = file\n") == 4);
    CHECK(error_line("[model]\nkind = leland\n[discretization]\nweights_file = /nonexistent/w.txt\n") == 4);
    CHECK(error_line("[time]\nsteps = 4\n") == 0);
    CHECK(error_text("[model]\nkind = leland\n[leland]\nvolatility = 0.2\n").rfind("test.ini:4: ", 0) == 0);
}

TEST_CASE("semantic validation") {
    // parameter checks are reported against their section
    CHECK(error_line("[model]\nkind = leland\n[leland]\nsigma = -0.2\n") == 3);
    CHECK(error_line("[model]\nkind = afv\n[afv]\nrecovery = 2\n") == 3);
    CHECK(error_line("[model]\nkind = leland\n[discretization]\nx_min = 3\nx_max = 2\n") == 5);
    CHECK(error_line("[model]\nkind = leland\n[discretization]\nknots = refined\nx_min = 5\nx_max = 9\n") == 4);
    CHECK(error_line("[model]\nkind = leland\n[discretization]\nknots = refined\nkink_multiplicity = 4\n") == 4);
    CHECK(error_line("[model]\nkind = leland\n[discretization]\nkink_grading = 0\n") == 4);
}

TEST_CASE("files and relative weights") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "isofin_config_test";
    fs::create_directories(dir);
    {
        std::ofstream w(dir / "w.txt");
        w << "1 1 1\n";
        std::ofstream c(dir / "run.ini");
        c << "[model]\nkind = leland\n[discretization]\nweights = file\nweights_file = w.txt\n";
    }
    const auto c = load_config((dir / "run.ini").string());
    CHECK(c.disc.weights == WeightSource::File);
    CHECK(fs::path(c.disc.weights_file) == dir / "w.txt");
    CHECK_THROWS_AS(load_config((dir / "missing.ini").string()), ConfigError);
    fs::remove_all(dir);

    CHECK(parse_model_kind(" AFV ") == ModelKind::Afv);
    CHECK_THROWS(parse_model_kind("sabr"));
}

TEST_CASE("shipped configurations parse") {
    int n = 0;
    for (const auto& e : std::filesystem::directory_iterator(ISOFIN_CONFIG_DIR)) {
        if (e.path().extension() != ".ini") continue;
        CAPTURE(e.path().string());
        CHECK_NOTHROW(load_config(e.path().string()));
        ++n;
    }
    CHECK(n >= 7);
}
