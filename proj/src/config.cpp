#include "isofin/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace isofin {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    return out;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

struct Entry {
    std::string value;
    int line;
};

class Reader {
public:
    Reader(std::string origin) : origin_(std::move(origin)) {}

    [[noreturn]] void fail(int line, const std::string& msg) const { throw ConfigError(origin_, line, msg); }

    double real(const Entry& e) const {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(e.value, &used);
        } catch (const std::exception&) {
            fail(e.line, "expected a number, got '" + e.value + "'");
        }
        if (used != e.value.size() || !std::isfinite(v)) fail(e.line, "expected a number, got '" + e.value + "'");
        return v;
    }

    int integer(const Entry& e) const {
        const double v = real(e);
        if (v != std::floor(v) || std::abs(v) > 2e9) fail(e.line, "expected an integer, got '" + e.value + "'");
        return static_cast<int>(v);
    }

    int positive(const Entry& e) const {
        const int v = integer(e);
        if (v <= 0) fail(e.line, "expected a positive integer, got '" + e.value + "'");
        return v;
    }

    bool boolean(const Entry& e) const {
        const auto v = lower(e.value);
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        fail(e.line, "expected true or false, got '" + e.value + "'");
    }

    template <class T>
    T choice(const Entry& e, const std::map<std::string, T>& options) const {
        const auto it = options.find(lower(e.value));
        if (it != options.end()) return it->second;
        std::string names;
        for (const auto& [k, v] : options) names += (names.empty() ? "" : ", ") + k;
        fail(e.line, "'" + e.value + "' is not one of: " + names);
    }

    /// "start:end:price", or "none".
    std::optional<ConstraintWindow> window(const Entry& e) const {
        if (lower(e.value) == "none") return std::nullopt;
        const auto parts = split(e.value, ':');
        if (parts.size() != 3) fail(e.line, "expected start:end:price, got '" + e.value + "'");
        ConstraintWindow w;
        w.start = real({parts[0], e.line});
        w.end = real({parts[1], e.line});
        w.clean_price = real({parts[2], e.line});
        return w;
    }

    /// "t:amount, t:amount, ..." or "none".
    std::vector<Coupon> coupons(const Entry& e) const {
        std::vector<Coupon> out;
        if (lower(e.value) == "none") return out;
        for (const auto& item : split(e.value, ',')) {
            const auto parts = split(item, ':');
            if (parts.size() != 2) fail(e.line, "expected time:amount, got '" + item + "'");
            out.push_back({real({parts[0], e.line}), real({parts[1], e.line})});
        }
        return out;
    }

    std::vector<Rung> rungs(const Entry& e) const {
        std::vector<Rung> out;
        for (const auto& item : split(e.value, ',')) {
            const auto parts = split(item, ':');
            if (parts.size() != 2) fail(e.line, "expected elements:steps, got '" + item + "'");
            out.push_back({positive({parts[0], e.line}), positive({parts[1], e.line})});
        }
        if (out.empty()) fail(e.line, "ladder needs at least one rung");
        return out;
    }

private:
    std::string origin_;
};

using Section = std::map<std::string, Entry>;
using Handler = std::function<void(const Entry&)>;

void dispatch(const Reader& rd, const std::string& name, const Section& sec,
              const std::map<std::string, Handler>& handlers) {
    for (const auto& [key, e] : sec) {
        const auto it = handlers.find(key);
        if (it == handlers.end()) rd.fail(e.line, "unknown key '" + key + "' in section [" + name + "]");
        it->second(e);
    }
}

}  // namespace

ConfigError::ConfigError(const std::string& origin, int line, const std::string& message)
    : std::runtime_error(origin + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

ModelKind parse_model_kind(const std::string& text) {
    const auto v = lower(trim(text));
    if (v == "linear-bs") return ModelKind::LinearBs;
    if (v == "leland") return ModelKind::Leland;
    if (v == "afv") return ModelKind::Afv;
    throw std::invalid_argument("unknown model '" + text + "' (linear-bs, leland, afv)");
}

std::pair<double, double> ExperimentConfig::domain() const {
    double lo = 0.0, hi = 0.0;
    if (model == ModelKind::Afv) {
        lo = -6.0;
        hi = 2.0;
    } else {
        lo = std::log(leland.strike) - 5.0;
        hi = std::log(leland.strike) + 3.0;
    }
    return {disc.x_min.value_or(lo), disc.x_max.value_or(hi)};
}

double ExperimentConfig::kink_xi() const {
    const auto [lo, hi] = domain();
    double x = 0.0;
    if (model == ModelKind::Afv)
        x = std::log((afv.face + afv.final_coupon) / (afv.conversion * afv.s_int));
    else
        x = std::log(leland.strike);
    return (x - lo) / (hi - lo);
}

RunOptions ExperimentConfig::run_options(int steps) const {
    RunOptions o;
    o.scheme.theta = time.theta;
    o.scheme.rannacher_steps = time.rannacher;
    o.scheme.n_steps = steps;
    o.initial = disc.initial;
    o.projection = disc.projection;
    return o;
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin, const std::string& base_dir) {
    const Reader rd(origin);
    std::map<std::string, Section> sections;
    std::map<std::string, int> section_line;
    std::string current;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto cut = raw.find_first_of("#;");
        const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') rd.fail(line_no, "malformed section header");
            current = lower(trim(line.substr(1, line.size() - 2)));
            if (sections.count(current)) rd.fail(line_no, "duplicate section [" + current + "]");
            sections[current];
            section_line[current] = line_no;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) rd.fail(line_no, "expected key = value");
        if (current.empty()) rd.fail(line_no, "key outside of any section");
        const std::string key = lower(trim(line.substr(0, eq)));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) rd.fail(line_no, "empty key");
        if (value.empty()) rd.fail(line_no, "empty value for '" + key + "'");
        auto& sec = sections[current];
        if (sec.count(key)) rd.fail(line_no, "duplicate key '" + key + "'");
        sec[key] = {value, line_no};
    }

    static const std::set<std::string> known = {"model", "discretization", "time", "leland",
                                                "afv",   "output",         "ladder"};
    for (const auto& [name, sec] : sections)
        if (!known.count(name)) rd.fail(section_line[name], "unknown section [" + name + "]");

    ExperimentConfig cfg;
    if (!sections.count("model") || !sections["model"].count("kind")) rd.fail(0, "missing [model] kind");

    dispatch(rd, "model", sections["model"], {{"kind", [&](const Entry& e) {
                                                  cfg.model = rd.choice<ModelKind>(
                                                      e, {{"linear-bs", ModelKind::LinearBs},
                                                          {"leland", ModelKind::Leland},
                                                          {"afv", ModelKind::Afv}});
                                              }}});

    auto& d = cfg.disc;
    int weights_line = 0;
    int knots_line = 0;
    dispatch(rd, "discretization", sections["discretization"],
             {{"degree", [&](const Entry& e) { d.degree = rd.positive(e); }},
              {"elements", [&](const Entry& e) { d.elements = rd.positive(e); }},
              {"knots",
               [&](const Entry& e) {
                   d.knots = rd.choice<KnotMode>(e, {{"uniform", KnotMode::Uniform}, {"refined", KnotMode::Refined}});
                   knots_line = e.line;
               }},
              {"kink_grading",
               [&](const Entry& e) {
                   d.kink_grading = rd.real(e);
                   if (!(d.kink_grading > 0.0 && d.kink_grading <= 1.0))
                       rd.fail(e.line, "kink_grading must lie in (0, 1]");
               }},
              {"kink_multiplicity", [&](const Entry& e) { d.kink_multiplicity = rd.positive(e); }},
              {"weights",
               [&](const Entry& e) {
                   d.weights = rd.choice<WeightSource>(e, {{"none", WeightSource::None},
                                                           {"file", WeightSource::File},
                                                           {"calibrated", WeightSource::Calibrated}});
                   weights_line = e.line;
               }},
              {"weights_file",
               [&](const Entry& e) {
                   std::filesystem::path p(e.value);
                   if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
                   if (!std::filesystem::exists(p)) rd.fail(e.line, "weights file '" + p.string() + "' not found");
                   d.weights_file = p.string();
               }},
              {"x_min", [&](const Entry& e) { d.x_min = rd.real(e); }},
              {"x_max", [&](const Entry& e) { d.x_max = rd.real(e); }},
              {"quadrature",
               [&](const Entry& e) {
                   d.quadrature = rd.positive(e);
                   if (d.quadrature > 16) rd.fail(e.line, "quadrature order must be at most 16");
               }},
              {"initial",
               [&](const Entry& e) {
                   d.initial = rd.choice<InitialMode>(
                       e, {{"nodal", InitialMode::Nodal}, {"interpolate", InitialMode::Interpolate}});
               }},
              {"projection", [&](const Entry& e) {
                   d.projection = rd.choice<SourceProjection>(
                       e, {{"collocation", SourceProjection::Collocation}, {"nodal", SourceProjection::Nodal}});
               }}});
    if (d.weights == WeightSource::File && d.weights_file.empty())
        rd.fail(weights_line, "weights = file needs weights_file");
    if (d.weights != WeightSource::File && !d.weights_file.empty())
        rd.fail(sections["discretization"]["weights_file"].line, "weights_file given but weights is not 'file'");
    if (d.knots == KnotMode::Refined && d.kink_multiplicity > d.degree)
        rd.fail(knots_line, "kink_multiplicity cannot exceed the degree");

    auto& t = cfg.time;
    dispatch(rd, "time", sections["time"],
             {{"steps",
               [&](const Entry& e) {
                   t.steps = rd.integer(e);
                   if (t.steps < 0) rd.fail(e.line, "steps must be >= 0");
               }},
              {"theta",
               [&](const Entry& e) {
                   t.theta = rd.real(e);
                   if (t.theta < 0.0 || t.theta > 1.0) rd.fail(e.line, "theta must lie in [0, 1]");
               }},
              {"rannacher", [&](const Entry& e) {
                   t.rannacher = rd.integer(e);
                   if (t.rannacher < 0) rd.fail(e.line, "rannacher must be >= 0");
               }}});

    auto& lp = cfg.leland;
    std::optional<Entry> cost, interval, le;
    dispatch(rd, "leland", sections["leland"],
             {{"r", [&](const Entry& e) { lp.r = rd.real(e); }},
              {"sigma", [&](const Entry& e) { lp.sigma = rd.real(e); }},
              {"strike", [&](const Entry& e) { lp.strike = rd.real(e); }},
              {"maturity", [&](const Entry& e) { lp.maturity = rd.real(e); }},
              {"leland", [&](const Entry& e) { le = e; }},
              {"cost", [&](const Entry& e) { cost = e; }},
              {"rebalance_interval", [&](const Entry& e) { interval = e; }}});
    if (le && (cost || interval)) rd.fail(le->line, "give either leland or cost with rebalance_interval, not both");
    if (le) lp.leland = rd.real(*le);
    if (cost || interval) {
        if (!cost || !interval) rd.fail((cost ? cost : interval)->line, "cost and rebalance_interval go together");
        try {
            lp.leland = leland_number(rd.real(*cost), rd.real(*interval), lp.sigma);
        } catch (const std::invalid_argument& ex) {
            rd.fail(interval->line, ex.what());
        }
    }
    if (cfg.model == ModelKind::LinearBs && lp.leland != 0.0)
        rd.fail(le ? le->line : cost->line, "linear-bs requires a zero Leland number");

    auto& ap = cfg.afv;
    dispatch(rd, "afv", sections["afv"],
             {{"r", [&](const Entry& e) { ap.r = rd.real(e); }},
              {"sigma", [&](const Entry& e) { ap.sigma = rd.real(e); }},
              {"hazard", [&](const Entry& e) { ap.hazard = rd.real(e); }},
              {"eta", [&](const Entry& e) { ap.eta = rd.real(e); }},
              {"recovery", [&](const Entry& e) { ap.recovery = rd.real(e); }},
              {"conversion", [&](const Entry& e) { ap.conversion = rd.real(e); }},
              {"face", [&](const Entry& e) { ap.face = rd.real(e); }},
              {"final_coupon", [&](const Entry& e) { ap.final_coupon = rd.real(e); }},
              {"coupons", [&](const Entry& e) { ap.coupons = rd.coupons(e); }},
              {"call", [&](const Entry& e) { ap.call = rd.window(e); }},
              {"put", [&](const Entry& e) { ap.put = rd.window(e); }},
              {"penalty", [&](const Entry& e) { ap.penalty = rd.real(e); }},
              {"tolerance", [&](const Entry& e) { ap.tolerance = rd.real(e); }},
              {"max_newton", [&](const Entry& e) { ap.max_newton = rd.positive(e); }},
              {"s_int", [&](const Entry& e) { ap.s_int = rd.real(e); }},
              {"maturity", [&](const Entry& e) { ap.maturity = rd.real(e); }},
              {"snap_point_windows", [&](const Entry& e) { ap.snap_point_windows = rd.boolean(e); }},
              {"enforce_constraints", [&](const Entry& e) { ap.enforce_constraints = rd.boolean(e); }},
              {"accrual_at_payment", [&](const Entry& e) {
                   ap.accrual_at_payment =
                       rd.choice<AccrualAtPayment>(e, {{"ex", AccrualAtPayment::Ex}, {"cum", AccrualAtPayment::Cum}});
               }}});

    auto& o = cfg.output;
    dispatch(rd, "output", sections["output"],
             {{"dir", [&](const Entry& e) { o.dir = e.value; }},
              {"probe_s",
               [&](const Entry& e) {
                   o.probe_s = rd.real(e);
                   if (!(o.probe_s > 0.0)) rd.fail(e.line, "probe_s must be positive");
               }},
              {"surface", [&](const Entry& e) { o.surface = rd.boolean(e); }}});

    dispatch(rd, "ladder", sections["ladder"], {{"rungs", [&](const Entry& e) { cfg.ladder = rd.rungs(e); }}});

    try {
        if (cfg.model == ModelKind::Afv)
            cfg.afv.validate();
        else
            cfg.leland.validate();
    } catch (const std::invalid_argument& ex) {
        rd.fail(section_line.count(cfg.model == ModelKind::Afv ? "afv" : "leland")
                    ? section_line[cfg.model == ModelKind::Afv ? "afv" : "leland"]
                    : 0,
                ex.what());
    }
    const auto [lo, hi] = cfg.domain();
    if (!(hi > lo)) rd.fail(sections["discretization"].count("x_max") ? sections["discretization"]["x_max"].line : 0,
                            "x_max must exceed x_min");
    if (d.knots == KnotMode::Refined) {
        const double k = cfg.kink_xi();
        if (!(k > 0.0 && k < 1.0)) rd.fail(knots_line, "the payoff kink lies outside the domain");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open file");
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(in, path, dir.empty() ? "." : dir.string());
}

}  // namespace isofin
