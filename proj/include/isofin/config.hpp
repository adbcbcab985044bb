#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isofin/models.hpp"
#include "isofin/stepper.hpp"

namespace isofin {

/// Parse or validation failure; `line` is 0 when the problem is not tied to one line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& origin, int line, const std::string& message);
    int line() const { return line_; }

private:
    int line_;
};

enum class KnotMode { Uniform, Refined };
enum class WeightSource { None, File, Calibrated };

struct DiscretizationConfig {
    int degree = 3;
    int elements = 128;
    KnotMode knots = KnotMode::Uniform;
    /// Innermost over outermost span width for refined knots.
    double kink_grading = 0.05;
    int kink_multiplicity = 3;
    WeightSource weights = WeightSource::None;
    std::string weights_file;  ///< resolved against the config file's directory
    std::optional<double> x_min, x_max;
    int quadrature = 5;
    InitialMode initial = InitialMode::Nodal;
    SourceProjection projection = SourceProjection::Collocation;
};

struct TimeConfig {
    int steps = 100;
    double theta = 0.5;
    int rannacher = 2;
};

struct OutputConfig {
    std::string dir = "out";
    double probe_s = 100.0;
    bool surface = true;
};

struct Rung {
    int elements;
    int steps;
};

struct ExperimentConfig {
    ModelKind model = ModelKind::LinearBs;
    DiscretizationConfig disc;
    TimeConfig time;
    LelandParams leland;
    AfvParams afv = example_convertible();
    OutputConfig output;
    std::vector<Rung> ladder;

    /// Computational interval in x: configured bounds or the model default.
    std::pair<double, double> domain() const;
    /// Parameter-space location of the payoff kink.
    double kink_xi() const;
    RunOptions run_options(int steps) const;
};

/// Sectioned `key = value` text; `#` and `;` start comments. Unknown sections or keys are errors.
ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>",
                              const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

ModelKind parse_model_kind(const std::string& text);

}  // namespace isofin
