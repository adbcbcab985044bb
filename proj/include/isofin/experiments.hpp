#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "isofin/config.hpp"
#include "isofin/stepper.hpp"

namespace isofin {

enum class Oracle { ClosedForm, P1, Fdm, None };

Oracle parse_oracle(const std::string& text);

/// Knot vector and weights for the configured mode at the given element count.
NurbsBasis build_basis(const ExperimentConfig& cfg, int elements);
std::shared_ptr<const Discretization> build_discretization(const ExperimentConfig& cfg, int elements);

SolutionSurface run_model(const ExperimentConfig& cfg, std::shared_ptr<const Discretization> disc, int steps,
                          SliceRetention retention = SliceRetention::All);

struct Probe {
    double S;          ///< requested
    double value;      ///< expansion evaluated at S
    double nearest_S;  ///< closest Greville image
    double nearest_value;
};

Probe probe(const SolutionSurface& surface, double S);

struct LadderRow {
    int elements = 0;
    int steps = 0;
    double value = 0.0;
    std::optional<double> oracle_value;
    std::optional<double> error;
    std::optional<double> contraction;
    double seconds = 0.0;
};

/// One solve per rung (plus its oracle), spread over `threads` workers; rows keep rung order.
std::vector<LadderRow> run_ladder(const ExperimentConfig& cfg, const std::vector<Rung>& rungs, Oracle oracle,
                                  double probe_S, int threads);

/// Worker count from ISOFIN_THREADS, else the hardware concurrency.
int thread_count();

/// Fixed 10-significant-digit formatting used in every CSV.
std::string csv_number(double v);

/// Header tau,x,S,U[,B,C]; one row per slice and Greville point, values in market units.
void write_surface_csv(std::ostream& os, const SolutionSurface& surface);
/// The t = 0 slice in the same schema.
void write_final_slice_csv(std::ostream& os, const SolutionSurface& surface);
/// Header S,delta,gamma,theta at the final slice (interior Greville points).
void write_greeks_csv(std::ostream& os, const SolutionSurface& surface);
void write_ladder_csv(std::ostream& os, const std::vector<LadderRow>& rows);

}  // namespace isofin
