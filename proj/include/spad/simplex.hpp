#pragma once

#include <functional>
#include <span>
#include <vector>

namespace spad {

// Derivative-free Nelder-Mead descent, used by the model fit. Deterministic:
// no randomized moves, ties broken by index.
struct SimplexOptions {
    int max_iterations = 4000;
    double objective_tol = 1e-12;  // converged when the simplex f-spread falls below
    double param_tol = 1e-9;       // ... or the simplex collapses in coordinates
    double initial_step = 0.5;     // simplex edge length around the start point
};

struct SimplexResult {
    std::vector<double> x;
    double fx = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

using ObjectiveFn = std::function<double(std::span<const double>)>;

SimplexResult simplex_minimize(const ObjectiveFn& f, std::span<const double> start,
                               const SimplexOptions& options = {});

}  // namespace spad
