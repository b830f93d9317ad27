#include "spad/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace spad {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

}  // namespace

SimplexResult simplex_minimize(const ObjectiveFn& f, std::span<const double> start,
                               const SimplexOptions& options) {
    const std::size_t n = start.size();
    if (n == 0) {
        throw std::invalid_argument("simplex_minimize: empty start point");
    }

    SimplexResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(start.begin(), start.end()));
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1][i] += options.initial_step;
    }
    for (std::size_t i = 0; i <= n; ++i) {
        fv[i] = eval(simplex[i]);
    }

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        result.iterations = iter + 1;
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[n - 1];

        // Convergence: function spread and simplex extent around the best vertex.
        const double f_spread = std::abs(fv[worst] - fv[best]);
        double x_spread = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                x_spread = std::max(x_spread, std::abs(simplex[i][j] - simplex[best][j]));
            }
        }
        if (f_spread <= options.objective_tol * (1.0 + std::abs(fv[best])) ||
            x_spread <= options.param_tol) {
            result.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                centroid[j] += simplex[i][j];
            }
        }
        for (double& c : centroid) {
            c /= static_cast<double>(n);
        }

        for (std::size_t j = 0; j < n; ++j) {
            trial[j] = centroid[j] + kReflect * (centroid[j] - simplex[worst][j]);
        }
        const double f_reflect = eval(trial);

        if (f_reflect < fv[order[0]]) {
            // Try to expand past the reflected point.
            for (std::size_t j = 0; j < n; ++j) {
                trial2[j] = centroid[j] + kExpand * (trial[j] - centroid[j]);
            }
            const double f_expand = eval(trial2);
            if (f_expand < f_reflect) {
                simplex[worst] = trial2;
                fv[worst] = f_expand;
            } else {
                simplex[worst] = trial;
                fv[worst] = f_reflect;
            }
        } else if (f_reflect < fv[second_worst]) {
            simplex[worst] = trial;
            fv[worst] = f_reflect;
        } else {
            // Contract toward the better of worst/reflected.
            const bool outside = f_reflect < fv[worst];
            const std::vector<double>& toward = outside ? trial : simplex[worst];
            for (std::size_t j = 0; j < n; ++j) {
                trial2[j] = centroid[j] + kContract * (toward[j] - centroid[j]);
            }
            const double f_contract = eval(trial2);
            if (f_contract < std::min(f_reflect, fv[worst])) {
                simplex[worst] = trial2;
                fv[worst] = f_contract;
            } else {
                // Shrink everything toward the best vertex.
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) {
                        continue;
                    }
                    for (std::size_t j = 0; j < n; ++j) {
                        simplex[i][j] =
                            simplex[best][j] + kShrink * (simplex[i][j] - simplex[best][j]);
                    }
                    fv[i] = eval(simplex[i]);
                }
            }
        }
    }

    const std::size_t best = static_cast<std::size_t>(
        std::min_element(fv.begin(), fv.end()) - fv.begin());
    result.x = simplex[best];
    result.fx = fv[best];
    return result;
}

}  // namespace spad
