#pragma once

#include "tetris/analysis/expression.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tetris {

struct SrConfig {
    int population = 256;
    int generations = 6000;
    double crossover_rate = 0.5;
    double subtree_mutation_rate = 0.2;
    double point_mutation_rate = 0.2;
    int tournament_size = 5;
    int max_complexity = 20;
    int initial_complexity = 7;
    // Selection score is MSE / Var(y) + parsimony * complexity.
    double parsimony = 1e-4;
    int elite = 4;
    // Hill-climbing on constants every this many generations.
    int constant_interval = 50;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SrCandidate {
    Expression expression;
    double mse = 0.0;
    int complexity = 0;
};

struct SrResult {
    // Non-dominated (complexity, MSE) set, sorted by increasing complexity
    // with strictly decreasing MSE.
    std::vector<SrCandidate> pareto;
    int generations_run = 0;

    const SrCandidate& most_accurate() const { return pareto.back(); }
};

// Genetic-programming fit of target ~ f(features). features is row-major
// [rows, variables]. Needs >= 10 rows and >= 1 variable. A constant target
// returns that constant immediately. Deterministic given config.seed.
SrResult sr_fit(std::span<const double> features, std::size_t rows, std::size_t variables,
                std::span<const double> target, const SrConfig& config);

// Gauss-Newton / Levenberg-Marquardt refinement of the expression's constants.
Expression polish_constants(const Expression& expression, std::span<const double> features, std::size_t rows,
                            std::size_t variables, std::span<const double> target, int iterations = 50);

double mean_squared_error(const Expression& expression, std::span<const double> features, std::size_t rows,
                          std::size_t variables, std::span<const double> target);

} // namespace tetris
