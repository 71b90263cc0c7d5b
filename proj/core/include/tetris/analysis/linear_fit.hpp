#pragma once

#include "tetris/analysis/curve.hpp"
#include "tetris/correlators.hpp"
#include "tetris/dataset.hpp"
#include "tetris/tetris_model.hpp"

#include <span>
#include <string>
#include <vector>

namespace tetris {

// Ordinary least squares with intercept on a row-major design matrix.
// Rank-deficient designs get the minimum-norm solution and degenerate = true.
struct LeastSquares {
    std::vector<double> coefficients;
    double intercept = 0.0;
    double r2 = 0.0;
    int rank = 0;
    bool degenerate = false;
};

LeastSquares least_squares(std::span<const double> design, std::size_t rows, std::size_t cols,
                           std::span<const double> target);

struct LinearFit {
    std::size_t branch = 0;
    std::string kernel_label;
    std::vector<CorrelatorFeature> features;
    std::vector<double> coefficients;  // one per feature, 0 for unselected ones
    std::vector<std::size_t> selected;
    double intercept = 0.0;
    double r2 = 0.0;
    bool degenerate = false;
    std::string warning;

    Curve activation;  // per-label mean activation
    std::vector<double> fitted;  // per label

    // Index into features of the largest |coefficient|.
    std::size_t leading_feature() const;
};

struct LinearFitOptions {
    // When a kernel has more sub-footprint correlators than half the label
    // count, features are added greedily (largest R^2 gain first) up to
    // this fraction of the label count.
    double max_feature_fraction = 0.25;
    double min_r2_gain = 1e-6;
};

// Fit of the per-label mean activation of one branch against the per-label
// means of its sub-footprint correlators.
LinearFit branch_linear_fit(const TetrisModel& model, const SpinDataset& dataset, std::size_t branch,
                            const LinearFitOptions& options = {});

// Same, from precomputed per-sample activations (column `branch` of a
// [samples, K] matrix) and a correlator table over the branch's features.
LinearFit branch_linear_fit(std::span<const double> activation, const CorrelatorTable& table,
                            const LinearFitOptions& options = {});

} // namespace tetris
