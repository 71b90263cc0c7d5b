#pragma once

#include "tetris/analysis/curve.hpp"
#include "tetris/analysis/expression.hpp"
#include "tetris/analysis/linear_fit.hpp"
#include "tetris/analysis/symbolic_regression.hpp"
#include "tetris/training.hpp"

#include <string>
#include <vector>

namespace tetris {

struct DistillOptions {
    double dominance_threshold = 0.5;
    // Lowest-complexity Pareto member whose R^2 against the network output
    // on the held-out labels reaches this value is selected.
    double selection_r2 = 0.95;
    // Every holdout_stride-th label (starting at holdout_stride - 1) is held out.
    std::size_t holdout_stride = 5;
    LinearFitOptions linear;
    SrConfig sr;
};

struct FormulaFit {
    std::string target;
    std::vector<std::string> variables;
    Expression expression;
    std::string text;
    int complexity = 0;
    double r2_labels_heldout = 0.0;   // against the true labels
    double r2_network_heldout = 0.0;  // against the network's per-label mean output
    bool meets_threshold = false;
    std::vector<SrCandidate> pareto;
    std::vector<double> values;  // formula at every label of the grid
};

struct Distillation {
    std::vector<BranchActivity> dominant;
    std::vector<LinearFit> branch_fits;  // one per dominant branch
    Curve output;                        // per-label mean network prediction
    std::vector<std::size_t> heldout;    // label indices
    double network_r2_heldout = 0.0;     // per-label mean prediction vs label
    FormulaFit output_vs_correlators;
    FormulaFit output_vs_activations;
    std::vector<std::string> warnings;
};

// Linear fits for each dominant branch and symbolic fits of the per-label
// mean network output against (a) the correlators those fits selected and
// (b) the dominant branch activations. A dataset with one distinct label
// yields constant formulas. Throws InvalidArgument if no branch is active.
Distillation distill_network(const TetrisModel& model, const SpinDataset& dataset, const DistillOptions& options = {});

} // namespace tetris
