#pragma once

#include "tetris/analysis/curve.hpp"
#include "tetris/analysis/distill.hpp"
#include "tetris/training.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tetris {

struct AnalysisOptions {
    DistillOptions distill;
    bool run_distillation = true;
};

struct BranchCurve {
    std::size_t branch = 0;
    std::string kernel;
    Curve activation;
    std::optional<TransitionEstimate> transition;
};

struct AnalysisReport {
    Curve output;  // per-label mean prediction
    double sample_r2 = 0.0;
    std::optional<TransitionEstimate> output_transition;
    std::vector<BranchActivity> activity;   // every branch, strongest first
    std::vector<BranchActivity> dominant;
    std::vector<BranchCurve> branch_curves; // dominant branches
    std::optional<Distillation> distillation;
    // Argmax of d(formula over correlators)/d(label) on the label grid.
    std::optional<TransitionEstimate> formula_transition;
    std::vector<std::string> warnings;

    // Locations in label units; NaN when unavailable.
    double output_argmax() const;
    double activation_argmax() const;  // strongest dominant branch
    double formula_argmax() const;
    double argmax_shift() const;       // formula minus activation
};

// Transition estimates, branch activity, linear and symbolic distillation
// over the whole dataset. Missing pieces (too few labels, no dominant
// branch) become warnings rather than errors.
AnalysisReport analyze(const TetrisModel& model, const SpinDataset& dataset, const AnalysisOptions& options = {});

// Writes curves.csv, activations.csv (when a trace is given, else header
// only), linear_fits.csv, pareto.csv, formulas.txt, summary.json and, if
// requested, output.svg and activations.svg. Throws IoError on failure.
void write_report(const AnalysisReport& report, const std::filesystem::path& directory,
                  const TrainTrace* trace = nullptr, bool svg = true);

} // namespace tetris
