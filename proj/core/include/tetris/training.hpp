#pragma once

#include "tetris/dataset.hpp"
#include "tetris/tetris_model.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace tetris {

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;  // MSE + L1, averaged over the epoch's batches
    double train_mse = 0.0;
    double val_loss = 0.0;
    double val_mse = 0.0;
    std::vector<double> mean_abs_activation;  // per branch, over the validation split
};

struct TrainTrace {
    std::vector<std::string> kernels;
    std::vector<EpochRecord> epochs;
    bool stopped_early = false;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> validation_indices;
};

// Columns: epoch, losses, then one mean |a_k| column per kernel label.
void write_trace_csv(const TrainTrace& trace, std::ostream& out);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

// Per distinct label, a shuffled round(fraction * n) share goes to
// validation (at least one when the label has two or more samples).
Split stratified_split(std::span<const double> labels, double fraction, std::uint64_t seed);

double r_squared(std::span<const double> prediction, std::span<const double> target);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Minimizes MSE + sum_k lambda_k |a_k| on the training split. The label
// scaler is fitted on the dataset and stored in the model.
TrainTrace train(TetrisModel& model, const SpinDataset& dataset, const TetrisConfig& config,
                 const EpochCallback& on_epoch = {});

struct BranchActivity {
    std::size_t branch = 0;
    KernelSpec kernel;
    double mean_abs = 0.0;
    double normalized = 0.0;  // relative to the largest branch
};

// Every branch sorted by mean |a_k| over the dataset, largest first.
std::vector<BranchActivity> branch_activity(const TetrisModel& model, const SpinDataset& dataset);

// The branches whose normalized activation reaches `threshold`. Empty when
// every branch is silent.
std::vector<BranchActivity> dominant_branches(const TetrisModel& model, const SpinDataset& dataset,
                                              double threshold = 0.5);

struct SweepRow {
    double lambda_max = 0.0;
    std::uint64_t seed = 0;
    double r2 = 0.0;                  // validation split
    std::vector<double> normalized;   // per branch in kernel-list order
    std::string dominant;             // label of the strongest branch, "" if all silent
};

struct SweepSummary {
    double lambda_max = 0.0;
    double mean_r2 = 0.0;
    std::vector<double> mean_normalized;
    std::string dominant;  // argmax of mean_normalized
};

struct SweepResult {
    std::vector<std::string> kernels;
    std::vector<SweepRow> rows;
    std::vector<SweepSummary> summary;
};

// Trains repeats x |lambda_max_values| models (seed = config.seed + repeat,
// lambda_min held fixed) on independent workers.
SweepResult lambda_sweep(const TetrisConfig& config, const SpinDataset& dataset,
                         const std::vector<double>& lambda_max_values, int repeats);

void write_sweep_csv(const SweepResult& result, std::ostream& out);
void write_sweep_summary_csv(const SweepResult& result, std::ostream& out);

} // namespace tetris
