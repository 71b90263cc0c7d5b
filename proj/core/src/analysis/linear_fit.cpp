#include "tetris/analysis/linear_fit.hpp"

#include "tetris/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tetris {

LeastSquares least_squares(std::span<const double> design, std::size_t rows, std::size_t cols,
                           std::span<const double> target)
{
    if (design.size() != rows * cols || target.size() != rows) {
        throw InvalidArgument("least squares: design and target sizes disagree");
    }
    if (rows == 0) {
        throw InvalidArgument("least squares needs at least one row");
    }
    Eigen::MatrixXd a(rows, cols + 1);
    Eigen::VectorXd y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            a(r, c) = design[r * cols + c];
        }
        a(r, cols) = 1.0;
        y(r) = target[r];
    }
    if (!a.allFinite() || !y.allFinite()) {
        throw NumericalError("least squares: non-finite input");
    }
    // Center so the intercept does not distort the rank decision.
    Eigen::MatrixXd centered = a.leftCols(cols).rowwise() - a.leftCols(cols).colwise().mean();
    const double ymean = y.mean();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(1e-10);
    cod.compute(centered);
    LeastSquares out;
    out.rank = static_cast<int>(cod.rank());
    out.degenerate = out.rank < static_cast<int>(cols);
    Eigen::VectorXd beta = cols > 0 ? Eigen::VectorXd(cod.solve((y.array() - ymean).matrix())) : Eigen::VectorXd();
    out.coefficients.assign(beta.data(), beta.data() + beta.size());
    out.intercept = ymean;
    for (std::size_t c = 0; c < cols; ++c) {
        out.intercept -= beta(static_cast<Eigen::Index>(c)) * a.col(static_cast<Eigen::Index>(c)).mean();
    }
    const Eigen::VectorXd fit = (cols > 0 ? Eigen::VectorXd(a.leftCols(cols) * beta) : Eigen::VectorXd::Zero(rows)).array() + out.intercept;
    const double ss_res = (y - fit).squaredNorm();
    const double ss_tot = (y.array() - ymean).matrix().squaredNorm();
    out.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
    return out;
}

std::size_t LinearFit::leading_feature() const
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < coefficients.size(); ++i) {
        if (std::abs(coefficients[i]) > std::abs(coefficients[best])) {
            best = i;
        }
    }
    return best;
}

namespace {

LeastSquares fit_columns(const CorrelatorTable& table, const std::vector<std::size_t>& cols,
                         const std::vector<double>& y)
{
    const std::size_t g = table.groups();
    std::vector<double> design(g * cols.size());
    for (std::size_t r = 0; r < g; ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            design[r * cols.size() + c] = table.mean(r, cols[c]);
        }
    }
    return least_squares(design, g, cols.size(), y);
}

} // namespace

LinearFit branch_linear_fit(std::span<const double> activation, const CorrelatorTable& table,
                            const LinearFitOptions& options)
{
    if (activation.size() != table.samples()) {
        throw InvalidArgument("activation count does not match the correlator table");
    }
    if (table.features.empty()) {
        throw InvalidArgument("correlator table has no features");
    }
    LinearFit fit;
    fit.features = table.features;
    fit.kernel_label = table.features.front().kernel_label;
    fit.activation = curve_from_samples(table.labels, activation);
    const std::vector<double>& y = fit.activation.y;
    const std::size_t g = table.groups();
    const std::size_t nf = table.features.size();
    if (g < 2) {
        throw InvalidArgument("linear fit needs at least two distinct labels");
    }

    std::vector<std::size_t> cols;
    LeastSquares best;
    if (2 * nf <= g) {
        for (std::size_t i = 0; i < nf; ++i) {
            cols.push_back(i);
        }
        best = fit_columns(table, cols, y);
    } else {
        const std::size_t limit =
            std::max<std::size_t>(1, static_cast<std::size_t>(options.max_feature_fraction * static_cast<double>(g)));
        best.r2 = 0.0;
        best.intercept = 0.0;
        for (double v : y) {
            best.intercept += v / static_cast<double>(g);
        }
        while (cols.size() < limit) {
            std::size_t pick = nf;
            LeastSquares pick_fit;
            for (std::size_t i = 0; i < nf; ++i) {
                if (std::find(cols.begin(), cols.end(), i) != cols.end()) {
                    continue;
                }
                auto trial = cols;
                trial.push_back(i);
                LeastSquares f = fit_columns(table, trial, y);
                if (f.degenerate) {
                    continue;
                }
                if (pick == nf || f.r2 > pick_fit.r2) {
                    pick = i;
                    pick_fit = std::move(f);
                }
            }
            if (pick == nf || (!cols.empty() && pick_fit.r2 - best.r2 < options.min_r2_gain)) {
                break;
            }
            cols.push_back(pick);
            best = std::move(pick_fit);
        }
    }
    fit.selected = cols;
    fit.coefficients.assign(nf, 0.0);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        fit.coefficients[cols[c]] = best.coefficients[c];
    }
    fit.intercept = best.intercept;
    fit.r2 = best.r2;
    fit.degenerate = best.degenerate;
    if (fit.degenerate) {
        fit.warning = "rank-deficient correlator design (rank " + std::to_string(best.rank) + " of " +
                      std::to_string(cols.size()) + "); minimum-norm coefficients reported";
    }
    fit.fitted.assign(g, fit.intercept);
    for (std::size_t r = 0; r < g; ++r) {
        for (std::size_t i = 0; i < nf; ++i) {
            fit.fitted[r] += fit.coefficients[i] * table.mean(r, i);
        }
    }
    return fit;
}

LinearFit branch_linear_fit(const TetrisModel& model, const SpinDataset& dataset, std::size_t branch,
                            const LinearFitOptions& options)
{
    if (branch >= model.branch_count()) {
        throw InvalidArgument("branch index " + std::to_string(branch) + " out of range");
    }
    if (dataset.empty()) {
        throw InvalidArgument("linear fit needs a non-empty dataset");
    }
    const KernelSpec kernel = model.branches()[branch].kernel;
    const CorrelatorTable table = correlator_table(dataset, kernel_features(kernel, dataset.geometry()));
    const ForwardResult r = model.predict(dataset);
    std::vector<double> a(dataset.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = r.activations[i * model.branch_count() + branch];
    }
    LinearFit fit = branch_linear_fit(a, table, options);
    fit.branch = branch;
    fit.kernel_label = kernel.label();
    return fit;
}

} // namespace tetris
