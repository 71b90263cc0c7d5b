#include "tetris/analysis/distill.hpp"

#include "tetris/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tetris {

namespace {

double r2_on(const std::vector<double>& pred, const std::vector<double>& truth, const std::vector<std::size_t>& rows)
{
    std::vector<double> p;
    std::vector<double> t;
    for (std::size_t r : rows) {
        p.push_back(pred[r]);
        t.push_back(truth[r]);
    }
    return r_squared(p, t);
}

// features: [groups, vars] row-major over the whole label grid.
FormulaFit fit_formula(const std::string& target_name, const std::vector<std::string>& names,
                       const std::vector<double>& features, const Curve& output, const std::vector<double>& labels,
                       const std::vector<std::size_t>& train, const std::vector<std::size_t>& heldout,
                       const DistillOptions& options)
{
    const std::size_t vars = names.size();
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t r : train) {
        x.insert(x.end(), features.begin() + static_cast<std::ptrdiff_t>(r * vars),
                 features.begin() + static_cast<std::ptrdiff_t>((r + 1) * vars));
        y.push_back(output.y[r]);
    }
    FormulaFit f;
    f.target = target_name;
    f.variables = names;
    const SrResult sr = sr_fit(x, train.size(), vars, y, options.sr);
    f.pareto = sr.pareto;

    const std::size_t groups = labels.size();
    int best = -1;
    double best_r2 = -std::numeric_limits<double>::infinity();
    std::vector<double> values;
    for (std::size_t i = 0; i < sr.pareto.size(); ++i) {
        if (!sr.pareto[i].expression.evaluate_rows(features, groups, vars, values)) {
            continue;
        }
        const double r2 = r2_on(values, output.y, heldout);
        if (r2 >= options.selection_r2) {
            best = static_cast<int>(i);
            f.meets_threshold = true;
            break;
        }
        if (r2 > best_r2) {
            best_r2 = r2;
            best = static_cast<int>(i);
        }
    }
    if (best < 0) {
        best = 0;
    }
    f.expression = sr.pareto[static_cast<std::size_t>(best)].expression;
    f.complexity = f.expression.complexity();
    f.text = f.expression.to_string(names);
    if (f.expression.evaluate_rows(features, groups, vars, f.values)) {
        f.r2_labels_heldout = r2_on(f.values, labels, heldout);
        f.r2_network_heldout = r2_on(f.values, output.y, heldout);
    } else {
        f.values.assign(groups, std::numeric_limits<double>::quiet_NaN());
        f.r2_labels_heldout = -std::numeric_limits<double>::infinity();
        f.r2_network_heldout = -std::numeric_limits<double>::infinity();
    }
    return f;
}

FormulaFit constant_formula(const std::string& target_name, double value, std::size_t groups)
{
    FormulaFit f;
    f.target = target_name;
    f.expression = Expression::constant(value);
    f.complexity = 1;
    f.text = f.expression.to_string();
    f.r2_labels_heldout = 1.0;
    f.r2_network_heldout = 1.0;
    f.meets_threshold = true;
    f.pareto.push_back(SrCandidate{f.expression, 0.0, 1});
    f.values.assign(groups, value);
    return f;
}

} // namespace

Distillation distill_network(const TetrisModel& model, const SpinDataset& dataset, const DistillOptions& options)
{
    if (dataset.empty()) {
        throw InvalidArgument("distillation needs a non-empty dataset");
    }
    if (options.holdout_stride < 2) {
        throw InvalidArgument("holdout stride must be >= 2");
    }
    Distillation d;
    d.dominant = dominant_branches(model, dataset, options.dominance_threshold);
    if (d.dominant.empty()) {
        throw InvalidArgument("no active branch to distill");
    }
    const ForwardResult fwd = model.predict(dataset);
    const std::size_t k = model.branch_count();
    d.output = curve_from_samples(dataset.labels(), fwd.prediction);
    const std::vector<double>& labels = d.output.x;
    const std::size_t groups = labels.size();

    std::vector<double> act(dataset.size());
    std::vector<std::vector<double>> act_means;
    for (const BranchActivity& b : d.dominant) {
        for (std::size_t i = 0; i < act.size(); ++i) {
            act[i] = fwd.activations[i * k + b.branch];
        }
        const CorrelatorTable table = correlator_table(dataset, kernel_features(b.kernel, dataset.geometry()));
        if (groups >= 2) {
            LinearFit fit = branch_linear_fit(act, table, options.linear);
            fit.branch = b.branch;
            fit.kernel_label = b.kernel.label();
            if (!fit.warning.empty()) {
                d.warnings.push_back(fit.kernel_label + ": " + fit.warning);
            }
            d.branch_fits.push_back(std::move(fit));
        }
        act_means.push_back(curve_from_samples(dataset.labels(), act).y);
    }

    if (groups < 2) {
        d.warnings.push_back("single distinct label; formulas are constant");
        d.output_vs_correlators = constant_formula("output", d.output.y[0], groups);
        d.output_vs_activations = constant_formula("output", d.output.y[0], groups);
        d.network_r2_heldout = 1.0;
        return d;
    }

    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < groups; ++g) {
        (g % options.holdout_stride == options.holdout_stride - 1 ? d.heldout : train).push_back(g);
    }
    if (train.size() < 10 || d.heldout.empty()) {
        throw InvalidArgument("distillation needs at least 10 training labels and one held-out label; got " +
                              std::to_string(groups) + " distinct labels");
    }
    d.network_r2_heldout = r2_on(d.output.y, labels, d.heldout);

    // Correlators picked by the branch fits, deduplicated by name.
    std::vector<CorrelatorFeature> chosen;
    for (const LinearFit& fit : d.branch_fits) {
        for (std::size_t i : fit.selected) {
            const auto& f = fit.features[i];
            if (std::none_of(chosen.begin(), chosen.end(), [&](const CorrelatorFeature& c) { return c.name == f.name; })) {
                chosen.push_back(f);
            }
        }
    }
    const CorrelatorTable table = correlator_table(dataset, chosen);
    std::vector<std::string> corr_names;
    for (const auto& f : chosen) {
        corr_names.push_back("<" + f.name + ">");
    }
    d.output_vs_correlators = fit_formula("output", corr_names, table.group_means, d.output, labels, train,
                                          d.heldout, options);

    std::vector<std::string> act_names;
    std::vector<double> act_features(groups * d.dominant.size());
    for (std::size_t j = 0; j < d.dominant.size(); ++j) {
        act_names.push_back("a" + d.dominant[j].kernel.label());
        for (std::size_t g = 0; g < groups; ++g) {
            act_features[g * d.dominant.size() + j] = act_means[j][g];
        }
    }
    DistillOptions act_options = options;
    act_options.sr.seed = options.sr.seed + 1;
    d.output_vs_activations = fit_formula("output", act_names, act_features, d.output, labels, train, d.heldout,
                                          act_options);
    for (const FormulaFit* f : {&d.output_vs_correlators, &d.output_vs_activations}) {
        if (!f->meets_threshold) {
            d.warnings.push_back("no Pareto formula over " + std::string(f == &d.output_vs_correlators ? "correlators" : "activations") +
                                 " reaches held-out R^2 " + format_constant(options.selection_r2) +
                                 "; most accurate held-out candidate reported");
        }
    }
    return d;
}

} // namespace tetris
