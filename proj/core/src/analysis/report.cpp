#include "tetris/analysis/report.hpp"

#include "tetris/analysis/svg.hpp"
#include "tetris/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace tetris {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double location(const std::optional<TransitionEstimate>& t)
{
    return t ? t->location : kNaN;
}

std::optional<TransitionEstimate> try_transition(const Curve& c, std::vector<std::string>& warnings,
                                                 const std::string& what)
{
    try {
        return transition_location(c);
    } catch (const InvalidArgument& e) {
        warnings.push_back(what + ": " + e.what());
        return std::nullopt;
    }
}

std::string linear_text(const LinearFit& fit)
{
    std::string s;
    for (std::size_t i = 0; i < fit.coefficients.size(); ++i) {
        if (fit.coefficients[i] == 0.0) {
            continue;
        }
        if (!s.empty()) {
            s += " + ";
        }
        s += format_constant(fit.coefficients[i]) + " * <" + fit.features[i].name + ">";
    }
    if (!s.empty()) {
        s += " + ";
    }
    return s + format_constant(fit.intercept);
}

std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream out(p);
    if (!out) {
        throw IoError("cannot write " + p.string());
    }
    out.precision(12);
    return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& p)
{
    out.close();
    if (!out) {
        throw IoError("failed writing " + p.string());
    }
}

nlohmann::ordered_json number(double v)
{
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

} // namespace

double AnalysisReport::output_argmax() const { return location(output_transition); }

double AnalysisReport::activation_argmax() const
{
    return branch_curves.empty() ? kNaN : location(branch_curves.front().transition);
}

double AnalysisReport::formula_argmax() const { return location(formula_transition); }

double AnalysisReport::argmax_shift() const { return formula_argmax() - activation_argmax(); }

AnalysisReport analyze(const TetrisModel& model, const SpinDataset& dataset, const AnalysisOptions& options)
{
    if (dataset.empty()) {
        throw InvalidArgument("analysis needs a non-empty dataset");
    }
    if (!(model.geometry() == dataset.geometry())) {
        throw InvalidArgument("model and dataset geometries differ");
    }
    AnalysisReport rep;
    const ForwardResult fwd = model.predict(dataset);
    rep.output = curve_from_samples(dataset.labels(), fwd.prediction);
    rep.sample_r2 = r_squared(fwd.prediction, dataset.labels());
    rep.output_transition = try_transition(rep.output, rep.warnings, "output transition");
    rep.activity = branch_activity(model, dataset);
    rep.dominant = dominant_branches(model, dataset, options.distill.dominance_threshold);
    if (rep.dominant.empty()) {
        rep.warnings.push_back("no dominant branch");
        return rep;
    }
    const std::size_t k = model.branch_count();
    std::vector<double> a(dataset.size());
    for (const BranchActivity& b : rep.dominant) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = fwd.activations[i * k + b.branch];
        }
        BranchCurve bc;
        bc.branch = b.branch;
        bc.kernel = b.kernel.label();
        bc.activation = curve_from_samples(dataset.labels(), a);
        bc.transition = try_transition(bc.activation, rep.warnings, "activation transition " + bc.kernel);
        rep.branch_curves.push_back(std::move(bc));
    }
    if (!options.run_distillation) {
        return rep;
    }
    try {
        rep.distillation = distill_network(model, dataset, options.distill);
    } catch (const InvalidArgument& e) {
        rep.warnings.push_back(std::string("distillation skipped: ") + e.what());
        return rep;
    }
    const Distillation& d = *rep.distillation;
    rep.warnings.insert(rep.warnings.end(), d.warnings.begin(), d.warnings.end());
    const auto& values = d.output_vs_correlators.values;
    if (std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
        rep.formula_transition =
            try_transition(Curve{rep.output.x, values, {}}, rep.warnings, "formula transition");
    }
    return rep;
}

void write_report(const AnalysisReport& report, const std::filesystem::path& directory, const TrainTrace* trace,
                  bool svg)
{
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) {
        throw IoError("cannot create " + directory.string() + ": " + ec.message());
    }
    const Distillation* d = report.distillation ? &*report.distillation : nullptr;

    {
        const auto p = directory / "curves.csv";
        auto out = open_out(p);
        out << "label,output,output_err,d_output";
        for (const auto& b : report.branch_curves) {
            out << ",\"a " << b.kernel << "\",\"a " << b.kernel << "_err\",\"d_a " << b.kernel << '"';
        }
        if (d) {
            out << ",formula_correlators,formula_activations";
        }
        out << '\n';
        for (std::size_t i = 0; i < report.output.size(); ++i) {
            out << report.output.x[i] << ',' << report.output.y[i] << ','
                << (report.output.y_err.empty() ? 0.0 : report.output.y_err[i]) << ','
                << (report.output_transition ? report.output_transition->derivative[i] : kNaN);
            for (const auto& b : report.branch_curves) {
                out << ',' << b.activation.y[i] << ',' << b.activation.y_err[i] << ','
                    << (b.transition ? b.transition->derivative[i] : kNaN);
            }
            if (d) {
                out << ',' << d->output_vs_correlators.values[i] << ',' << d->output_vs_activations.values[i];
            }
            out << '\n';
        }
        close_out(out, p);
    }
    {
        const auto p = directory / "activations.csv";
        auto out = open_out(p);
        if (trace) {
            write_trace_csv(*trace, out);
        } else {
            out << "epoch\n";
        }
        close_out(out, p);
    }
    {
        const auto p = directory / "linear_fits.csv";
        auto out = open_out(p);
        out << "branch,kernel,term,coefficient,r2\n";
        if (d) {
            for (const LinearFit& f : d->branch_fits) {
                for (std::size_t i = 0; i < f.features.size(); ++i) {
                    out << f.branch << ",\"" << f.kernel_label << "\",\"" << f.features[i].name << "\","
                        << f.coefficients[i] << ',' << f.r2 << '\n';
                }
                out << f.branch << ",\"" << f.kernel_label << "\",intercept," << f.intercept << ',' << f.r2 << '\n';
            }
        }
        close_out(out, p);
    }
    {
        const auto p = directory / "pareto.csv";
        auto out = open_out(p);
        out << "target,inputs,complexity,mse,formula\n";
        if (d) {
            for (const FormulaFit* f : {&d->output_vs_correlators, &d->output_vs_activations}) {
                const char* inputs = f == &d->output_vs_correlators ? "correlators" : "activations";
                for (const SrCandidate& c : f->pareto) {
                    out << f->target << ',' << inputs << ',' << c.complexity << ',' << c.mse << ",\""
                        << c.expression.to_string(f->variables) << "\"\n";
                }
            }
        }
        close_out(out, p);
    }
    {
        const auto p = directory / "formulas.txt";
        auto out = open_out(p);
        if (d) {
            for (const LinearFit& f : d->branch_fits) {
                out << "a" << f.kernel_label << " R2=" << format_constant(f.r2) << " : " << linear_text(f) << '\n';
            }
            out << "output[correlators] R2=" << format_constant(d->output_vs_correlators.r2_network_heldout) << " : "
                << d->output_vs_correlators.text << '\n';
            out << "output[activations] R2=" << format_constant(d->output_vs_activations.r2_network_heldout) << " : "
                << d->output_vs_activations.text << '\n';
        }
        close_out(out, p);
    }
    {
        nlohmann::ordered_json j;
        j["samples_r2"] = number(report.sample_r2);
        j["labels"] = report.output.size();
        j["output_argmax"] = number(report.output_argmax());
        j["activation_argmax"] = number(report.activation_argmax());
        j["formula_argmax"] = number(report.formula_argmax());
        j["argmax_shift"] = number(report.argmax_shift());
        auto& act = j["activity"] = nlohmann::ordered_json::array();
        for (const auto& a : report.activity) {
            act.push_back({{"branch", a.branch}, {"kernel", a.kernel.label()}, {"mean_abs", a.mean_abs},
                           {"normalized", a.normalized}});
        }
        auto& dom = j["dominant"] = nlohmann::ordered_json::array();
        for (const auto& a : report.dominant) {
            dom.push_back(a.kernel.label());
        }
        if (d) {
            auto& lf = j["linear_fits"] = nlohmann::ordered_json::array();
            for (const LinearFit& f : d->branch_fits) {
                nlohmann::ordered_json terms = nlohmann::ordered_json::object();
                for (std::size_t i = 0; i < f.features.size(); ++i) {
                    if (f.coefficients[i] != 0.0) {
                        terms[f.features[i].name] = f.coefficients[i];
                    }
                }
                lf.push_back({{"kernel", f.kernel_label}, {"r2", number(f.r2)}, {"intercept", f.intercept},
                              {"coefficients", terms}, {"degenerate", f.degenerate}});
            }
            j["network_r2_heldout"] = number(d->network_r2_heldout);
            for (const FormulaFit* f : {&d->output_vs_correlators, &d->output_vs_activations}) {
                j[f == &d->output_vs_correlators ? "formula_correlators" : "formula_activations"] = {
                    {"text", f->text},
                    {"complexity", f->complexity},
                    {"r2_labels_heldout", number(f->r2_labels_heldout)},
                    {"r2_network_heldout", number(f->r2_network_heldout)},
                    {"meets_threshold", f->meets_threshold}};
            }
        }
        j["warnings"] = report.warnings;
        const auto p = directory / "summary.json";
        auto out = open_out(p);
        out << j.dump(2) << '\n';
        close_out(out, p);
    }
    if (!svg) {
        return;
    }
    auto write_text = [&](const std::string& name, const std::string& text) {
        const auto p = directory / name;
        auto out = open_out(p);
        out << text;
        close_out(out, p);
    };
    std::vector<SvgSeries> out_series{{"output", report.output.x, report.output.y}};
    if (d) {
        out_series.push_back({"formula (correlators)", report.output.x, d->output_vs_correlators.values});
    }
    write_text("output.svg", svg_line_plot("Network output", "label", "prediction", out_series));
    std::vector<SvgSeries> act_series;
    for (const auto& b : report.branch_curves) {
        act_series.push_back({"a " + b.kernel, b.activation.x, b.activation.y});
    }
    write_text("activations.svg", svg_line_plot("Dominant branch activations", "label", "mean activation", act_series));
}

} // namespace tetris
