#include "tetris_cli/commands.hpp"

#include "tetris/dataset.hpp"
#include "tetris/parallel.hpp"
#include "tetris/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace tetris::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt_num(double v)
{
    if (!std::isfinite(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void ensure_parent(const fs::path& p)
{
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
    }
}

std::string dominant_text(const std::vector<BranchActivity>& activity)
{
    std::string s;
    for (const auto& a : activity) {
        if (!s.empty()) s += ' ';
        s += a.kernel.label() + "=" + fmt_num(a.normalized);
    }
    return s.empty() ? "none" : s;
}

void write_text_file(const fs::path& path, const std::string& text)
{
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace

std::string file_checksum(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

SpinDataset generate_dataset(const ExperimentConfig& config)
{
    return config.model == ModelKind::tfim ? build_tfim_dataset(config.tfim) : build_igt_dataset(config.igt);
}

void cmd_generate(const ExperimentConfig& config, std::ostream& out)
{
    SpinDataset ds = generate_dataset(config);
    ensure_parent(config.paths.dataset);
    write_dataset(ds, config.paths.dataset);
    const auto& g = ds.geometry();
    const auto& grid = ds.provenance().grid;
    out << "generated " << config.paths.dataset.string() << ": samples=" << ds.size() << " labels=" << grid.size()
        << " grid=[" << fmt_num(grid.front()) << ", " << fmt_num(grid.back()) << "] geometry=" << g.channels << 'x'
        << g.height << 'x' << g.width << " seed=" << ds.provenance().seed
        << " checksum=" << file_checksum(config.paths.dataset) << '\n';
}

TetrisModel cmd_train(const ExperimentConfig& config, std::ostream& out)
{
    SpinDataset ds = read_dataset(config.paths.dataset);
    for (const auto& k : config.network.kernels) {
        if (!fits(k, ds.geometry()))
            throw InvalidArgument("kernel " + k.label() + " does not fit the dataset geometry");
    }
    TetrisModel model = TetrisModel::build(config.network, ds.geometry());
    const int every = std::max(1, config.network.max_epochs / 10);
    TrainTrace trace = train(model, ds, config.network, [&](const EpochRecord& e) {
        if (e.epoch == 1 || e.epoch % every == 0) {
            out << "epoch " << e.epoch << " train_loss=" << fmt_num(e.train_loss) << " val_mse=" << fmt_num(e.val_mse)
                << '\n';
        }
    });
    ensure_parent(config.paths.checkpoint);
    write_checkpoint(model, config.paths.checkpoint);
    std::ostringstream csv;
    write_trace_csv(trace, csv);
    write_text_file(config.paths.trace, csv.str());

    double r2 = std::numeric_limits<double>::quiet_NaN();
    if (!trace.validation_indices.empty()) {
        SpinDataset val = ds.subset(trace.validation_indices);
        r2 = r_squared(model.predict(val).prediction, val.labels());
    }
    out << "trained " << config.paths.checkpoint.string() << ": epochs=" << trace.epochs.size()
        << (trace.stopped_early ? " (early stop)" : "") << " val_r2=" << fmt_num(r2)
        << " activity: " << dominant_text(branch_activity(model, ds)) << '\n';
    return model;
}

AnalysisReport cmd_analyze(const ExperimentConfig& config, std::ostream& out)
{
    TetrisModel model = read_checkpoint(config.paths.checkpoint);
    SpinDataset ds = read_dataset(config.paths.dataset);
    if (!(model.geometry() == ds.geometry()))
        throw InvalidArgument("checkpoint geometry does not match the dataset");
    AnalysisReport report = analyze(model, ds, config.analysis);
    write_report(report, config.paths.report);
    if (fs::exists(config.paths.trace)) {
        std::error_code ec;
        fs::copy_file(config.paths.trace, config.paths.report / "activations.csv",
                      fs::copy_options::overwrite_existing, ec);
        if (ec) throw IoError("cannot copy trace: " + ec.message());
    }

    out << "report " << config.paths.report.string() << '\n';
    out << "dominant: " << dominant_text(report.dominant) << '\n';
    out << "sample_r2=" << fmt_num(report.sample_r2) << " output_argmax=" << fmt_num(report.output_argmax())
        << " activation_argmax=" << fmt_num(report.activation_argmax())
        << " formula_argmax=" << fmt_num(report.formula_argmax()) << " shift=" << fmt_num(report.argmax_shift())
        << '\n';
    if (report.distillation) {
        const auto& d = *report.distillation;
        for (const auto& f : d.branch_fits) out << "linear " << f.kernel_label << ": R2=" << fmt_num(f.r2) << '\n';
        out << "formula[correlators]: " << d.output_vs_correlators.text
            << " R2=" << fmt_num(d.output_vs_correlators.r2_network_heldout) << '\n';
        out << "formula[activations]: " << d.output_vs_activations.text
            << " R2=" << fmt_num(d.output_vs_activations.r2_network_heldout) << '\n';
    }
    for (const auto& w : report.warnings) out << "warning: " << w << '\n';
    return report;
}

SweepResult cmd_sweep(const ExperimentConfig& config, std::ostream& out)
{
    SpinDataset ds = read_dataset(config.paths.dataset);
    SweepResult result = lambda_sweep(config.network, ds, config.sweep_lambda_max, config.sweep_repeats);
    std::ostringstream rows, summary;
    write_sweep_csv(result, rows);
    write_sweep_summary_csv(result, summary);
    write_text_file(config.paths.sweep, rows.str());
    fs::path summary_path = config.paths.sweep;
    summary_path.replace_extension();
    summary_path += "_summary.csv";
    write_text_file(summary_path, summary.str());
    out << "sweep " << config.paths.sweep.string() << ": rows=" << result.rows.size() << '\n';
    for (const auto& s : result.summary) {
        out << "lambda_max=" << fmt_num(s.lambda_max) << " mean_r2=" << fmt_num(s.mean_r2)
            << " dominant=" << (s.dominant.empty() ? "none" : s.dominant) << '\n';
    }
    return result;
}

void cmd_report(const ExperimentConfig& config, std::ostream& out)
{
    const fs::path dir = config.paths.report;
    if (!fs::is_directory(dir)) throw IoError("no report directory at " + dir.string());
    std::ifstream sj(dir / "summary.json");
    if (!sj) throw IoError("missing " + (dir / "summary.json").string());
    nlohmann::json summary;
    try {
        summary = nlohmann::json::parse(sj);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("unreadable summary.json: " + std::string(e.what()));
    }
    out << summary.dump(2) << '\n';
    std::ifstream ft(dir / "formulas.txt");
    if (ft) out << ft.rdbuf();
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out << "checksum " << f.filename().string() << ' ' << file_checksum(f) << '\n';
}

void cmd_pipeline(const ExperimentConfig& config, std::ostream& out)
{
    cmd_generate(config, out);
    cmd_train(config, out);
    cmd_analyze(config, out);
    cmd_report(config, out);
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"TetrisCNN spin-data pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::string out_dir;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON experiment config");
    app.add_option("--seed", seed, "global seed override");
    app.add_option("--threads", threads, "worker thread cap")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "directory relative paths are resolved against");
    app.add_option("--set", overrides, "config override key.path=value (repeatable)");

    auto* generate = app.add_subcommand("generate", "sample a dataset");
    auto* train_cmd = app.add_subcommand("train", "train a network on the dataset");
    auto* analyze_cmd = app.add_subcommand("analyze", "analyze a checkpoint and write the report");
    auto* sweep = app.add_subcommand("sweep", "train over a list of lambda_max values");
    auto* report = app.add_subcommand("report", "print an existing report");
    auto* pipeline = app.add_subcommand("pipeline", "generate, train, analyze and report");
    auto* show = app.add_subcommand("config", "print the resolved configuration");
    std::vector<double> lambda_max;
    std::optional<int> repeats;
    sweep->add_option("--lambda-max", lambda_max, "lambda_max values")->delimiter(',');
    sweep->add_option("--repeats", repeats, "seeds per lambda_max")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << e.what() << '\n';
        return 2;
    }

    try {
        if (threads) set_max_threads(*threads);
        nlohmann::json j = config_path.empty() ? nlohmann::json::object() : load_json(config_path);
        if (seed) j["seed"] = *seed;
        for (const auto& o : overrides) apply_override(j, o);
        if (!lambda_max.empty()) j["sweep"]["lambda_max"] = lambda_max;
        if (repeats) j["sweep"]["repeats"] = *repeats;
        fs::path base = out_dir.empty() ? fs::path{} : fs::path(out_dir);
        ExperimentConfig config;
        try {
            config = parse_config(j, base);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(e.what());
        }
        if (!base.empty()) {
            std::error_code ec;
            fs::create_directories(base, ec);
            if (ec) throw IoError("cannot create " + base.string() + ": " + ec.message());
        }

        if (*generate) cmd_generate(config, out);
        else if (*train_cmd) cmd_train(config, out);
        else if (*analyze_cmd) cmd_analyze(config, out);
        else if (*sweep) cmd_sweep(config, out);
        else if (*report) cmd_report(config, out);
        else if (*pipeline) cmd_pipeline(config, out);
        else if (*show) out << to_json(config).dump(2) << '\n';
        return 0;
    } catch (const Error& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: " << e.kind() << ": " << msg << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: internal: " << msg << '\n';
        return 1;
    }
}

} // namespace tetris::cli
