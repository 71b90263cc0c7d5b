#include "tetris_cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace tetris::cli {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items()) {
        if (!ok.count(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->template get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base)
{
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

std::string model_name(ModelKind kind, Basis basis)
{
    if (kind == ModelKind::igt) return "igt";
    return basis == Basis::z ? "tfim_z" : "tfim_y";
}

void parse_network(const json& j, TetrisConfig& net)
{
    const std::string where = "network";
    check_keys(j, where, {"kernels", "filters", "task_hidden", "task_widths", "lambda_min", "lambda_max",
                          "optimizer", "learning_rate", "weight_decay", "max_epochs", "early_stopping", "patience",
                          "label_scaling", "batch_size", "validation_fraction", "activation"});
    if (j.contains("kernels")) {
        std::vector<std::string> labels;
        read(j, "kernels", labels, where);
        net.kernels = parse_kernel_list(labels);
    }
    read(j, "filters", net.filters, where);
    std::vector<int> hidden(net.task_widths.begin() + 1, net.task_widths.end() - 1);
    if (j.contains("task_widths") && j.contains("task_hidden"))
        throw ConfigError("network: give task_widths or task_hidden, not both");
    if (j.contains("task_widths")) {
        read(j, "task_widths", net.task_widths, where);
    } else {
        read(j, "task_hidden", hidden, where);
        net.task_widths.clear();
        net.task_widths.push_back(static_cast<int>(net.kernels.size()));
        net.task_widths.insert(net.task_widths.end(), hidden.begin(), hidden.end());
        net.task_widths.push_back(1);
    }
    read(j, "lambda_min", net.lambda_min, where);
    read(j, "lambda_max", net.lambda_max, where);
    if (j.contains("optimizer")) net.optimizer.kind = nn::parse_optimizer(j["optimizer"].get<std::string>());
    read(j, "learning_rate", net.optimizer.learning_rate, where);
    read(j, "weight_decay", net.optimizer.weight_decay, where);
    read(j, "max_epochs", net.max_epochs, where);
    read(j, "early_stopping", net.early_stopping, where);
    read(j, "patience", net.patience, where);
    if (j.contains("label_scaling")) net.label_scaling = parse_label_scaling(j["label_scaling"].get<std::string>());
    read(j, "batch_size", net.batch_size, where);
    read(j, "validation_fraction", net.validation_fraction, where);
    if (j.contains("activation")) net.activation = nn::parse_activation(j["activation"].get<std::string>());
}

void parse_analysis(const json& j, AnalysisOptions& opts)
{
    const std::string where = "analysis";
    check_keys(j, where, {"run_distillation", "dominance_threshold", "selection_r2", "holdout_stride", "linear", "sr"});
    read(j, "run_distillation", opts.run_distillation, where);
    auto& d = opts.distill;
    read(j, "dominance_threshold", d.dominance_threshold, where);
    read(j, "selection_r2", d.selection_r2, where);
    read(j, "holdout_stride", d.holdout_stride, where);
    if (j.contains("linear")) {
        const auto& l = j["linear"];
        check_keys(l, "analysis.linear", {"max_feature_fraction", "min_r2_gain"});
        read(l, "max_feature_fraction", d.linear.max_feature_fraction, "analysis.linear");
        read(l, "min_r2_gain", d.linear.min_r2_gain, "analysis.linear");
    }
    if (j.contains("sr")) {
        const auto& s = j["sr"];
        const std::string w = "analysis.sr";
        check_keys(s, w, {"population", "generations", "crossover_rate", "subtree_mutation_rate",
                          "point_mutation_rate", "tournament_size", "max_complexity", "initial_complexity",
                          "parsimony", "elite", "constant_interval"});
        read(s, "population", d.sr.population, w);
        read(s, "generations", d.sr.generations, w);
        read(s, "crossover_rate", d.sr.crossover_rate, w);
        read(s, "subtree_mutation_rate", d.sr.subtree_mutation_rate, w);
        read(s, "point_mutation_rate", d.sr.point_mutation_rate, w);
        read(s, "tournament_size", d.sr.tournament_size, w);
        read(s, "max_complexity", d.sr.max_complexity, w);
        read(s, "initial_complexity", d.sr.initial_complexity, w);
        read(s, "parsimony", d.sr.parsimony, w);
        read(s, "elite", d.sr.elite, w);
        read(s, "constant_interval", d.sr.constant_interval, w);
    }
}

json grid_json(const std::vector<double>& grid) { return grid; }

} // namespace

std::string ExperimentConfig::dataset_name() const { return model_name(model, tfim.basis); }

TetrisConfig default_network(const std::string& dataset)
{
    TetrisConfig c;
    c.filters = 8;
    c.batch_size = 64;
    c.patience = 10;
    if (dataset == "tfim_z") {
        c.kernels = parse_kernel_list({"[(1,1),1]", "[(2,1),1]", "[(2,1),2]", "[(2,1),3]", "[(3,1),1]", "[(3,1),2]",
                                       "[(3,1),3]"});
        c.task_widths = {7, 32, 1};
        c.lambda_min = 1e-4;
        c.lambda_max = 1e0;
        c.optimizer.kind = nn::OptimizerKind::adagrad;
        c.optimizer.learning_rate = 1e-2;
        c.optimizer.weight_decay = 1e-2;
        c.max_epochs = 100;
        c.early_stopping = true;
    } else if (dataset == "tfim_y") {
        c.kernels = parse_kernel_list({"[(1,1),1]", "[(2,1),1]", "[(2,1),2]", "[(3,1),1]", "[(3,1),2]"});
        c.task_widths = {5, 32, 16, 1};
        c.lambda_min = 1e-4;
        c.lambda_max = 1e-1;
        c.optimizer.kind = nn::OptimizerKind::adamw;
        c.optimizer.learning_rate = 5e-4;
        c.optimizer.weight_decay = 1e-1;
        c.max_epochs = 100;
        c.early_stopping = false;
    } else if (dataset == "igt") {
        c.kernels = parse_kernel_list({"[(1,1),1]", "[(2,1),1]", "[(1,2),1]", "[(2,2),1]", "[(2,1),2]", "[(1,2),2]",
                                       "[(3,1),1]", "[(3,2),1]", "[(1,3),1]", "[(2,3),1]", "[(3,3),1]"});
        c.task_widths = {11, 32, 16, 1};
        c.lambda_min = 1e-5;
        c.lambda_max = 1e-1;
        c.optimizer.kind = nn::OptimizerKind::adagrad;
        c.optimizer.learning_rate = 5e-2;
        c.optimizer.weight_decay = 1e-5;
        c.max_epochs = 1500;
        c.early_stopping = false;
        c.label_scaling = LabelScaling::min_max;
    } else {
        throw ConfigError("unknown dataset preset '" + dataset + "'");
    }
    return c;
}

json load_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void apply_override(json& config, const std::string& assignment)
{
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    std::string key = assignment.substr(0, eq);
    std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &config;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        parts.push_back(part);
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
        node = &(*node)[parts[i]];
        if (node->is_null()) *node = json::object();
    }
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    (*node)[parts.back()] = value;
}

std::vector<double> parse_grid(const json& grid)
{
    if (grid.is_array()) {
        try {
            return grid.get<std::vector<double>>();
        } catch (const json::exception&) {
            throw ConfigError("grid array must hold numbers");
        }
    }
    check_keys(grid, "grid", {"start", "stop", "count"});
    if (!grid.contains("start") || !grid.contains("stop") || !grid.contains("count"))
        throw ConfigError("grid needs start, stop and count");
    double start = grid["start"].get<double>();
    double stop = grid["stop"].get<double>();
    int count = grid["count"].get<int>();
    if (count < 1) throw ConfigError("grid count must be positive");
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[i] = count == 1 ? start : start + (stop - start) * i / (count - 1);
    return out;
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base)
{
    check_keys(j, "config", {"seed", "model", "network", "analysis", "sweep", "paths"});
    ExperimentConfig c;
    read(j, "seed", c.seed, "config");

    if (!j.contains("model")) throw ConfigError("config needs a model section");
    const json& m = j["model"];
    if (!m.is_object() || !m.contains("type")) throw ConfigError("model.type is required");
    std::string type = m["type"].get<std::string>();
    std::uint64_t data_seed = c.seed;
    if (type == "tfim") {
        c.model = ModelKind::tfim;
        check_keys(m, "model", {"type", "sites", "coupling", "pinning_field", "boundary", "basis",
                                "snapshots_per_field", "grid", "seed"});
        read(m, "sites", c.tfim.sites, "model");
        read(m, "coupling", c.tfim.coupling, "model");
        read(m, "pinning_field", c.tfim.pinning_field, "model");
        if (m.contains("boundary")) c.tfim.boundary = parse_boundary(m["boundary"].get<std::string>());
        if (m.contains("basis")) c.tfim.basis = parse_basis(m["basis"].get<std::string>());
        read(m, "snapshots_per_field", c.tfim.snapshots_per_field, "model");
        c.tfim.field_grid = parse_grid(m.value("grid", json{{"start", 0.1}, {"stop", 2.1}, {"count", 40}}));
        read(m, "seed", data_seed, "model");
        c.tfim.seed = data_seed;
    } else if (type == "igt") {
        c.model = ModelKind::igt;
        check_keys(m, "model", {"type", "size", "coupling", "sweeps", "decorrelation_sweeps", "samples_per_beta",
                                "grid", "seed"});
        read(m, "size", c.igt.size, "model");
        read(m, "coupling", c.igt.coupling, "model");
        read(m, "sweeps", c.igt.sweeps, "model");
        read(m, "decorrelation_sweeps", c.igt.decorrelation_sweeps, "model");
        read(m, "samples_per_beta", c.igt.samples_per_beta, "model");
        c.igt.beta_grid = parse_grid(m.value("grid", json{{"start", 0.1}, {"stop", 2.0}, {"count", 40}}));
        read(m, "seed", data_seed, "model");
        c.igt.seed = data_seed;
    } else {
        throw ConfigError("model.type must be tfim or igt, got '" + type + "'");
    }

    c.network = default_network(c.dataset_name());
    if (j.contains("network")) parse_network(j["network"], c.network);
    c.network.seed = c.seed;

    if (j.contains("analysis")) parse_analysis(j["analysis"], c.analysis);
    c.analysis.distill.sr.seed = c.seed;

    c.sweep_lambda_max = {1e-4, 1e-3, 1e-2, 1e-1, 1e0};
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        check_keys(s, "sweep", {"lambda_max", "repeats"});
        read(s, "lambda_max", c.sweep_lambda_max, "sweep");
        read(s, "repeats", c.sweep_repeats, "sweep");
    }
    if (c.sweep_repeats < 1) throw ConfigError("sweep.repeats must be positive");

    const std::string prefix = c.dataset_name();
    c.paths.dataset = prefix + ".tphz";
    c.paths.checkpoint = prefix + ".ckpt";
    c.paths.trace = prefix + "_trace.csv";
    c.paths.report = prefix + "_report";
    c.paths.sweep = prefix + "_sweep.csv";
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        check_keys(p, "paths", {"dataset", "checkpoint", "trace", "report", "sweep"});
        auto rd = [&](const char* key, std::filesystem::path& out) {
            std::string s;
            read(p, key, s, "paths");
            if (!s.empty()) out = s;
        };
        rd("dataset", c.paths.dataset);
        rd("checkpoint", c.paths.checkpoint);
        rd("trace", c.paths.trace);
        rd("report", c.paths.report);
        rd("sweep", c.paths.sweep);
    }
    c.paths.dataset = resolve(c.paths.dataset, base);
    c.paths.checkpoint = resolve(c.paths.checkpoint, base);
    c.paths.trace = resolve(c.paths.trace, base);
    c.paths.report = resolve(c.paths.report, base);
    c.paths.sweep = resolve(c.paths.sweep, base);

    try {
        if (c.model == ModelKind::tfim) c.tfim.validate();
        else c.igt.validate();
        c.network.validate();
        c.analysis.distill.sr.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (static_cast<std::size_t>(c.network.task_widths.front()) != c.network.kernels.size())
        throw ConfigError("network: first task width must equal the kernel count");
    return c;
}

json to_json(const ExperimentConfig& c)
{
    json j;
    j["seed"] = c.seed;
    if (c.model == ModelKind::tfim) {
        j["model"] = {{"type", "tfim"},
                      {"sites", c.tfim.sites},
                      {"coupling", c.tfim.coupling},
                      {"pinning_field", c.tfim.pinning_field},
                      {"boundary", to_string(c.tfim.boundary)},
                      {"basis", to_string(c.tfim.basis)},
                      {"snapshots_per_field", c.tfim.snapshots_per_field},
                      {"grid", grid_json(c.tfim.field_grid)},
                      {"seed", c.tfim.seed}};
    } else {
        j["model"] = {{"type", "igt"},
                      {"size", c.igt.size},
                      {"coupling", c.igt.coupling},
                      {"sweeps", c.igt.sweeps},
                      {"decorrelation_sweeps", c.igt.decorrelation_sweeps},
                      {"samples_per_beta", c.igt.samples_per_beta},
                      {"grid", grid_json(c.igt.beta_grid)},
                      {"seed", c.igt.seed}};
    }
    const auto& n = c.network;
    std::vector<std::string> kernels;
    for (const auto& k : n.kernels) kernels.push_back(k.label());
    j["network"] = {{"kernels", kernels},
                    {"filters", n.filters},
                    {"task_widths", n.task_widths},
                    {"lambda_min", n.lambda_min},
                    {"lambda_max", n.lambda_max},
                    {"optimizer", nn::to_string(n.optimizer.kind)},
                    {"learning_rate", n.optimizer.learning_rate},
                    {"weight_decay", n.optimizer.weight_decay},
                    {"max_epochs", n.max_epochs},
                    {"early_stopping", n.early_stopping},
                    {"patience", n.patience},
                    {"label_scaling", to_string(n.label_scaling)},
                    {"batch_size", n.batch_size},
                    {"validation_fraction", n.validation_fraction},
                    {"activation", nn::to_string(n.activation)}};
    const auto& d = c.analysis.distill;
    j["analysis"] = {{"run_distillation", c.analysis.run_distillation},
                     {"dominance_threshold", d.dominance_threshold},
                     {"selection_r2", d.selection_r2},
                     {"holdout_stride", d.holdout_stride},
                     {"linear", {{"max_feature_fraction", d.linear.max_feature_fraction},
                                 {"min_r2_gain", d.linear.min_r2_gain}}},
                     {"sr", {{"population", d.sr.population},
                             {"generations", d.sr.generations},
                             {"crossover_rate", d.sr.crossover_rate},
                             {"subtree_mutation_rate", d.sr.subtree_mutation_rate},
                             {"point_mutation_rate", d.sr.point_mutation_rate},
                             {"tournament_size", d.sr.tournament_size},
                             {"max_complexity", d.sr.max_complexity},
                             {"initial_complexity", d.sr.initial_complexity},
                             {"parsimony", d.sr.parsimony},
                             {"elite", d.sr.elite},
                             {"constant_interval", d.sr.constant_interval}}}};
    j["sweep"] = {{"lambda_max", c.sweep_lambda_max}, {"repeats", c.sweep_repeats}};
    j["paths"] = {{"dataset", c.paths.dataset.string()},
                  {"checkpoint", c.paths.checkpoint.string()},
                  {"trace", c.paths.trace.string()},
                  {"report", c.paths.report.string()},
                  {"sweep", c.paths.sweep.string()}};
    return j;
}

} // namespace tetris::cli
