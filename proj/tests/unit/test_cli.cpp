#include "tetris_cli/commands.hpp"

#include "tetris/dataset.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tetris;
using namespace tetris::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = TETRIS_CONFIG_DIR;

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("tetris_cli_" + name);
    fs::remove_all(p);
    return p;
}

// Small enough to run in well under a second.
json tiny(const std::string& preset)
{
    json j = load_json(kConfigs / (preset + ".json"));
    if (preset == "igt") {
        j["model"]["size"] = 4;
        j["model"]["sweeps"] = 20;
        j["model"]["samples_per_beta"] = 10;
    } else {
        j["model"]["sites"] = 8;
        j["model"]["snapshots_per_field"] = 10;
    }
    j["model"]["grid"]["count"] = 10;
    j["network"]["max_epochs"] = 2;
    j["analysis"]["sr"]["generations"] = 20;
    j["analysis"]["sr"]["population"] = 32;
    return j;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "tetris");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string report_checksums(const fs::path& dir)
{
    std::string s;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) s += f.filename().string() + "=" + file_checksum(f) + "\n";
    return s;
}

} // namespace

TEST(Config, ShippedConfigsMatchDefaults)
{
    for (std::string preset : {"tfim_z", "tfim_y", "igt"}) {
        auto shipped = parse_config(load_json(kConfigs / (preset + ".json")));
        auto def = default_network(preset);
        EXPECT_EQ(shipped.dataset_name(), preset);
        EXPECT_EQ(shipped.network.kernels, def.kernels) << preset;
        EXPECT_EQ(shipped.network.task_widths, def.task_widths) << preset;
        EXPECT_EQ(shipped.network.optimizer.kind, def.optimizer.kind) << preset;
        EXPECT_DOUBLE_EQ(shipped.network.optimizer.learning_rate, def.optimizer.learning_rate) << preset;
        EXPECT_DOUBLE_EQ(shipped.network.optimizer.weight_decay, def.optimizer.weight_decay) << preset;
        EXPECT_DOUBLE_EQ(shipped.network.lambda_min, def.lambda_min) << preset;
        EXPECT_DOUBLE_EQ(shipped.network.lambda_max, def.lambda_max) << preset;
        EXPECT_EQ(shipped.network.early_stopping, def.early_stopping) << preset;
        EXPECT_EQ(shipped.network.label_scaling, def.label_scaling) << preset;
    }
}

TEST(Config, DefaultColumns)
{
    auto y = default_network("tfim_y");
    EXPECT_EQ(y.optimizer.kind, nn::OptimizerKind::adamw);
    EXPECT_DOUBLE_EQ(y.optimizer.learning_rate, 5e-4);
    EXPECT_EQ(y.kernels.size(), 5u);
    auto igt = default_network("igt");
    EXPECT_EQ(igt.kernels.size(), 11u);
    EXPECT_EQ(igt.task_widths.front(), 11);
    EXPECT_EQ(igt.max_epochs, 1500);
    EXPECT_EQ(default_network("tfim_z").task_widths, (std::vector<int>{7, 32, 1}));
    EXPECT_THROW(default_network("potts"), ConfigError);
}

TEST(Config, MinimalConfigGetsDefaults)
{
    auto c = parse_config(json{{"model", {{"type", "igt"}}}});
    EXPECT_EQ(c.igt.size, 8);
    EXPECT_EQ(c.igt.beta_grid.size(), 40u);
    EXPECT_DOUBLE_EQ(c.igt.beta_grid.front(), 0.1);
    EXPECT_DOUBLE_EQ(c.igt.beta_grid.back(), 2.0);
    EXPECT_EQ(c.network.kernels.size(), 11u);
    EXPECT_EQ(c.paths.dataset, fs::path("igt.tphz"));
}

TEST(Config, SeedPropagates)
{
    auto c = parse_config(json{{"seed", 7}, {"model", {{"type", "tfim"}}}});
    EXPECT_EQ(c.tfim.seed, 7u);
    EXPECT_EQ(c.network.seed, 7u);
    EXPECT_EQ(c.analysis.distill.sr.seed, 7u);
    auto d = parse_config(json{{"seed", 7}, {"model", {{"type", "tfim"}, {"seed", 3}}}});
    EXPECT_EQ(d.tfim.seed, 3u);
    EXPECT_EQ(d.network.seed, 7u);
}

TEST(Config, Overrides)
{
    json j = load_json(kConfigs / "tfim_z.json");
    apply_override(j, "network.max_epochs=7");
    apply_override(j, "network.optimizer=adamw");
    apply_override(j, "model.grid=[0.5,1.0,1.5]");
    apply_override(j, "analysis.sr.generations=11");
    auto c = parse_config(j, "/tmp/base");
    EXPECT_EQ(c.network.max_epochs, 7);
    EXPECT_EQ(c.network.optimizer.kind, nn::OptimizerKind::adamw);
    EXPECT_EQ(c.tfim.field_grid, (std::vector<double>{0.5, 1.0, 1.5}));
    EXPECT_EQ(c.analysis.distill.sr.generations, 11);
    EXPECT_EQ(c.paths.dataset, fs::path("/tmp/base/tfim_z.tphz"));
    EXPECT_THROW(apply_override(j, "novalue"), ConfigError);
    EXPECT_THROW(apply_override(j, "seed.x=1"), ConfigError);
}

TEST(Config, KernelOverrideResizesTask)
{
    json j = load_json(kConfigs / "tfim_z.json");
    apply_override(j, R"(network.kernels=["[(1,1),1]","[(2,1),1]"])");
    auto c = parse_config(j);
    EXPECT_EQ(c.network.task_widths, (std::vector<int>{2, 32, 1}));
}

TEST(Config, Rejections)
{
    EXPECT_THROW(parse_config(json::object()), ConfigError);
    EXPECT_THROW(parse_config(json{{"model", {{"type", "potts"}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"model", {{"type", "tfim"}, {"sitez", 4}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"model", {{"type", "tfim"}, {"sites", "x"}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"model", {{"type", "tfim"}, {"sites", 40}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"model", {{"type", "tfim"}}}, {"network", {{"lambda_min", 2.0}}}}),
                 ConfigError);
    EXPECT_THROW(parse_config(json{{"model", {{"type", "tfim"}}}, {"network", {{"task_widths", {3, 1}}}}}),
                 ConfigError);
}

TEST(Config, RoundTripThroughJson)
{
    auto c = parse_config(load_json(kConfigs / "igt.json"));
    auto again = parse_config(to_json(c));
    EXPECT_EQ(to_json(again), to_json(c));
}

TEST(Commands, GenerateChannelsAndChecksum)
{
    for (std::string preset : {"tfim_z", "igt"}) {
        const auto dir = scratch("gen_" + preset);
        auto c = parse_config(tiny(preset), dir);
        fs::create_directories(dir);
        std::ostringstream out;
        cmd_generate(c, out);
        auto ds = read_dataset(c.paths.dataset);
        EXPECT_EQ(ds.geometry().channels, preset == "igt" ? 2 : 1);
        EXPECT_NE(out.str().find("checksum="), std::string::npos);
        const auto first = file_checksum(c.paths.dataset);
        cmd_generate(c, out);
        EXPECT_EQ(file_checksum(c.paths.dataset), first);
    }
}

TEST(Commands, ZeroEpochsWritesInitialModel)
{
    const auto dir = scratch("zero");
    json j = tiny("tfim_z");
    j["network"]["max_epochs"] = 0;
    auto c = parse_config(j, dir);
    std::ostringstream out;
    cmd_generate(c, out);
    cmd_train(c, out);
    auto saved = read_checkpoint(c.paths.checkpoint);
    auto ds = read_dataset(c.paths.dataset);
    auto fresh = TetrisModel::build(c.network, ds.geometry());
    EXPECT_EQ(saved.predict(ds).prediction, fresh.predict(ds).prediction);
}

TEST(Commands, SweepRowCount)
{
    const auto dir = scratch("sweep");
    json j = tiny("tfim_z");
    j["sweep"] = {{"lambda_max", {1e-2, 1e0}}, {"repeats", 2}};
    auto c = parse_config(j, dir);
    std::ostringstream out;
    cmd_generate(c, out);
    auto r = cmd_sweep(c, out);
    EXPECT_EQ(r.rows.size(), 4u);
    EXPECT_TRUE(fs::exists(c.paths.sweep));
    EXPECT_TRUE(fs::exists(dir / "tfim_z_sweep_summary.csv"));
}

TEST(Cli, PipelineIsReproducible)
{
    const auto a = scratch("pipe_a");
    const auto b = scratch("pipe_b");
    const auto cfg = scratch("pipe_cfg.json");
    std::ofstream(cfg) << tiny("tfim_z").dump();
    auto ra = run_cli({"--config", cfg.string(), "--out", a.string(), "pipeline"});
    auto rb = run_cli({"--config", cfg.string(), "--out", b.string(), "--threads", "1", "pipeline"});
    ASSERT_EQ(ra.code, 0) << ra.err;
    ASSERT_EQ(rb.code, 0) << rb.err;
    EXPECT_EQ(file_checksum(a / "tfim_z.tphz"), file_checksum(b / "tfim_z.tphz"));
    EXPECT_EQ(file_checksum(a / "tfim_z.ckpt"), file_checksum(b / "tfim_z.ckpt"));
    EXPECT_EQ(report_checksums(a / "tfim_z_report"), report_checksums(b / "tfim_z_report"));
    auto rc = run_cli({"--config", cfg.string(), "--out", a.string(), "--seed", "1", "generate"});
    ASSERT_EQ(rc.code, 0);
    EXPECT_NE(file_checksum(a / "tfim_z.tphz"), file_checksum(b / "tfim_z.tphz"));
}

TEST(Cli, ErrorsAreSingleLine)
{
    const auto dir = scratch("errors");
    const std::string cfg = (kConfigs / "tfim_z.json").string();
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"generate"},
             {"--config", "/nonexistent/x.json", "generate"},
             {"--config", cfg, "--set", "network.bogus=1", "train"},
             {"--config", cfg, "--out", dir.string(), "train"},
             {"--config", cfg, "--out", dir.string(), "report"},
             {"--config", cfg, "--threads", "0", "generate"},
             {"frobnicate"},
         }) {
        auto r = run_cli(args);
        EXPECT_NE(r.code, 0) << args.back();
        ASSERT_FALSE(r.err.empty());
        EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;
        EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
    }
}

TEST(Cli, DivergenceExitsNonzero)
{
    const auto dir = scratch("diverge");
    json j = tiny("tfim_z");
    j["network"]["learning_rate"] = 1e300;
    j["network"]["optimizer"] = "adamw";
    const auto cfg = dir.string() + ".json";
    std::ofstream(cfg) << j.dump();
    ASSERT_EQ(run_cli({"--config", cfg, "--out", dir.string(), "generate"}).code, 0);
    auto r = run_cli({"--config", cfg, "--out", dir.string(), "train"});
    EXPECT_NE(r.code, 0);
    EXPECT_EQ(r.err.rfind("error: numerical: ", 0), 0u) << r.err;
}

TEST(Cli, ConfigCommandPrintsResolvedConfig)
{
    auto r = run_cli({"--config", (kConfigs / "igt.json").string(), "--set", "seed=4", "config"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = json::parse(r.out);
    EXPECT_EQ(j["seed"], 4);
    EXPECT_EQ(j["network"]["kernels"].size(), 11u);
}
