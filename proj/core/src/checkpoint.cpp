#include "tetris/error.hpp"
#include "tetris/tetris_model.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <fstream>

namespace tetris {

namespace {

constexpr std::array<char, 5> kMagic{'T', 'P', 'C', 'K', '1'};
constexpr std::uint32_t kMaxHeaderBytes = 1U << 24;

void write_tensor(std::ostream& out, const nn::Tensor& t)
{
    for (double v : t.values()) {
        binary::write_f64(out, v);
    }
}

void read_tensor(std::istream& in, nn::Tensor& t)
{
    for (double& v : t.values()) {
        v = binary::read_f64(in);
    }
}

} // namespace

void write_checkpoint(const TetrisModel& model, std::ostream& out)
{
    nlohmann::ordered_json header;
    std::vector<std::string> kernels;
    for (const auto& k : model.kernels()) {
        kernels.push_back(k.label());
    }
    const Geometry& g = model.geometry();
    header["kernels"] = kernels;
    header["filters"] = model.branches().empty() ? 0 : model.branches().front().filters;
    header["task_widths"] = model.task().widths;
    header["lambda"] = model.lambdas();
    header["activation"] = nn::to_string(model.task().hidden);
    header["geometry"] = {
        {"channels", g.channels}, {"height", g.height}, {"width", g.width}, {"periodic", g.periodic}};
    header["label_scaler"] = {
        {"enabled", model.scaler().enabled}, {"min", model.scaler().min}, {"max", model.scaler().max}};
    header["parameters"] = model.parameter_count();
    const std::string text = header.dump();

    out.write(kMagic.data(), kMagic.size());
    binary::write_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : model.branches()) {
        write_tensor(out, b.weight);
        write_tensor(out, b.bias);
    }
    for (std::size_t l = 0; l < model.task().weights.size(); ++l) {
        write_tensor(out, model.task().weights[l]);
        write_tensor(out, model.task().biases[l]);
    }
    if (!out) {
        throw IoError("failed writing checkpoint");
    }
}

void write_checkpoint(const TetrisModel& model, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    write_checkpoint(model, out);
}

TetrisModel read_checkpoint(std::istream& in)
{
    std::array<char, 5> magic{};
    binary::read_exact(in, magic.data(), magic.size(), "checkpoint magic");
    if (magic != kMagic) {
        throw IoError("not a TPCK1 checkpoint (bad magic)");
    }
    const std::uint32_t length = binary::read_u32(in);
    if (length > kMaxHeaderBytes) {
        throw IoError("checkpoint header length " + std::to_string(length) + " is implausible");
    }
    std::string text(length, '\0');
    binary::read_exact(in, text.data(), length, "checkpoint header");

    TetrisModel m;
    try {
        const auto header = nlohmann::json::parse(text);
        const auto& jg = header.at("geometry");
        Geometry g{jg.at("channels").get<int>(), jg.at("height").get<int>(), jg.at("width").get<int>(),
                   jg.at("periodic").get<bool>()};
        TetrisConfig config;
        config.kernels = parse_kernel_list(header.at("kernels").get<std::vector<std::string>>());
        config.filters = header.at("filters").get<int>();
        config.task_widths = header.at("task_widths").get<std::vector<int>>();
        config.activation = nn::parse_activation(header.at("activation").get<std::string>());
        const auto lambdas = header.at("lambda").get<std::vector<double>>();
        if (lambdas.size() != config.kernels.size()) {
            throw IoError("checkpoint lambda vector does not match the kernel list");
        }
        config.lambda_min = config.lambda_max = 0.0;
        m = TetrisModel::build(config, g);
        m.lambdas_ = lambdas;
        const auto& js = header.at("label_scaler");
        m.scaler_ = LabelScaler{js.at("enabled").get<bool>(), js.at("min").get<double>(), js.at("max").get<double>()};
        if (header.at("parameters").get<std::size_t>() != m.parameter_count()) {
            throw IoError("checkpoint parameter count does not match its architecture");
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("checkpoint header is malformed: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("checkpoint architecture is invalid: ") + e.what());
    }
    for (nn::Tensor* p : m.parameters()) {
        read_tensor(in, *p);
        nn::check_finite(p->values(), "checkpoint parameters");
    }
    return m;
}

TetrisModel read_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint " + path.string());
    }
    return read_checkpoint(in);
}

} // namespace tetris
