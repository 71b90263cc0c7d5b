#include "tetris/dataset.hpp"

#include "tetris/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

namespace tetris {

namespace {

constexpr std::array<char, 5> kMagic{'T', 'P', 'H', 'Z', '1'};
constexpr std::uint32_t kMaxHeaderBytes = 1u << 26;

} // namespace

namespace binary {

void write_u32(std::ostream& out, std::uint32_t v)
{
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    }
    out.write(b.data(), b.size());
}

void write_f64(std::ostream& out, double v)
{
    const auto bits = std::bit_cast<std::uint64_t>(v);
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
    }
    out.write(b.data(), b.size());
}

void read_exact(std::istream& in, char* dst, std::size_t n, const char* what)
{
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw IoError(std::string("truncated input while reading ") + what);
    }
}

std::uint32_t read_u32(std::istream& in)
{
    std::array<unsigned char, 4> b{};
    read_exact(in, reinterpret_cast<char*>(b.data()), b.size(), "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    }
    return v;
}

double read_f64(std::istream& in)
{
    std::array<unsigned char, 8> b{};
    read_exact(in, reinterpret_cast<char*>(b.data()), b.size(), "f64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return std::bit_cast<double>(v);
}

} // namespace binary

SpinDataset::SpinDataset(Geometry geometry, Provenance provenance)
    : geometry_(geometry), provenance_(std::move(provenance))
{
    if (geometry_.channels < 1 || geometry_.height < 1 || geometry_.width < 1) {
        throw InvalidArgument("dataset geometry needs positive channels, height and width");
    }
}

void SpinDataset::add(std::span<const std::int8_t> spins, double label)
{
    if (spins.size() != static_cast<std::size_t>(geometry_.sites())) {
        throw InvalidArgument("snapshot has " + std::to_string(spins.size()) + " entries, geometry expects " +
                              std::to_string(geometry_.sites()));
    }
    for (std::int8_t s : spins) {
        if (s != 1 && s != -1) {
            throw InvalidArgument("snapshot entry " + std::to_string(s) + " is not +/-1");
        }
    }
    spins_.insert(spins_.end(), spins.begin(), spins.end());
    labels_.push_back(label);
}

void SpinDataset::reserve(std::size_t samples)
{
    spins_.reserve(samples * static_cast<std::size_t>(geometry_.sites()));
    labels_.reserve(samples);
}

SnapshotView SpinDataset::snapshot(std::size_t i) const
{
    const auto n = static_cast<std::size_t>(geometry_.sites());
    return {std::span<const std::int8_t>(spins_).subspan(i * n, n), geometry_};
}

SpinDataset SpinDataset::subset(std::span<const std::size_t> indices) const
{
    SpinDataset out(geometry_, provenance_);
    out.reserve(indices.size());
    const auto n = static_cast<std::size_t>(geometry_.sites());
    for (std::size_t i : indices) {
        out.spins_.insert(out.spins_.end(), spins_.begin() + i * n, spins_.begin() + (i + 1) * n);
        out.labels_.push_back(labels_.at(i));
    }
    return out;
}

SpinDataset SpinDataset::concatenated(const SpinDataset& other) const
{
    if (!(other.geometry_ == geometry_)) {
        throw InvalidArgument("cannot concatenate datasets with different geometries");
    }
    SpinDataset out = *this;
    out.spins_.insert(out.spins_.end(), other.spins_.begin(), other.spins_.end());
    out.labels_.insert(out.labels_.end(), other.labels_.begin(), other.labels_.end());
    return out;
}

std::vector<double> SpinDataset::distinct_labels() const
{
    std::vector<double> out = labels_;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool SpinDataset::operator==(const SpinDataset& other) const
{
    return geometry_ == other.geometry_ && provenance_.model == other.provenance_.model &&
           provenance_.basis == other.provenance_.basis && provenance_.seed == other.provenance_.seed &&
           provenance_.grid == other.provenance_.grid && spins_ == other.spins_ && labels_ == other.labels_;
}

void write_dataset(const SpinDataset& dataset, std::ostream& out)
{
    const Geometry& g = dataset.geometry();
    const Provenance& p = dataset.provenance();
    nlohmann::ordered_json header;
    header["model"] = p.model;
    header["basis"] = p.basis;
    header["geometry"] = {{"height", g.height}, {"width", g.width}, {"periodic", g.periodic}};
    header["channels"] = g.channels;
    header["grid"] = p.grid;
    header["seed"] = p.seed;
    header["samples"] = dataset.size();
    const std::string text = header.dump();

    out.write(kMagic.data(), kMagic.size());
    binary::write_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    const auto n = static_cast<std::size_t>(g.sites());
    const auto spins = dataset.raw_spins();
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        out.write(reinterpret_cast<const char*>(spins.data() + i * n), static_cast<std::streamsize>(n));
        binary::write_f64(out, dataset.label(i));
    }
    if (!out) {
        throw IoError("failed writing dataset");
    }
}

void write_dataset(const SpinDataset& dataset, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    write_dataset(dataset, out);
}

SpinDataset read_dataset(std::istream& in)
{
    std::array<char, 5> magic{};
    binary::read_exact(in, magic.data(), magic.size(), "dataset magic");
    if (magic != kMagic) {
        throw IoError("not a TPHZ1 dataset (bad magic)");
    }
    const std::uint32_t length = binary::read_u32(in);
    if (length > kMaxHeaderBytes) {
        throw IoError("dataset header length " + std::to_string(length) + " is implausible");
    }
    std::string text(length, '\0');
    binary::read_exact(in, text.data(), length, "dataset header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("dataset header is not valid JSON: ") + e.what());
    }
    try {
        Geometry g;
        g.channels = header.at("channels").get<int>();
        g.height = header.at("geometry").at("height").get<int>();
        g.width = header.at("geometry").at("width").get<int>();
        g.periodic = header.at("geometry").value("periodic", false);
        Provenance p;
        p.model = header.at("model").get<std::string>();
        p.basis = header.value("basis", "");
        p.seed = header.at("seed").get<std::uint64_t>();
        p.grid = header.value("grid", std::vector<double>{});
        const auto count = header.at("samples").get<std::size_t>();

        SpinDataset dataset(g, p);
        dataset.reserve(count);
        std::vector<std::int8_t> buffer(static_cast<std::size_t>(g.sites()));
        for (std::size_t i = 0; i < count; ++i) {
            binary::read_exact(in, reinterpret_cast<char*>(buffer.data()), buffer.size(), "snapshot");
            dataset.add(buffer, binary::read_f64(in));
        }
        return dataset;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("dataset header is missing fields: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("corrupt dataset: ") + e.what());
    }
}

SpinDataset read_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open dataset " + path.string());
    }
    return read_dataset(in);
}

void export_csv(const SpinDataset& dataset, std::ostream& out)
{
    const Geometry& g = dataset.geometry();
    out << "label";
    for (int c = 0; c < g.channels; ++c) {
        for (int r = 0; r < g.height; ++r) {
            for (int x = 0; x < g.width; ++x) {
                out << ",c" << c << "_r" << r << "_x" << x;
            }
        }
    }
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        out << dataset.label(i);
        for (std::int8_t s : dataset.snapshot(i).spins()) {
            out << ',' << static_cast<int>(s);
        }
        out << '\n';
    }
}

} // namespace tetris
