#pragma once

#include "tetris/kernel.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tetris {

struct Provenance {
    std::string model;          // "tfim" or "igt"
    std::string basis;          // "z", "y", or "links"
    std::uint64_t seed = 0;
    std::vector<double> grid;   // tuning-parameter grid the labels come from
};

// Read-only view of one snapshot laid out as [channel][row][col].
class SnapshotView {
public:
    SnapshotView(std::span<const std::int8_t> spins, const Geometry& geometry)
        : spins_(spins), geometry_(&geometry) {}

    std::int8_t at(int channel, int row, int col) const
    {
        return spins_[(static_cast<std::size_t>(channel) * geometry_->height + row) * geometry_->width + col];
    }
    std::span<const std::int8_t> spins() const { return spins_; }
    const Geometry& geometry() const { return *geometry_; }

private:
    std::span<const std::int8_t> spins_;
    const Geometry* geometry_;
};

// Labeled collection of +/-1 lattice snapshots sharing one geometry.
class SpinDataset {
public:
    SpinDataset() = default;
    SpinDataset(Geometry geometry, Provenance provenance);

    // Throws InvalidArgument when the snapshot size is wrong or any entry
    // is not +/-1.
    void add(std::span<const std::int8_t> spins, double label);
    void reserve(std::size_t samples);

    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }

    SnapshotView snapshot(std::size_t i) const;
    double label(std::size_t i) const { return labels_[i]; }
    const std::vector<double>& labels() const { return labels_; }
    std::span<const std::int8_t> raw_spins() const { return spins_; }

    const Geometry& geometry() const { return geometry_; }
    const Provenance& provenance() const { return provenance_; }

    SpinDataset subset(std::span<const std::size_t> indices) const;
    SpinDataset concatenated(const SpinDataset& other) const;

    // Sorted distinct labels.
    std::vector<double> distinct_labels() const;

    bool operator==(const SpinDataset& other) const;

private:
    Geometry geometry_;
    Provenance provenance_;
    std::vector<std::int8_t> spins_;
    std::vector<double> labels_;
};

// Binary container: "TPHZ1", u32 LE header length, UTF-8 JSON header, then
// per sample the int8 lattice (channel-major, row-major) and an f64 LE label.
void write_dataset(const SpinDataset& dataset, std::ostream& out);
void write_dataset(const SpinDataset& dataset, const std::filesystem::path& path);
SpinDataset read_dataset(std::istream& in);
SpinDataset read_dataset(const std::filesystem::path& path);

// "label,c0_r0_x0,..." one row per sample.
void export_csv(const SpinDataset& dataset, std::ostream& out);

// Little-endian helpers shared by the dataset and checkpoint formats.
namespace binary {
void write_u32(std::ostream& out, std::uint32_t v);
void write_f64(std::ostream& out, double v);
std::uint32_t read_u32(std::istream& in);
double read_f64(std::istream& in);
void read_exact(std::istream& in, char* dst, std::size_t n, const char* what);
} // namespace binary

} // namespace tetris
