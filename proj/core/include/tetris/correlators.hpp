#pragma once

#include "tetris/dataset.hpp"
#include "tetris/kernel.hpp"

#include <compare>
#include <iosfwd>
#include <string>
#include <vector>

namespace tetris {

// One footprint cell in kernel index space: (row, col) before dilation.
// On a chain, row indexes the kernel's d1 axis and col is always 0.
struct Cell {
    int channel = 0;
    int row = 0;
    int col = 0;

    auto operator<=>(const Cell&) const = default;
};

// A subset of a kernel footprint. The lattice average of the product of the
// spins at these cells is one correlator. Masks are stored translated so the
// smallest row and col are 0.
struct CorrelatorMask {
    KernelSpec kernel;
    std::vector<Cell> cells;

    // Human-readable product with dilated lattice offsets, e.g. "S(0)S(1)"
    // on a chain or "S1(0,0)S1(1,0)S2(0,0)S2(0,1)" on a two-channel lattice.
    std::string name(const Geometry& geometry) const;
    // Stable identifier used as a CSV column suffix, e.g. "m0c0r0x0.0r1x0".
    std::string id() const;

    bool operator==(const CorrelatorMask&) const = default;
};

// All cells of the kernel footprint over every channel.
CorrelatorMask full_mask(const KernelSpec& kernel, int channels);

// The four links of plaquette (0,0) in the two-channel link layout:
// h(0,0) h(1,0) v(0,0) v(0,1), a sub-mask of the [(2, 2), 1] footprint.
CorrelatorMask plaquette_mask();

// Mean over anchors of the product of spins at the mask cells. Periodic
// geometries use every anchor with wrap-around; open ones only the anchors
// where the mask's dilated bounding box fits. Throws InvalidArgument if it
// never fits.
double mask_correlator(const SnapshotView& snapshot, const CorrelatorMask& mask);

// Product over every footprint cell and channel.
double full_footprint_correlator(const SnapshotView& snapshot, const KernelSpec& kernel);

constexpr int kMaxFootprintCells = 25;

// Non-empty footprint subsets, deduplicated under lattice translation,
// ordered by cell count and then lexicographically. Throws InvalidArgument
// when channels * height * width exceeds 25.
std::vector<CorrelatorMask> enumerate_subfootprint_correlators(const KernelSpec& kernel, int channels = 1);

struct CorrelatorFeature {
    std::string kernel_label;
    CorrelatorMask mask;
    std::string name;
};

struct CorrelatorTable {
    std::vector<CorrelatorFeature> features;
    std::vector<double> labels;        // per sample
    std::vector<double> values;        // samples x features, row-major
    std::vector<double> group_labels;  // sorted distinct labels
    std::vector<double> group_means;   // groups x features, row-major
    std::vector<double> group_errors;  // standard error of each group mean
    std::vector<std::size_t> group_sizes;

    std::size_t samples() const { return labels.size(); }
    std::size_t groups() const { return group_labels.size(); }
    double value(std::size_t sample, std::size_t feature) const { return values[sample * features.size() + feature]; }
    double mean(std::size_t group, std::size_t feature) const { return group_means[group * features.size() + feature]; }
    std::vector<double> mean_column(std::size_t feature) const;
};

// Features are every translation-distinct sub-mask of every kernel.
CorrelatorTable correlator_table(const SpinDataset& dataset, const std::vector<KernelSpec>& kernels);
CorrelatorTable correlator_table(const SpinDataset& dataset, const std::vector<CorrelatorFeature>& features);

std::vector<CorrelatorFeature> kernel_features(const KernelSpec& kernel, const Geometry& geometry);

// Per-sample CSV: "label,<kernel>#<mask id>,...".
void write_table_csv(const CorrelatorTable& table, std::ostream& out);
// Per-label CSV: "label,count,<col>,<col>_err,...".
void write_group_csv(const CorrelatorTable& table, std::ostream& out);

// Groups per-sample values by label: returns sorted labels, means and
// standard errors. Shared by the correlator table and the analysis code.
struct GroupedValues {
    std::vector<double> labels;
    std::vector<double> means;
    std::vector<double> errors;
    std::vector<std::size_t> counts;
};
GroupedValues group_by_label(const std::vector<double>& labels, const std::vector<double>& values);

} // namespace tetris
