#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tetris {

// Lattice shape of every snapshot in a dataset. 1D chains use height == 1.
struct Geometry {
    int channels = 1;
    int height = 1;
    int width = 1;
    bool periodic = false;

    bool is_chain() const { return height == 1; }
    int sites() const { return channels * height * width; }
    bool operator==(const Geometry&) const = default;
};

// A Tetris-piece convolution footprint, written "[(d1, d2), dilation]".
// d1 runs along the chain for 1D data (d2 must then be 1); for 2D data d1
// counts rows and d2 columns.
struct KernelSpec {
    int height = 1;
    int width = 1;
    int dilation = 1;

    std::string label() const;
    int cells() const { return height * width; }

    // Accepts "[(2, 1), 1]", "(2,1),1", "2x1" and "2x1d2".
    static KernelSpec parse(std::string_view text);

    bool operator==(const KernelSpec&) const = default;
};

std::vector<KernelSpec> parse_kernel_list(const std::vector<std::string>& labels);

// Spatial extent of a kernel once mapped onto a lattice geometry.
struct Footprint {
    int rows = 1;
    int cols = 1;
    int dilation = 1;

    int span_rows() const { return dilation * (rows - 1) + 1; }
    int span_cols() const { return dilation * (cols - 1) + 1; }
};

// Throws InvalidArgument if the kernel is malformed for the geometry
// (width != 1 on a chain, non-positive extents, dilation < 1).
Footprint footprint(const KernelSpec& kernel, const Geometry& geometry);

// True when at least one valid (unpadded) anchor exists.
bool fits(const KernelSpec& kernel, const Geometry& geometry);

} // namespace tetris
