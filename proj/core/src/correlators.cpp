#include "tetris/correlators.hpp"

#include "tetris/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace tetris {

namespace {

struct LatticeOffset {
    int channel;
    int row;
    int col;
};

std::vector<LatticeOffset> lattice_offsets(const CorrelatorMask& mask, const Geometry& geometry)
{
    const Footprint fp = footprint(mask.kernel, geometry);
    std::vector<LatticeOffset> out;
    out.reserve(mask.cells.size());
    for (const Cell& c : mask.cells) {
        if (c.channel < 0 || c.channel >= geometry.channels) {
            throw InvalidArgument("correlator mask uses channel " + std::to_string(c.channel) + " but the lattice has " +
                                  std::to_string(geometry.channels));
        }
        if (geometry.is_chain()) {
            out.push_back({c.channel, 0, c.row * fp.dilation});
        } else {
            out.push_back({c.channel, c.row * fp.dilation, c.col * fp.dilation});
        }
    }
    return out;
}

std::vector<Cell> canonical(std::vector<Cell> cells)
{
    int min_row = cells.front().row;
    int min_col = cells.front().col;
    for (const Cell& c : cells) {
        min_row = std::min(min_row, c.row);
        min_col = std::min(min_col, c.col);
    }
    for (Cell& c : cells) {
        c.row -= min_row;
        c.col -= min_col;
    }
    std::sort(cells.begin(), cells.end());
    return cells;
}

} // namespace

std::string CorrelatorMask::name(const Geometry& geometry) const
{
    std::ostringstream out;
    for (const LatticeOffset& o : lattice_offsets(*this, geometry)) {
        if (geometry.is_chain()) {
            out << 'S';
            if (geometry.channels > 1) {
                out << o.channel + 1;
            }
            out << '(' << o.col << ')';
        } else {
            out << 'S' << o.channel + 1 << '(' << o.row << ',' << o.col << ')';
        }
    }
    return out.str();
}

std::string CorrelatorMask::id() const
{
    std::ostringstream out;
    out << 'm';
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            out << '.';
        }
        out << 'c' << cells[i].channel << 'r' << cells[i].row << 'x' << cells[i].col;
    }
    return out.str();
}

CorrelatorMask full_mask(const KernelSpec& kernel, int channels)
{
    CorrelatorMask mask{kernel, {}};
    for (int ch = 0; ch < channels; ++ch) {
        for (int r = 0; r < kernel.height; ++r) {
            for (int c = 0; c < kernel.width; ++c) {
                mask.cells.push_back({ch, r, c});
            }
        }
    }
    std::sort(mask.cells.begin(), mask.cells.end());
    return mask;
}

CorrelatorMask plaquette_mask()
{
    CorrelatorMask mask{KernelSpec{2, 2, 1}, {{0, 0, 0}, {0, 1, 0}, {1, 0, 0}, {1, 0, 1}}};
    std::sort(mask.cells.begin(), mask.cells.end());
    return mask;
}

double mask_correlator(const SnapshotView& snapshot, const CorrelatorMask& mask)
{
    const Geometry& g = snapshot.geometry();
    if (mask.cells.empty()) {
        return 1.0;
    }
    const std::vector<LatticeOffset> offsets = lattice_offsets(mask, g);
    int span_rows = 1;
    int span_cols = 1;
    for (const LatticeOffset& o : offsets) {
        span_rows = std::max(span_rows, o.row + 1);
        span_cols = std::max(span_cols, o.col + 1);
    }
    if (span_rows > g.height || span_cols > g.width) {
        throw InvalidArgument("footprint of kernel " + mask.kernel.label() + " is larger than the " +
                              std::to_string(g.height) + "x" + std::to_string(g.width) + " lattice");
    }
    const int anchor_rows = g.periodic ? g.height : g.height - span_rows + 1;
    const int anchor_cols = g.periodic ? g.width : g.width - span_cols + 1;

    long total = 0;
    for (int r = 0; r < anchor_rows; ++r) {
        for (int c = 0; c < anchor_cols; ++c) {
            int product = 1;
            for (const LatticeOffset& o : offsets) {
                product *= snapshot.at(o.channel, (r + o.row) % g.height, (c + o.col) % g.width);
            }
            total += product;
        }
    }
    return static_cast<double>(total) / (static_cast<double>(anchor_rows) * anchor_cols);
}

double full_footprint_correlator(const SnapshotView& snapshot, const KernelSpec& kernel)
{
    if (!fits(kernel, snapshot.geometry())) {
        throw InvalidArgument("footprint of kernel " + kernel.label() + " is larger than the lattice");
    }
    return mask_correlator(snapshot, full_mask(kernel, snapshot.geometry().channels));
}

std::vector<CorrelatorMask> enumerate_subfootprint_correlators(const KernelSpec& kernel, int channels)
{
    if (channels < 1 || kernel.height < 1 || kernel.width < 1) {
        throw InvalidArgument("kernel " + kernel.label() + " has an empty footprint");
    }
    const int n = channels * kernel.height * kernel.width;
    if (n > kMaxFootprintCells) {
        throw InvalidArgument("kernel " + kernel.label() + " over " + std::to_string(channels) + " channel(s) has " +
                              std::to_string(n) + " cells, more than the cap of " + std::to_string(kMaxFootprintCells));
    }
    const std::vector<Cell> all = full_mask(kernel, channels).cells;

    std::set<std::vector<Cell>> seen;
    std::vector<Cell> subset;
    for (std::uint32_t bits = 1; bits < (1u << n); ++bits) {
        subset.clear();
        for (int i = 0; i < n; ++i) {
            if ((bits >> i) & 1u) {
                subset.push_back(all[static_cast<std::size_t>(i)]);
            }
        }
        seen.insert(canonical(subset));
    }

    std::vector<CorrelatorMask> masks;
    masks.reserve(seen.size());
    for (const auto& cells : seen) {
        masks.push_back({kernel, cells});
    }
    std::stable_sort(masks.begin(), masks.end(),
                     [](const CorrelatorMask& a, const CorrelatorMask& b) { return a.cells.size() < b.cells.size(); });
    return masks;
}

std::vector<double> CorrelatorTable::mean_column(std::size_t feature) const
{
    std::vector<double> out(groups());
    for (std::size_t g = 0; g < groups(); ++g) {
        out[g] = mean(g, feature);
    }
    return out;
}

GroupedValues group_by_label(const std::vector<double>& labels, const std::vector<double>& values)
{
    if (labels.size() != values.size()) {
        throw InvalidArgument("labels and values differ in length");
    }
    std::map<double, std::vector<double>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        groups[labels[i]].push_back(values[i]);
    }
    GroupedValues out;
    for (const auto& [label, vals] : groups) {
        double mean = 0.0;
        for (double v : vals) {
            mean += v;
        }
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) {
            var += (v - mean) * (v - mean);
        }
        const auto n = static_cast<double>(vals.size());
        const double err = vals.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
        out.labels.push_back(label);
        out.means.push_back(mean);
        out.errors.push_back(err);
        out.counts.push_back(vals.size());
    }
    return out;
}

std::vector<CorrelatorFeature> kernel_features(const KernelSpec& kernel, const Geometry& geometry)
{
    if (!fits(kernel, geometry)) {
        throw InvalidArgument("kernel " + kernel.label() + " does not fit the lattice");
    }
    std::vector<CorrelatorFeature> features;
    for (auto& mask : enumerate_subfootprint_correlators(kernel, geometry.channels)) {
        const std::string name = mask.name(geometry);
        features.push_back({kernel.label(), std::move(mask), name});
    }
    return features;
}

CorrelatorTable correlator_table(const SpinDataset& dataset, const std::vector<KernelSpec>& kernels)
{
    std::vector<CorrelatorFeature> features;
    for (const KernelSpec& k : kernels) {
        auto f = kernel_features(k, dataset.geometry());
        features.insert(features.end(), f.begin(), f.end());
    }
    return correlator_table(dataset, features);
}

CorrelatorTable correlator_table(const SpinDataset& dataset, const std::vector<CorrelatorFeature>& features)
{
    CorrelatorTable table;
    table.features = features;
    table.labels = dataset.labels();
    const std::size_t nf = features.size();
    table.values.resize(dataset.size() * nf);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const SnapshotView snap = dataset.snapshot(i);
        for (std::size_t f = 0; f < nf; ++f) {
            table.values[i * nf + f] = mask_correlator(snap, features[f].mask);
        }
    }

    std::vector<double> column(dataset.size());
    table.group_labels = dataset.distinct_labels();
    table.group_means.assign(table.group_labels.size() * nf, 0.0);
    table.group_errors.assign(table.group_labels.size() * nf, 0.0);
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            column[i] = table.values[i * nf + f];
        }
        const GroupedValues grouped = group_by_label(table.labels, column);
        for (std::size_t g = 0; g < grouped.labels.size(); ++g) {
            table.group_means[g * nf + f] = grouped.means[g];
            table.group_errors[g * nf + f] = grouped.errors[g];
        }
        if (f == 0) {
            table.group_sizes = grouped.counts;
        }
    }
    if (nf == 0) {
        table.group_sizes = group_by_label(table.labels, table.labels).counts;
    }
    return table;
}

void write_table_csv(const CorrelatorTable& table, std::ostream& out)
{
    out << "label";
    for (const auto& f : table.features) {
        out << ",\"" << f.kernel_label << '#' << f.mask.id() << '"';
    }
    out << '\n';
    out.precision(12);
    for (std::size_t i = 0; i < table.samples(); ++i) {
        out << table.labels[i];
        for (std::size_t f = 0; f < table.features.size(); ++f) {
            out << ',' << table.value(i, f);
        }
        out << '\n';
    }
}

void write_group_csv(const CorrelatorTable& table, std::ostream& out)
{
    out << "label,count";
    for (const auto& f : table.features) {
        const std::string col = f.kernel_label + '#' + f.mask.id();
        out << ",\"" << col << "\",\"" << col << "_err\"";
    }
    out << '\n';
    out.precision(12);
    for (std::size_t g = 0; g < table.groups(); ++g) {
        out << table.group_labels[g] << ',' << table.group_sizes[g];
        for (std::size_t f = 0; f < table.features.size(); ++f) {
            out << ',' << table.mean(g, f) << ',' << table.group_errors[g * table.features.size() + f];
        }
        out << '\n';
    }
}

} // namespace tetris
