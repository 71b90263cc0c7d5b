#include "tetris/spin_models.hpp"

#include "tetris/error.hpp"
#include "tetris/parallel.hpp"

#include <cmath>

namespace tetris {

namespace {

inline std::size_t link_index(int size, int channel, int row, int col)
{
    const int r = ((row % size) + size) % size;
    const int c = ((col % size) + size) % size;
    return (static_cast<std::size_t>(channel) * size + r) * size + c;
}

} // namespace

Geometry igt_geometry(int size) { return Geometry{2, size, size, true}; }

int plaquette_product(std::span<const std::int8_t> links, int size, int row, int col)
{
    return links[link_index(size, 0, row, col)] * links[link_index(size, 0, row + 1, col)] *
           links[link_index(size, 1, row, col)] * links[link_index(size, 1, row, col + 1)];
}

double igt_plaquette_energy(std::span<const std::int8_t> links, const Geometry& geometry, double coupling)
{
    if (geometry.channels != 2 || geometry.height != geometry.width || geometry.height < 2) {
        throw InvalidArgument("IGT configuration must be two L x L link sublattices with L >= 2");
    }
    if (links.size() != static_cast<std::size_t>(geometry.sites())) {
        throw InvalidArgument("IGT configuration has " + std::to_string(links.size()) + " links, expected " +
                              std::to_string(geometry.sites()));
    }
    const int size = geometry.height;
    long total = 0;
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            total += plaquette_product(links, size, i, j);
        }
    }
    return -coupling * static_cast<double>(total);
}

IgtChain::IgtChain(int size, double coupling, double beta, Rng rng)
    : size_(size),
      coupling_(coupling),
      beta_(beta),
      accept_uphill_(std::exp(-4.0 * beta * coupling)),
      rng_(std::move(rng)),
      links_(static_cast<std::size_t>(2 * size * size), 1)
{
    if (size < 2) {
        throw InvalidArgument("IGT lattice size must be at least 2");
    }
}

void IgtChain::sweep()
{
    const auto links = static_cast<std::uint64_t>(links_.size());
    const auto per_channel = static_cast<std::uint64_t>(size_) * static_cast<std::uint64_t>(size_);
    for (std::uint64_t step = 0; step < links; ++step) {
        const std::uint64_t pick = rng_.below(links);
        const int channel = static_cast<int>(pick / per_channel);
        const int i = static_cast<int>(pick % per_channel) / size_;
        const int j = static_cast<int>(pick % per_channel) % size_;
        // A horizontal link borders plaquettes (i,j) and (i-1,j); a
        // vertical one borders (i,j) and (i,j-1).
        const int p1 = plaquette_product(links_, size_, i, j);
        const int p2 = channel == 0 ? plaquette_product(links_, size_, i - 1, j)
                                    : plaquette_product(links_, size_, i, j - 1);
        const double delta = 2.0 * coupling_ * (p1 + p2);
        bool accept = delta <= 0.0;
        if (!accept) {
            const double threshold = p1 + p2 == 2 ? accept_uphill_ : std::exp(-beta_ * delta);
            accept = rng_.uniform() < threshold;
        }
        if (accept) {
            auto& s = links_[pick];
            s = static_cast<std::int8_t>(-s);
            ++accepted_;
        }
    }
}

void IgtChain::sweeps(int n)
{
    for (int k = 0; k < n; ++k) {
        sweep();
    }
}

double IgtChain::energy() const { return igt_plaquette_energy(links_, igt_geometry(size_), coupling_); }

void IgtParams::validate() const
{
    if (size < 2) {
        throw InvalidArgument("IGT lattice size must be at least 2");
    }
    if (sweeps < 1) {
        throw InvalidArgument("IGT burn-in needs at least one sweep");
    }
    if (decorrelation_sweeps < 1) {
        throw InvalidArgument("IGT decorrelation needs at least one sweep");
    }
    if (samples_per_beta < 1) {
        throw InvalidArgument("IGT samples per beta must be at least 1");
    }
    if (beta_grid.empty()) {
        throw InvalidArgument("beta grid is empty");
    }
    for (std::size_t i = 1; i < beta_grid.size(); ++i) {
        if (!(beta_grid[i] > beta_grid[i - 1])) {
            throw InvalidArgument("beta grid must be strictly increasing");
        }
    }
}

SpinDataset igt_sample(const IgtParams& params)
{
    if (params.sweeps < 1) {
        throw InvalidArgument("IGT burn-in needs at least one sweep");
    }
    const std::size_t points = params.beta_grid.size();
    const Geometry geometry = igt_geometry(params.size);
    std::vector<std::vector<std::int8_t>> per_point(points);
    parallel_for(points, [&](std::size_t k) {
        IgtChain chain(params.size, params.coupling, params.beta_grid[k], Rng::stream(params.seed, k));
        chain.sweeps(params.sweeps);
        auto& out = per_point[k];
        out.reserve(static_cast<std::size_t>(params.samples_per_beta * geometry.sites()));
        for (int s = 0; s < params.samples_per_beta; ++s) {
            if (s > 0) {
                chain.sweeps(params.decorrelation_sweeps);
            }
            out.insert(out.end(), chain.links().begin(), chain.links().end());
        }
    });

    SpinDataset dataset(geometry, Provenance{"igt", "links", params.seed, params.beta_grid});
    dataset.reserve(points * static_cast<std::size_t>(params.samples_per_beta));
    const auto n = static_cast<std::size_t>(geometry.sites());
    for (std::size_t k = 0; k < points; ++k) {
        for (std::size_t s = 0; s < per_point[k].size() / n; ++s) {
            dataset.add(std::span<const std::int8_t>(per_point[k]).subspan(s * n, n), params.beta_grid[k]);
        }
    }
    return dataset;
}

SpinDataset build_igt_dataset(const IgtParams& params)
{
    params.validate();
    return igt_sample(params);
}

} // namespace tetris
