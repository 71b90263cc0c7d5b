#pragma once

#include "tetris/dataset.hpp"
#include "tetris/rng.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tetris {

enum class Boundary { open, periodic };
enum class Basis { z, y };

std::string to_string(Boundary b);
std::string to_string(Basis b);
Boundary parse_boundary(const std::string& text);
Basis parse_basis(const std::string& text);

// ---------------------------------------------------------------------------
// 1D transverse-field Ising model
//
//   H = -J ( sum_i Z_i Z_{i+1} + g sum_i X_i + h sum_i Z_i )
//
// with h = 0 unless a symmetry-breaking pinning field is requested,
// solved by exact (Lanczos) diagonalization. Basis index convention: site 0
// is the most significant bit and bit value 0 means spin up (+1).
// ---------------------------------------------------------------------------

constexpr int kMaxExactSites = 20;

struct TfimParams {
    double coupling = 1.0;               // J
    double field = 1.0;                  // g used by tfim_ground_state
    double pinning_field = 0.0;          // h, adds -J h sum_i Z_i
    int sites = 12;                      // N
    Boundary boundary = Boundary::open;
    Basis basis = Basis::z;
    int snapshots_per_field = 200;
    std::vector<double> field_grid;      // strictly increasing
    std::uint64_t seed = 0;

    // Checks the dataset-level invariants (grid, counts, N range).
    void validate() const;
};

struct StateVector {
    int sites = 0;
    std::vector<std::complex<double>> amplitudes;

    double norm_squared() const;
};

struct GroundState {
    StateVector state;
    double energy = 0.0;
    int matvecs = 0;
};

// Lowest eigenpair of H_TFIM at params.field. The Lanczos iteration starts
// from the uniform (spin-flip symmetric) vector, so for the open/periodic
// chain it converges to the symmetric finite-size ground state.
// Throws InvalidArgument for N outside [2, 20] or J <= 0, NumericalError if
// the iteration cap is hit.
GroundState tfim_ground_state(const TfimParams& params);

// Applies the single-site unitary that maps the measurement basis onto z.
// For y: U = (1/sqrt2) [[1, -i], [1, i]], i.e. |+y> -> |up>, |-y> -> |down>
// with |+-y> = (|up> +- i|down>)/sqrt2. The z basis is the identity.
StateVector rotate_to_basis(const StateVector& state, Basis basis);

// Born-rule snapshots in the given basis, drawn site by site from the
// conditional marginals. Each snapshot has one +/-1 entry per site.
std::vector<std::vector<std::int8_t>> sample_snapshots(const StateVector& state, Basis basis, int count, Rng& rng);

// One ground state per grid point, snapshots_per_field samples each, labels
// are the field values. Grid point k draws from Rng::stream(seed, k).
SpinDataset build_tfim_dataset(const TfimParams& params);

// ---------------------------------------------------------------------------
// 2D Ising gauge theory on an L x L periodic lattice
//
//   H = -J sum_p prod_{i in p} S_i
//
// Link spins live in two channels: channel 0 holds horizontal links h(i,j),
// channel 1 vertical links v(i,j). Plaquette (i,j) is
// h(i,j) h(i+1,j) v(i,j) v(i,j+1), indices taken modulo L.
// ---------------------------------------------------------------------------

struct IgtParams {
    int size = 8;                        // L
    double coupling = 1.0;               // J
    int sweeps = 1000;                   // burn-in
    int decorrelation_sweeps = 10;
    int samples_per_beta = 200;
    std::vector<double> beta_grid;       // strictly increasing
    std::uint64_t seed = 0;

    void validate() const;
};

Geometry igt_geometry(int size);

int plaquette_product(std::span<const std::int8_t> links, int size, int row, int col);

// -J times the sum of all L^2 plaquette products. Throws on shape mismatch.
double igt_plaquette_energy(std::span<const std::int8_t> links, const Geometry& geometry, double coupling = 1.0);

// Single-spin-flip Metropolis chain started from the all +1 ground state.
// A sweep is 2 L^2 proposals at uniformly drawn links. A fixed visiting
// order is not used: with every zero-cost flip accepted it conserves
// quantities and never reaches the Boltzmann distribution (plainly so at
// beta = 0, where a sweep just inverts the lattice).
class IgtChain {
public:
    IgtChain(int size, double coupling, double beta, Rng rng);

    void sweep();
    void sweeps(int n);

    std::span<const std::int8_t> links() const { return links_; }
    double energy() const;
    std::uint64_t accepted() const { return accepted_; }

private:
    int size_;
    double coupling_;
    double beta_;
    double accept_uphill_;  // exp(-4 beta J), the only positive energy change
    Rng rng_;
    std::vector<std::int8_t> links_;
    std::uint64_t accepted_ = 0;
};

// Samples every beta in the grid (grid point k on Rng::stream(seed, k)):
// burn-in, then samples_per_beta snapshots separated by decorrelation sweeps.
SpinDataset igt_sample(const IgtParams& params);

// Validated igt_sample with provenance attached; labels are beta.
SpinDataset build_igt_dataset(const IgtParams& params);

} // namespace tetris
