#include "tetris/spin_models.hpp"

#include "tetris/error.hpp"
#include "tetris/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace tetris {

std::string to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }
std::string to_string(Basis b) { return b == Basis::z ? "z" : "y"; }

Boundary parse_boundary(const std::string& text)
{
    if (text == "open") {
        return Boundary::open;
    }
    if (text == "periodic") {
        return Boundary::periodic;
    }
    throw InvalidArgument("unknown boundary '" + text + "' (expected open|periodic)");
}

Basis parse_basis(const std::string& text)
{
    if (text == "z") {
        return Basis::z;
    }
    if (text == "y") {
        return Basis::y;
    }
    throw InvalidArgument("unknown basis '" + text + "' (expected z|y)");
}

namespace {

void check_grid(const std::vector<double>& grid, const char* name)
{
    if (grid.empty()) {
        throw InvalidArgument(std::string(name) + " is empty");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw InvalidArgument(std::string(name) + " must be strictly increasing");
        }
    }
}

void check_chain(const TfimParams& p)
{
    if (p.sites < 2) {
        throw InvalidArgument("TFIM chain needs at least 2 sites");
    }
    if (p.sites > kMaxExactSites) {
        throw InvalidArgument("TFIM chain of " + std::to_string(p.sites) + " sites exceeds the exact-diagonalization limit of " +
                              std::to_string(kMaxExactSites));
    }
    if (!(p.coupling > 0.0)) {
        throw InvalidArgument("TFIM coupling J must be positive");
    }
}

// Matrix-free H_TFIM acting on real vectors.
class TfimOperator {
public:
    explicit TfimOperator(const TfimParams& p)
        : n_(p.sites), dim_(std::size_t{1} << p.sites), field_term_(p.coupling * p.field), diagonal_(dim_)
    {
        const int bonds = p.boundary == Boundary::periodic && n_ > 2 ? n_ : n_ - 1;
        for (std::size_t s = 0; s < dim_; ++s) {
            int aligned = 0;
            for (int b = 0; b < bonds; ++b) {
                const int i = b;
                const int j = (b + 1) % n_;
                const bool si = ((s >> (n_ - 1 - i)) & 1u) != 0;
                const bool sj = ((s >> (n_ - 1 - j)) & 1u) != 0;
                aligned += si == sj ? 1 : -1;
            }
            const int up = n_ - 2 * std::popcount(static_cast<std::uint32_t>(s));
            diagonal_[s] = -p.coupling * (aligned + p.pinning_field * up);
        }
    }

    std::size_t dim() const { return dim_; }

    void apply(const std::vector<double>& in, std::vector<double>& out) const
    {
        for (std::size_t s = 0; s < dim_; ++s) {
            double acc = diagonal_[s] * in[s];
            for (int i = 0; i < n_; ++i) {
                acc -= field_term_ * in[s ^ (std::size_t{1} << i)];
            }
            out[s] = acc;
        }
    }

private:
    int n_;
    std::size_t dim_;
    double field_term_;
    std::vector<double> diagonal_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

} // namespace

double StateVector::norm_squared() const
{
    double acc = 0.0;
    for (const auto& a : amplitudes) {
        acc += std::norm(a);
    }
    return acc;
}

GroundState tfim_ground_state(const TfimParams& params)
{
    check_chain(params);
    const TfimOperator op(params);
    const std::size_t dim = op.dim();

    // Restarted Lanczos with full reorthogonalization. The basis size is
    // capped so that N = 20 stays within a few hundred megabytes.
    const std::size_t budget = (std::size_t{1} << 25) / dim;
    const std::size_t krylov = std::min<std::size_t>(dim, std::clamp<std::size_t>(budget, 8, 60));
    constexpr int kMaxRestarts = 400;

    std::vector<double> x(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    std::vector<double> w(dim);
    std::vector<std::vector<double>> basis;
    double theta = 0.0;
    int matvecs = 0;

    for (int restart = 0; restart < kMaxRestarts; ++restart) {
        basis.assign(1, x);
        std::vector<double> alpha;
        std::vector<double> beta;
        for (std::size_t j = 0; j < krylov; ++j) {
            op.apply(basis[j], w);
            ++matvecs;
            alpha.push_back(dot(basis[j], w));
            // Two Gram-Schmidt passes against the whole basis.
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto& v : basis) {
                    const double c = dot(v, w);
                    for (std::size_t s = 0; s < dim; ++s) {
                        w[s] -= c * v[s];
                    }
                }
            }
            const double b = std::sqrt(dot(w, w));
            if (j + 1 == krylov || b < 1e-13) {
                break;
            }
            beta.push_back(b);
            for (double& ws : w) {
                ws /= b;
            }
            basis.push_back(w);
        }

        const auto k = static_cast<Eigen::Index>(alpha.size());
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(k, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            tri(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < k) {
                tri(i, i + 1) = tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(tri);
        if (solver.info() != Eigen::Success) {
            throw NumericalError("tridiagonal eigensolve failed in Lanczos iteration");
        }
        theta = solver.eigenvalues()(0);
        const Eigen::VectorXd y = solver.eigenvectors().col(0);

        std::fill(x.begin(), x.end(), 0.0);
        for (Eigen::Index i = 0; i < k; ++i) {
            const double c = y(i);
            const auto& v = basis[static_cast<std::size_t>(i)];
            for (std::size_t s = 0; s < dim; ++s) {
                x[s] += c * v[s];
            }
        }
        const double norm = std::sqrt(dot(x, x));
        for (double& xs : x) {
            xs /= norm;
        }

        op.apply(x, w);
        ++matvecs;
        theta = dot(x, w);
        double residual = 0.0;
        for (std::size_t s = 0; s < dim; ++s) {
            const double r = w[s] - theta * x[s];
            residual += r * r;
        }
        residual = std::sqrt(residual);
        if (residual < 1e-10 * std::max(1.0, std::abs(theta))) {
            GroundState gs;
            gs.state.sites = params.sites;
            gs.state.amplitudes.assign(x.begin(), x.end());
            gs.energy = theta;
            gs.matvecs = matvecs;
            return gs;
        }
    }
    throw NumericalError("Lanczos ground-state solve did not converge within " + std::to_string(kMaxRestarts) +
                         " restarts");
}

StateVector rotate_to_basis(const StateVector& state, Basis basis)
{
    if (basis == Basis::z) {
        return state;
    }
    StateVector out = state;
    const std::size_t dim = out.amplitudes.size();
    const double r = 1.0 / std::sqrt(2.0);
    const std::complex<double> i_unit(0.0, 1.0);
    for (int site = 0; site < state.sites; ++site) {
        const std::size_t mask = std::size_t{1} << (state.sites - 1 - site);
        for (std::size_t s = 0; s < dim; ++s) {
            if ((s & mask) != 0) {
                continue;
            }
            const auto up = out.amplitudes[s];
            const auto down = out.amplitudes[s | mask];
            out.amplitudes[s] = r * (up - i_unit * down);
            out.amplitudes[s | mask] = r * (up + i_unit * down);
        }
    }
    return out;
}

std::vector<std::vector<std::int8_t>> sample_snapshots(const StateVector& state, Basis basis, int count, Rng& rng)
{
    const std::size_t dim = std::size_t{1} << state.sites;
    if (state.sites < 1 || state.amplitudes.size() != dim) {
        throw InvalidArgument("state vector length does not match 2^sites");
    }
    if (std::abs(state.norm_squared() - 1.0) > 1e-8) {
        throw InvalidArgument("state vector is not normalized");
    }
    if (count < 0) {
        throw InvalidArgument("snapshot count must be non-negative");
    }

    const StateVector rotated = rotate_to_basis(state, basis);
    // cumulative[k] = sum of probabilities of basis states < k; the marginal
    // of any site prefix is a contiguous range of basis indices.
    std::vector<double> cumulative(dim + 1, 0.0);
    for (std::size_t s = 0; s < dim; ++s) {
        cumulative[s + 1] = cumulative[s] + std::norm(rotated.amplitudes[s]);
    }

    std::vector<std::vector<std::int8_t>> snapshots(static_cast<std::size_t>(count));
    for (auto& snap : snapshots) {
        snap.resize(static_cast<std::size_t>(state.sites));
        std::size_t lo = 0;
        std::size_t hi = dim;
        for (int site = 0; site < state.sites; ++site) {
            const std::size_t mid = lo + (hi - lo) / 2;
            const double total = cumulative[hi] - cumulative[lo];
            const double p_up = cumulative[mid] - cumulative[lo];
            bool up = rng.uniform() * total < p_up;
            if (p_up <= 0.0) {
                up = false;
            } else if (p_up >= total) {
                up = true;
            }
            snap[static_cast<std::size_t>(site)] = up ? 1 : -1;
            (up ? hi : lo) = mid;
        }
    }
    return snapshots;
}

void TfimParams::validate() const
{
    check_chain(*this);
    check_grid(field_grid, "field grid");
    if (snapshots_per_field < 1) {
        throw InvalidArgument("snapshots per field must be at least 1");
    }
}

SpinDataset build_tfim_dataset(const TfimParams& params)
{
    params.validate();
    const std::size_t points = params.field_grid.size();
    std::vector<std::vector<std::vector<std::int8_t>>> per_point(points);
    parallel_for(points, [&](std::size_t k) {
        TfimParams at = params;
        at.field = params.field_grid[k];
        const GroundState gs = tfim_ground_state(at);
        Rng rng = Rng::stream(params.seed, k);
        per_point[k] = sample_snapshots(gs.state, params.basis, params.snapshots_per_field, rng);
    });

    Geometry geometry{1, 1, params.sites, params.boundary == Boundary::periodic};
    SpinDataset dataset(geometry, Provenance{"tfim", to_string(params.basis), params.seed, params.field_grid});
    dataset.reserve(points * static_cast<std::size_t>(params.snapshots_per_field));
    for (std::size_t k = 0; k < points; ++k) {
        for (const auto& snap : per_point[k]) {
            dataset.add(snap, params.field_grid[k]);
        }
    }
    return dataset;
}

} // namespace tetris
