#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tetris {

// y (with standard errors) sampled on a strictly increasing label grid.
struct Curve {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> y_err;

    std::size_t size() const { return x.size(); }
    // Throws InvalidArgument if x is not strictly increasing or the lengths
    // differ (an empty y_err is allowed).
    void validate() const;
};

// Per-label means and standard errors of per-sample values.
Curve curve_from_samples(std::span<const double> labels, std::span<const double> values);

struct TransitionEstimate {
    double location = 0.0;
    std::size_t first = 0;  // plateau of maximal |dy/dx|, inclusive
    std::size_t last = 0;
    std::vector<double> derivative;  // smoothed dy/dx on the curve's grid
};

// Central differences (one-sided at the ends), a 3-point moving average
// (2-point at the ends), then the argmax of |dy/dx|. Ties within 1e-9
// relative form a plateau; the longest plateau wins (the first on equal
// length) and its midpoint in x is returned. Needs >= 5 points.
TransitionEstimate transition_location(const Curve& curve);

// "x,y,y_err" rows.
void write_curve_csv(const Curve& curve, std::ostream& out, const std::string& y_name = "y");

} // namespace tetris
