#include "tetris/analysis/curve.hpp"

#include "tetris/correlators.hpp"
#include "tetris/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace tetris {

void Curve::validate() const
{
    if (y.size() != x.size() || (!y_err.empty() && y_err.size() != x.size())) {
        throw InvalidArgument("curve columns have different lengths");
    }
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (!(x[i] > x[i - 1])) {
            throw InvalidArgument("curve x values must be strictly increasing");
        }
    }
}

Curve curve_from_samples(std::span<const double> labels, std::span<const double> values)
{
    if (labels.size() != values.size()) {
        throw InvalidArgument("labels and values have different lengths");
    }
    const GroupedValues g = group_by_label(std::vector<double>(labels.begin(), labels.end()),
                                           std::vector<double>(values.begin(), values.end()));
    return Curve{g.labels, g.means, g.errors};
}

TransitionEstimate transition_location(const Curve& curve)
{
    curve.validate();
    const std::size_t n = curve.size();
    if (n < 5) {
        throw InvalidArgument("transition location needs at least 5 grid points, got " + std::to_string(n));
    }
    const auto& x = curve.x;
    const auto& y = curve.y;
    std::vector<double> raw(n);
    raw[0] = (y[1] - y[0]) / (x[1] - x[0]);
    raw[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        raw[i] = (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]);
    }
    TransitionEstimate t;
    t.derivative.resize(n);
    t.derivative[0] = 0.5 * (raw[0] + raw[1]);
    t.derivative[n - 1] = 0.5 * (raw[n - 2] + raw[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        t.derivative[i] = (raw[i - 1] + raw[i] + raw[i + 1]) / 3.0;
    }

    double top = 0.0;
    for (double d : t.derivative) {
        top = std::max(top, std::abs(d));
    }
    const double tol = 1e-9 * std::max(1.0, top);
    std::size_t best_first = 0;
    std::size_t best_len = 0;
    for (std::size_t i = 0; i < n;) {
        if (top - std::abs(t.derivative[i]) > tol) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && top - std::abs(t.derivative[j + 1]) <= tol) {
            ++j;
        }
        if (j - i + 1 > best_len) {
            best_len = j - i + 1;
            best_first = i;
        }
        i = j + 1;
    }
    t.first = best_first;
    t.last = best_first + best_len - 1;
    t.location = 0.5 * (x[t.first] + x[t.last]);
    return t;
}

void write_curve_csv(const Curve& curve, std::ostream& out, const std::string& y_name)
{
    out << "x," << y_name << ',' << y_name << "_err\n";
    out.precision(12);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out << curve.x[i] << ',' << curve.y[i] << ',' << (curve.y_err.empty() ? 0.0 : curve.y_err[i]) << '\n';
    }
}

} // namespace tetris
