#include "tetris/kernel.hpp"

#include "tetris/error.hpp"

#include <cctype>
#include <sstream>

namespace tetris {

std::string KernelSpec::label() const
{
    std::ostringstream out;
    out << "[(" << height << ", " << width << "), " << dilation << "]";
    return out.str();
}

namespace {

std::vector<int> extract_integers(std::string_view text)
{
    std::vector<int> values;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isdigit(static_cast<unsigned char>(text[i])) != 0) {
            int v = 0;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])) != 0) {
                v = v * 10 + (text[i] - '0');
                ++i;
            }
            values.push_back(v);
        } else if (text[i] == '-') {
            throw InvalidArgument("kernel spec '" + std::string(text) + "' has a negative entry");
        } else {
            ++i;
        }
    }
    return values;
}

} // namespace

KernelSpec KernelSpec::parse(std::string_view text)
{
    const std::vector<int> v = extract_integers(text);
    KernelSpec k;
    if (v.size() == 2) {
        k = {v[0], v[1], 1};
    } else if (v.size() == 3) {
        k = {v[0], v[1], v[2]};
    } else {
        throw InvalidArgument("cannot parse kernel spec '" + std::string(text) + "'");
    }
    if (k.height < 1 || k.width < 1 || k.dilation < 1) {
        throw InvalidArgument("kernel spec '" + std::string(text) + "' needs positive extents and dilation");
    }
    return k;
}

std::vector<KernelSpec> parse_kernel_list(const std::vector<std::string>& labels)
{
    std::vector<KernelSpec> kernels;
    kernels.reserve(labels.size());
    for (const auto& l : labels) {
        kernels.push_back(KernelSpec::parse(l));
    }
    return kernels;
}

Footprint footprint(const KernelSpec& kernel, const Geometry& geometry)
{
    if (kernel.height < 1 || kernel.width < 1 || kernel.dilation < 1) {
        throw InvalidArgument("kernel " + kernel.label() + " is malformed");
    }
    if (geometry.is_chain()) {
        if (kernel.width != 1) {
            throw InvalidArgument("kernel " + kernel.label() + " must have width 1 on a 1D chain");
        }
        return {1, kernel.height, kernel.dilation};
    }
    return {kernel.height, kernel.width, kernel.dilation};
}

bool fits(const KernelSpec& kernel, const Geometry& geometry)
{
    const Footprint fp = footprint(kernel, geometry);
    return fp.span_rows() <= geometry.height && fp.span_cols() <= geometry.width;
}

} // namespace tetris
