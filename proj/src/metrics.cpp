#include "figac/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace figac::metrics {

MaskPair::MaskPair(Mask gt, Mask pred)
    : ground_truth(std::move(gt)), prediction(std::move(pred))
{
    if (!ground_truth.same_shape(prediction))
        throw ParameterError("ground truth and prediction must have the same dimensions");
}

namespace {

struct Overlap {
    double g = 0;
    double s = 0;
    double both = 0;
};

Overlap overlap(const MaskPair& p)
{
    Overlap o;
    auto a = p.ground_truth.values();
    auto b = p.prediction.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        o.g += a[i] != 0;
        o.s += b[i] != 0;
        o.both += a[i] && b[i];
    }
    return o;
}

// Distances from each boundary pixel of `from` to the boundary of `to`.
std::vector<double> boundary_distances(const Mask& from, const Mask& to)
{
    const Mask bf = boundary(from);
    const Grid<double> d2 = squared_distance_to(boundary(to));
    std::vector<double> out;
    for (std::size_t i = 0; i < bf.size(); ++i)
        if (bf.values()[i])
            out.push_back(std::sqrt(d2.values()[i]));
    return out;
}

void require_nonempty(const MaskPair& p)
{
    if (count(p.ground_truth) == 0 || count(p.prediction) == 0)
        throw ParameterError("undefined boundary metric: empty mask");
}

}  // namespace

double dice(const MaskPair& p)
{
    const Overlap o = overlap(p);
    if (o.g + o.s == 0)
        return 100.0;
    return 100.0 * 2.0 * o.both / (o.g + o.s);
}

double jaccard(const MaskPair& p)
{
    const Overlap o = overlap(p);
    const double uni = o.g + o.s - o.both;
    if (uni == 0)
        return 100.0;
    return 100.0 * o.both / uni;
}

Mask boundary(const Mask& mask)
{
    Mask out(mask.width(), mask.height(), 0);
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask(r, c))
                continue;
            auto off = [&](int rr, int cc) { return !mask.contains(rr, cc) || !mask(rr, cc); };
            out(r, c) = off(r - 1, c) || off(r + 1, c) || off(r, c - 1) || off(r, c + 1);
        }
    }
    return out;
}

double hausdorff(const MaskPair& p, std::optional<double> spacing)
{
    require_nonempty(p);
    double worst = 0.0;
    for (double d : boundary_distances(p.ground_truth, p.prediction))
        worst = std::max(worst, d);
    for (double d : boundary_distances(p.prediction, p.ground_truth))
        worst = std::max(worst, d);
    return worst * spacing.value_or(1.0);
}

double assd(const MaskPair& p, std::optional<double> spacing)
{
    require_nonempty(p);
    const auto a = boundary_distances(p.ground_truth, p.prediction);
    const auto b = boundary_distances(p.prediction, p.ground_truth);
    double sum = 0.0;
    for (double d : a)
        sum += d;
    for (double d : b)
        sum += d;
    return sum / static_cast<double>(a.size() + b.size()) * spacing.value_or(1.0);
}

}  // namespace figac::metrics
