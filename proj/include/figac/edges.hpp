#pragma once

#include <vector>

#include "figac/grid.hpp"

namespace figac::edges {

/// Characteristic function of a set of edge pixels.
struct EdgeSet {
    Mask mask;

    int width() const noexcept { return mask.width(); }
    int height() const noexcept { return mask.height(); }
    bool empty() const { return count(mask) == 0; }
};

/// Fracture annotations: polylines in pixel coordinates; a one-point stroke is a point.
struct PromptSet {
    std::vector<std::vector<Pixel>> strokes;

    bool empty() const noexcept { return strokes.empty(); }
};

/// Normalized distance-to-stopping-set field with values in [0, 1].
struct DistanceField {
    ScalarField field;
};

/// Raised when the stopping set is empty and the distance factor is undefined.
class NoStoppingSet : public Error {
public:
    NoStoppingSet() : Error("no stopping set") {}
};

/// Canny parameters. Thresholds are fractions of the largest magnitude left after
/// non-maximum suppression.
struct CannyParams {
    double low = 0.2;
    double high = 0.8;
    int smooth_size = 5;
    double smooth_sigma = 1.0;

    void validate() const;
};

EdgeSet canny(const ScalarField& image, double low, double high);
EdgeSet canny(const ScalarField& image, const CannyParams& params);

/// Keeps the edges inside the ROI whose local mean (image convolved with `kernel`) is at least `eta`.
EdgeSet filter_bone_edges(const EdgeSet& all, const ScalarField& image, const Mask& roi, const Kernel& kernel,
                          double eta);

/// Bresenham rasterization of a polyline; consecutive duplicates are collapsed.
std::vector<Pixel> rasterize_stroke(const std::vector<Pixel>& stroke);

/// Throws ParameterError naming the first stroke with an out-of-bounds point or no points.
void validate_prompts(const PromptSet& prompts, int width, int height);

/// Union of the bone edges with every rasterized prompt stroke.
EdgeSet embed_prompts(const EdgeSet& bone, const PromptSet& prompts);

/// Euclidean distance to the nearest set pixel divided by the largest such distance.
/// Works for any grid size; throws NoStoppingSet for an empty set.
Grid<double> normalized_distance(const Mask& set);

/// Distance factor over the stopping set; zero on the set, maximum exactly 1.
DistanceField distance_factor(const EdgeSet& edges);

}  // namespace figac::edges
