#pragma once

#include <optional>

#include "figac/grid.hpp"

namespace figac::metrics {

struct MaskPair {
    Mask ground_truth;
    Mask prediction;

    MaskPair(Mask ground_truth, Mask prediction);
};

/// Overlap scores as percentages. Two empty masks agree perfectly (100).
double dice(const MaskPair& p);
double jaccard(const MaskPair& p);

/// Pixels with at least one 4-neighbor outside the mask; the frame counts as outside.
Mask boundary(const Mask& mask);

/// Boundary distances between pixel centers, scaled by `spacing` when given.
/// Both masks must be nonempty.
double hausdorff(const MaskPair& p, std::optional<double> spacing = std::nullopt);
double assd(const MaskPair& p, std::optional<double> spacing = std::nullopt);

}  // namespace figac::metrics
