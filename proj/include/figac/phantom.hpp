#pragma once

#include <cstdint>
#include <string_view>

#include "figac/edges.hpp"
#include "figac/grid.hpp"

namespace figac::phantom {

enum class Kind { ring, fractured_ring, ring_with_blob, annulus, two_disks };

std::string_view to_string(Kind kind);
Kind kind_from_string(std::string_view name);

/// Geometry and gray levels of a synthetic windowed slice. Angles are in degrees,
/// counter-clockwise from the +column axis with rows pointing down.
struct PhantomSpec {
    Kind kind = Kind::ring;
    int size = 128;
    double outer_radius = 40.0;
    double inner_radius = 25.0;

    double gap_degrees = 45.0;       ///< fractured_ring: angular span of the missing cortex
    double gap_center_degrees = 0.0;

    double blob_radius = 5.0;        ///< ring_with_blob
    double blob_distance = 51.0;     ///< blob center distance from the ring center
    double blob_angle_degrees = 135.0;
    double blob_gray = 60.0;

    double hole_gray = 20.0;         ///< annulus: gray level inside the hole
    double bone_gray_min = 102.0;    ///< annulus: hole counts as bone in the truth above this

    double disk_radius = 18.0;       ///< two_disks
    double disk_separation = 10.0;   ///< gap between the two disks along the row
    int channel_width = 2;

    double background_gray = 20.0;
    double cortical_gray = 200.0;
    double interior_gray = 25.0;     ///< trabecular interior of the rings

    double noise_sigma = 0.0;
    std::uint32_t seed = 1;

    void validate() const;
};

struct Phantom {
    ScalarField image;  ///< gray levels in [0, 255]
    Mask truth;         ///< analytic ground truth
};

Phantom make_phantom(const PhantomSpec& spec);

/// For a fractured ring: a stroke along the outer cortex spanning the gap with a small overlap.
edges::PromptSet suggested_fracture_prompt(const PhantomSpec& spec);

/// Pixels of the ring interior (strictly inside the inner radius).
Mask ring_interior(const PhantomSpec& spec);

}  // namespace figac::phantom
