#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "figac/edges.hpp"
#include "figac/grid.hpp"

namespace figac::levelset {

/// Which factor multiplies the speed F in the update phi += h * F * factor.
enum class SpeedFactor {
    grad_norm,  ///< |grad phi|
    delta_eps,  ///< smoothed Dirac delta of phi (exact gradient flow of the smoothed energy)
};

std::string_view to_string(SpeedFactor mode);
SpeedFactor speed_factor_from_string(std::string_view name);

struct EvolutionParams {
    double alpha = 1.0;    ///< area-term weight; positive shrinks, negative expands
    double h = 0.1;        ///< explicit Euler time step
    double epsilon = 1.5;  ///< Heaviside smoothing width in pixels
    int n_iters = 3000;
    int reinit_every = 50;
    SpeedFactor speed_factor = SpeedFactor::grad_norm;

    void validate() const;
};

/// Axis-aligned rectangle through pixel centers, inclusive corners.
struct Box {
    int r0 = 0;
    int c0 = 0;
    int r1 = 0;
    int c1 = 0;

    friend bool operator==(const Box&, const Box&) = default;
};

/// Steppable solver state. The edge-detector and distance fields are frozen and shared
/// between successive states, so copying a state only copies phi.
struct EvolutionState {
    ScalarField phi;  ///< negative inside the contour
    int iter = 0;
    std::shared_ptr<const ScalarField> g_field;
    std::shared_ptr<const edges::DistanceField> beta;  ///< absent for the classical flow
    EvolutionParams params;

    /// Throws StateError when a field is missing, mis-sized or out of range.
    void validate() const;
};

/// Raised by reinitialize when phi has no zero crossing left.
class ContourVanished : public Error {
public:
    ContourVanished() : Error("contour vanished") {}
};

/// Throws ParameterError unless `box` is non-degenerate and at least one pixel inside the frame.
void validate_box(const Box& box, int width, int height);

/// Signed Euclidean distance to the outline of `box`: negative inside, zero on the outline.
ScalarField signed_distance_from_box(int width, int height, const Box& box);

double smoothed_heaviside(double z, double epsilon);
double smoothed_delta(double z, double epsilon);

/// |grad phi| regularizer used when normalizing the gradient.
inline constexpr double kGradientRegularizer = 1e-8;

/// div(g * grad phi / (|grad phi| + mu)) with central differences.
ScalarField curvature_divergence(const ScalarField& phi, const ScalarField& g);

/// One explicit Euler step of the geodesic active contour flow (beta ignored).
EvolutionState step_classical(const EvolutionState& state);

/// One step of the distance-weighted flow; pixels where beta is zero do not move.
EvolutionState step_figac(const EvolutionState& state);

/// Exact signed distance to the linearly interpolated zero crossing. The sign of every
/// pixel is kept, so the mask {phi <= 0} is unchanged.
ScalarField reinitialize(const ScalarField& phi);

/// {phi <= 0}
Mask extract_mask(const ScalarField& phi);

struct Point {
    double row = 0.0;
    double col = 0.0;
};

/// Closed polylines repeat their first point at the end.
using Polyline = std::vector<Point>;

/// Marching-squares zero crossing of phi, chained into polylines.
std::vector<Polyline> extract_contour(const ScalarField& phi);

/// Discrete J_eps + A_eps: sum of g*delta_eps(phi)*|grad phi| + alpha*g*H_eps(-phi).
double smoothed_energy(const ScalarField& phi, const ScalarField& g, double alpha, double epsilon);

}  // namespace figac::levelset
