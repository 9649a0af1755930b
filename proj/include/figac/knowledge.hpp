#pragma once

#include <optional>

#include "figac/grid.hpp"

namespace figac::knowledge {

/// Practicable bone-window ranges and CT-value tissue bounds, all in HU.
struct BoneWindowSpec {
    double w1 = 1000.0;  ///< window width lower bound
    double w2 = 1500.0;  ///< window width upper bound
    double l1 = 250.0;   ///< window level lower bound
    double l2 = 350.0;   ///< window level upper bound
    double S = 100.0;    ///< soft-tissue upper bound
    double B = 300.0;    ///< bone lower bound

    /// Throws ParameterError unless 0 < w1 <= w2, l1 <= l2 and S <= l1.
    void validate() const;
};

/// Parameters of the intensity+gradient edge detector.
struct EdgeDetectorParams {
    double eps1 = 102.0;  ///< intensity ramp start
    double eps2 = 13.0;   ///< gradient ramp start
    double delta1 = 1.0;
    double delta2 = 2.0;
    double gamma = 1.0;

    void validate() const;
    /// Additionally checks theta1 <= eps1 <= theta2 and 0 <= eps2 <= theta2 - theta1.
    void validate(double theta1, double theta2) const;
};

/// Piecewise-linear CT window: HU -> gray level in [0, 255].
double grayscale_map(double hu, double window_width, double window_level);

/// Applies grayscale_map to every pixel of a slice.
ScalarField apply_window(const CtSlice& slice, double window_width, double window_level);

/// Worst-case (largest) gray level soft tissue can reach over all practicable windows.
double compute_theta1(const BoneWindowSpec& spec);

/// Worst-case (smallest) gray level bone can reach over all practicable windows.
double compute_theta2(const BoneWindowSpec& spec);

struct Separation {
    bool separated = false;
    double theta1 = 0.0;
    double theta2 = 0.0;
};

/// Sufficient condition for theta1 <= theta2, together with both bounds.
Separation check_separation(const BoneWindowSpec& spec);

/// Options for the classical detector's optional Gaussian pre-smoothing.
struct Presmooth {
    int size = 9;
    double sigma = 1.5;
};

/// g = 1 / (1 + |grad I|^2).
ScalarField edge_detector_classical(const ScalarField& image, std::optional<Presmooth> presmooth = std::nullopt);

/// Pointwise value of the intensity-aware detector for a given intensity and gradient norm.
double edge_detector_value(double intensity, double gradient_norm, const EdgeDetectorParams& p);

/// 1/(1+f1(I)) + gamma/(1+f2(|grad I|)) with f_i(z) = ((z - eps_i)_+)^delta_i.
ScalarField edge_detector_proposed(const ScalarField& image, const EdgeDetectorParams& p,
                                   std::optional<Presmooth> presmooth = std::nullopt);

}  // namespace figac::knowledge
