#include "figac/knowledge.hpp"

#include <cmath>
#include <string>

namespace figac::knowledge {

void BoneWindowSpec::validate() const
{
    if (!(w1 > 0.0))
        throw ParameterError("spec.w1 must be positive");
    if (!(w1 <= w2))
        throw ParameterError("spec.w1 must not exceed spec.w2");
    if (!(l1 <= l2))
        throw ParameterError("spec.l1 must not exceed spec.l2");
    if (!(S <= l1))
        throw ParameterError("spec.S must not exceed spec.l1");
    if (!std::isfinite(B))
        throw ParameterError("spec.B must be finite");
}

void EdgeDetectorParams::validate() const
{
    if (!(delta1 > 0.0))
        throw ParameterError("detector.delta1 must be positive");
    if (!(delta2 > 0.0))
        throw ParameterError("detector.delta2 must be positive");
    if (!(gamma > 0.0))
        throw ParameterError("detector.gamma must be positive");
    if (!std::isfinite(eps1) || !std::isfinite(eps2))
        throw ParameterError("detector thresholds must be finite");
}

void EdgeDetectorParams::validate(double theta1, double theta2) const
{
    validate();
    if (eps1 < theta1 || eps1 > theta2)
        throw ParameterError("detector.eps1 must lie in [theta1, theta2] = [" + std::to_string(theta1) + ", " +
                             std::to_string(theta2) + "]");
    if (eps2 < 0.0 || eps2 > theta2 - theta1)
        throw ParameterError("detector.eps2 must lie in [0, theta2 - theta1]");
}

double grayscale_map(double hu, double window_width, double window_level)
{
    if (!(window_width > 0.0))
        throw ParameterError("window width must be positive");
    const double lo = window_level - window_width / 2.0;
    const double hi = window_level + window_width / 2.0;
    if (hu >= hi)
        return 255.0;
    if (hu < lo)
        return 0.0;
    return 255.0 / window_width * (hu - window_level) + 127.5;
}

ScalarField apply_window(const CtSlice& slice, double window_width, double window_level)
{
    if (!(window_width > 0.0))
        throw ParameterError("window width must be positive");
    ScalarField out = slice.hu;
    for (double& v : out.values())
        v = grayscale_map(v, window_width, window_level);
    return out;
}

double compute_theta1(const BoneWindowSpec& spec)
{
    spec.validate();
    // Soft tissue is brightest at the narrowest level and widest window once S <= l1.
    return grayscale_map(spec.S, spec.w2, spec.l1);
}

double compute_theta2(const BoneWindowSpec& spec)
{
    spec.validate();
    // Bone is darkest at the highest level; the window width that minimizes depends on the sign of B - l2.
    if (spec.B >= spec.l2)
        return grayscale_map(spec.B, spec.w2, spec.l2);
    return grayscale_map(spec.B, spec.w1, spec.l2);
}

Separation check_separation(const BoneWindowSpec& spec)
{
    Separation s;
    s.theta1 = compute_theta1(spec);
    s.theta2 = compute_theta2(spec);
    s.separated = spec.B >= spec.l2 || (spec.S - spec.l1) / spec.w2 <= (spec.B - spec.l2) / spec.w1;
    return s;
}

ScalarField edge_detector_classical(const ScalarField& image, std::optional<Presmooth> presmooth)
{
    const ScalarField src = presmooth ? gaussian_smooth(image, presmooth->size, presmooth->sigma) : image;
    const Gradient g = gradient(src);
    ScalarField out(image.width(), image.height());
    auto gx = g.gx.values();
    auto gy = g.gy.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i)
        o[i] = 1.0 / (1.0 + gx[i] * gx[i] + gy[i] * gy[i]);
    return out;
}

double edge_detector_value(double intensity, double gradient_norm, const EdgeDetectorParams& p)
{
    const double f1 = std::pow(std::max(intensity - p.eps1, 0.0), p.delta1);
    const double f2 = std::pow(std::max(gradient_norm - p.eps2, 0.0), p.delta2);
    return 1.0 / (1.0 + f1) + p.gamma / (1.0 + f2);
}

ScalarField edge_detector_proposed(const ScalarField& image, const EdgeDetectorParams& p,
                                   std::optional<Presmooth> presmooth)
{
    p.validate();
    const ScalarField src = presmooth ? gaussian_smooth(image, presmooth->size, presmooth->sigma) : image;
    const ScalarField grad_norm = magnitude(gradient(src));
    ScalarField out(image.width(), image.height());
    auto in = src.values();
    auto gn = grad_norm.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i)
        o[i] = edge_detector_value(in[i], gn[i], p);
    return out;
}

}  // namespace figac::knowledge
