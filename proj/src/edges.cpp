#include "figac/edges.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace figac::edges {

void CannyParams::validate() const
{
    if (!(low >= 0.0) || !(high <= 1.0))
        throw ParameterError("canny.low and canny.high must lie in [0, 1]");
    if (!(low < high))
        throw ParameterError("canny.low must be smaller than canny.high");
    if (smooth_size < 1 || smooth_size % 2 == 0 || !(smooth_sigma > 0.0))
        throw ParameterError("canny.smooth_size must be odd and positive and canny.smooth_sigma positive");
}

EdgeSet canny(const ScalarField& image, double low, double high)
{
    CannyParams p;
    p.low = low;
    p.high = high;
    return canny(image, p);
}

namespace {

struct Sobel {
    ScalarField gx;
    ScalarField gy;
};

Sobel sobel(const ScalarField& f)
{
    const int w = f.width();
    const int h = f.height();
    auto at = [&](int r, int c) { return f(std::clamp(r, 0, h - 1), std::clamp(c, 0, w - 1)); };
    ScalarField gx(w, h), gy(w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            gx(r, c) = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1)) -
                       (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
            gy(r, c) = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1)) -
                       (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
        }
    }
    return {std::move(gx), std::move(gy)};
}

// Quantized gradient direction as a (row, col) step.
Pixel quantize(double gy, double gx)
{
    double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
    if (deg < 0.0)
        deg += 180.0;
    if (deg < 22.5 || deg >= 157.5)
        return {0, 1};
    if (deg < 67.5)
        return {1, 1};
    if (deg < 112.5)
        return {1, 0};
    return {1, -1};
}

}  // namespace

EdgeSet canny(const ScalarField& image, const CannyParams& params)
{
    params.validate();
    const int w = image.width();
    const int h = image.height();
    const ScalarField smooth = gaussian_smooth(image, params.smooth_size, params.smooth_sigma);
    const Sobel s = sobel(smooth);

    Grid<double> mag(w, h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            mag(r, c) = std::hypot(s.gx(r, c), s.gy(r, c));

    auto m_at = [&](int r, int c) { return mag.contains(r, c) ? mag(r, c) : 0.0; };

    // Non-maximum suppression; ties resolve toward the pixel on the negative side.
    Grid<double> nms(w, h, 0.0);
    double peak = 0.0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double m = mag(r, c);
            if (m <= 0.0)
                continue;
            const Pixel d = quantize(s.gy(r, c), s.gx(r, c));
            if (m > m_at(r - d.row, c - d.col) && m >= m_at(r + d.row, c + d.col)) {
                nms(r, c) = m;
                peak = std::max(peak, m);
            }
        }
    }

    EdgeSet out{Mask(w, h, 0)};
    if (peak <= 0.0)
        return out;
    const double lo = params.low * peak;
    const double hi = params.high * peak;

    // Hysteresis: grow from strong pixels through 8-connected candidates above the low threshold.
    std::vector<Pixel> stack;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (nms(r, c) >= hi && nms(r, c) > 0.0) {
                out.mask(r, c) = 1;
                stack.push_back({r, c});
            }
        }
    }
    while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                const int rr = p.row + dr;
                const int cc = p.col + dc;
                if (!nms.contains(rr, cc) || out.mask(rr, cc))
                    continue;
                if (nms(rr, cc) >= lo && nms(rr, cc) > 0.0) {
                    out.mask(rr, cc) = 1;
                    stack.push_back({rr, cc});
                }
            }
        }
    }
    return out;
}

EdgeSet filter_bone_edges(const EdgeSet& all, const ScalarField& image, const Mask& roi, const Kernel& kernel,
                          double eta)
{
    if (!image.same_shape(all.mask) || !roi.same_shape(all.mask))
        throw ParameterError("edge set, image and ROI must have the same dimensions");
    const ScalarField local_mean = convolve(image, kernel);
    EdgeSet out{Mask(all.width(), all.height(), 0)};
    for (int r = 0; r < all.height(); ++r)
        for (int c = 0; c < all.width(); ++c)
            out.mask(r, c) = (all.mask(r, c) && roi(r, c) && local_mean(r, c) >= eta) ? 1 : 0;
    return out;
}

std::vector<Pixel> rasterize_stroke(const std::vector<Pixel>& stroke)
{
    std::vector<Pixel> out;
    auto push = [&](Pixel p) {
        if (out.empty() || !(out.back() == p))
            out.push_back(p);
    };
    if (stroke.size() == 1) {
        push(stroke.front());
        return out;
    }
    for (std::size_t i = 0; i + 1 < stroke.size(); ++i) {
        int r0 = stroke[i].row, c0 = stroke[i].col;
        const int r1 = stroke[i + 1].row, c1 = stroke[i + 1].col;
        const int dc = std::abs(c1 - c0), sc = c0 < c1 ? 1 : -1;
        const int dr = -std::abs(r1 - r0), sr = r0 < r1 ? 1 : -1;
        int err = dc + dr;
        while (true) {
            push({r0, c0});
            if (r0 == r1 && c0 == c1)
                break;
            const int e2 = 2 * err;
            if (e2 >= dr) {
                err += dr;
                c0 += sc;
            }
            if (e2 <= dc) {
                err += dc;
                r0 += sr;
            }
        }
    }
    return out;
}

void validate_prompts(const PromptSet& prompts, int width, int height)
{
    for (std::size_t i = 0; i < prompts.strokes.size(); ++i) {
        const auto& stroke = prompts.strokes[i];
        if (stroke.empty())
            throw ParameterError("prompt stroke " + std::to_string(i) + " has no points");
        for (const Pixel& p : stroke) {
            if (p.row < 0 || p.col < 0 || p.row >= height || p.col >= width)
                throw ParameterError("prompt stroke " + std::to_string(i) + " has point (" + std::to_string(p.row) +
                                     "," + std::to_string(p.col) + ") outside the image");
        }
    }
}

EdgeSet embed_prompts(const EdgeSet& bone, const PromptSet& prompts)
{
    validate_prompts(prompts, bone.width(), bone.height());
    EdgeSet out = bone;
    for (const auto& stroke : prompts.strokes)
        for (const Pixel& p : rasterize_stroke(stroke))
            out.mask(p.row, p.col) = 1;
    return out;
}

Grid<double> normalized_distance(const Mask& set)
{
    if (count(set) == 0)
        throw NoStoppingSet();
    Grid<double> d = squared_distance_to(set);
    double peak = 0.0;
    for (double& v : d.values()) {
        v = std::sqrt(v);
        peak = std::max(peak, v);
    }
    if (peak > 0.0)
        for (double& v : d.values())
            v /= peak;
    return d;
}

DistanceField distance_factor(const EdgeSet& edges)
{
    return DistanceField{ScalarField(normalized_distance(edges.mask))};
}

}  // namespace figac::edges
