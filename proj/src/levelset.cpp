#include "figac/levelset.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>

namespace figac::levelset {

std::string_view to_string(SpeedFactor mode)
{
    return mode == SpeedFactor::grad_norm ? "grad_norm" : "delta_eps";
}

SpeedFactor speed_factor_from_string(std::string_view name)
{
    if (name == "grad_norm")
        return SpeedFactor::grad_norm;
    if (name == "delta_eps")
        return SpeedFactor::delta_eps;
    throw ParameterError("evolution.speed_factor must be grad_norm or delta_eps, got '" + std::string(name) + "'");
}

void EvolutionParams::validate() const
{
    if (!std::isfinite(alpha))
        throw ParameterError("evolution.alpha must be finite");
    if (!(h > 0.0) || !std::isfinite(h))
        throw ParameterError("evolution.h must be positive");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw ParameterError("evolution.epsilon must be positive");
    if (n_iters < 0)
        throw ParameterError("evolution.n_iters must be non-negative");
    if (reinit_every < 1)
        throw ParameterError("evolution.reinit_every must be at least 1");
}

void EvolutionState::validate() const
{
    params.validate();
    if (!phi.all_finite())
        throw StateError("phi has non-finite values");
    if (!g_field)
        throw StateError("edge-detector field missing");
    if (!g_field->same_shape(phi))
        throw StateError("edge-detector field does not match phi");
    for (double v : g_field->values())
        if (!(v > 0.0))
            throw StateError("edge-detector field must be positive");
    if (beta) {
        if (!beta->field.same_shape(phi))
            throw StateError("distance field does not match phi");
        for (double v : beta->field.values())
            if (v < 0.0 || v > 1.0)
                throw StateError("distance field must lie in [0, 1]");
    }
}

void validate_box(const Box& box, int width, int height)
{
    if (box.r0 >= box.r1 || box.c0 >= box.c1)
        throw ParameterError("box must satisfy r0 < r1 and c0 < c1");
    if (box.r0 < 1 || box.c0 < 1 || box.r1 > height - 2 || box.c1 > width - 2)
        throw ParameterError("box must lie strictly inside the grid");
}

ScalarField signed_distance_from_box(int width, int height, const Box& box)
{
    validate_box(box, width, height);
    return ScalarField::generate(width, height, [&](int r, int c) {
        const bool inside = r >= box.r0 && r <= box.r1 && c >= box.c0 && c <= box.c1;
        if (inside)
            return -static_cast<double>(std::min({r - box.r0, box.r1 - r, c - box.c0, box.c1 - c}));
        const double dr = std::max({box.r0 - r, 0, r - box.r1});
        const double dc = std::max({box.c0 - c, 0, c - box.c1});
        return std::hypot(dr, dc);
    });
}

double smoothed_heaviside(double z, double epsilon)
{
    return 0.5 * (1.0 + 2.0 / std::numbers::pi * std::atan(z / epsilon));
}

double smoothed_delta(double z, double epsilon)
{
    return epsilon / (std::numbers::pi * (epsilon * epsilon + z * z));
}

namespace {

// Derivatives with the same stencil as figac::gradient, one component at a time.
inline double d_col(const ScalarField& f, int r, int c)
{
    const int w = f.width();
    if (c == 0)
        return f(r, 1) - f(r, 0);
    if (c == w - 1)
        return f(r, c) - f(r, c - 1);
    return 0.5 * (f(r, c + 1) - f(r, c - 1));
}

inline double d_row(const ScalarField& f, int r, int c)
{
    const int h = f.height();
    if (r == 0)
        return f(1, c) - f(0, c);
    if (r == h - 1)
        return f(r, c) - f(r - 1, c);
    return 0.5 * (f(r + 1, c) - f(r - 1, c));
}

struct Flux {
    ScalarField vx;
    ScalarField vy;
    ScalarField grad_norm;
};

Flux weighted_normal(const ScalarField& phi, const ScalarField& g)
{
    const int w = phi.width();
    const int h = phi.height();
    Flux out{ScalarField(w, h), ScalarField(w, h), ScalarField(w, h)};
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double gx = d_col(phi, r, c);
            const double gy = d_row(phi, r, c);
            const double n = std::hypot(gx, gy);
            const double scale = g(r, c) / (n + kGradientRegularizer);
            out.vx(r, c) = scale * gx;
            out.vy(r, c) = scale * gy;
            out.grad_norm(r, c) = n;
        }
    }
    return out;
}

ScalarField divergence(const ScalarField& vx, const ScalarField& vy)
{
    return ScalarField::generate(vx.width(), vx.height(),
                                 [&](int r, int c) { return d_col(vx, r, c) + d_row(vy, r, c); });
}

EvolutionState step_impl(const EvolutionState& state, const ScalarField* beta)
{
    const ScalarField& phi = state.phi;
    const ScalarField& g = *state.g_field;
    const EvolutionParams& p = state.params;

    const Flux flux = weighted_normal(phi, g);
    const ScalarField div = divergence(flux.vx, flux.vy);

    EvolutionState next{phi, state.iter + 1, state.g_field, state.beta, state.params};
    auto out = next.phi.values();
    auto in = phi.values();
    auto gv = g.values();
    auto dv = div.values();
    auto nv = flux.grad_norm.values();
#ifndef NDEBUG
    double max_speed = 0.0, max_factor = 0.0, max_change = 0.0;
#endif
    for (std::size_t i = 0; i < out.size(); ++i) {
        double speed = dv[i] + p.alpha * gv[i];
        if (beta)
            speed *= beta->values()[i];
        const double factor =
            p.speed_factor == SpeedFactor::grad_norm ? nv[i] : smoothed_delta(in[i], p.epsilon);
        out[i] = in[i] + p.h * speed * factor;
#ifndef NDEBUG
        max_speed = std::max(max_speed, std::abs(speed));
        max_factor = std::max(max_factor, std::abs(factor));
        max_change = std::max(max_change, std::abs(out[i] - in[i]));
#endif
    }
#ifndef NDEBUG
    assert(max_change <= p.h * max_speed * max_factor * (1.0 + 1e-12) + 1e-300);
    assert(next.phi.all_finite());
#endif
    return next;
}

}  // namespace

ScalarField curvature_divergence(const ScalarField& phi, const ScalarField& g)
{
    if (!phi.same_shape(g))
        throw ParameterError("phi and g must have the same dimensions");
    const Flux flux = weighted_normal(phi, g);
    return divergence(flux.vx, flux.vy);
}

EvolutionState step_classical(const EvolutionState& state)
{
    if (!state.g_field)
        throw StateError("edge-detector field missing");
    return step_impl(state, nullptr);
}

EvolutionState step_figac(const EvolutionState& state)
{
    if (!state.g_field)
        throw StateError("edge-detector field missing");
    if (!state.beta)
        throw StateError("distance field missing: the distance-weighted flow needs beta");
    return step_impl(state, &state.beta->field);
}

Mask extract_mask(const ScalarField& phi)
{
    Mask m(phi.width(), phi.height(), 0);
    auto in = phi.values();
    auto out = m.values();
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = in[i] <= 0.0 ? 1 : 0;
    return m;
}

namespace {

struct Crossing {
    Point at;
    long key;  // identifies the grid edge the crossing lies on
};

struct Segment {
    Crossing a;
    Crossing b;
};

// Marching squares over the cells of phi; inside means phi <= 0.
std::vector<Segment> zero_crossing_segments(const ScalarField& phi)
{
    const int w = phi.width();
    const int h = phi.height();
    auto hkey = [w](int r, int c) { return 2L * (static_cast<long>(r) * w + c); };
    auto vkey = [w](int r, int c) { return 2L * (static_cast<long>(r) * w + c) + 1; };
    auto cross = [&](int ra, int ca, int rb, int cb, long key) {
        const double fa = phi(ra, ca);
        const double fb = phi(rb, cb);
        const double t = fa / (fa - fb);
        return Crossing{{ra + t * (rb - ra), ca + t * (cb - ca)}, key};
    };

    std::vector<Segment> segs;
    for (int r = 0; r + 1 < h; ++r) {
        for (int c = 0; c + 1 < w; ++c) {
            const bool in0 = phi(r, c) <= 0.0;
            const bool in1 = phi(r, c + 1) <= 0.0;
            const bool in2 = phi(r + 1, c + 1) <= 0.0;
            const bool in3 = phi(r + 1, c) <= 0.0;
            if (in0 == in1 && in1 == in2 && in2 == in3)
                continue;

            std::array<std::optional<Crossing>, 4> e;  // top, right, bottom, left
            if (in0 != in1)
                e[0] = cross(r, c, r, c + 1, hkey(r, c));
            if (in1 != in2)
                e[1] = cross(r, c + 1, r + 1, c + 1, vkey(r, c + 1));
            if (in3 != in2)
                e[2] = cross(r + 1, c, r + 1, c + 1, hkey(r + 1, c));
            if (in0 != in3)
                e[3] = cross(r, c, r + 1, c, vkey(r, c));

            std::array<int, 4> idx{};
            int n = 0;
            for (int k = 0; k < 4; ++k)
                if (e[k])
                    idx[n++] = k;
            if (n == 2) {
                segs.push_back({*e[idx[0]], *e[idx[1]]});
                continue;
            }
            // Saddle: diagonal corners share a side. The cell-center average decides
            // whether the inside corners connect through the middle.
            const double center = 0.25 * (phi(r, c) + phi(r, c + 1) + phi(r + 1, c + 1) + phi(r + 1, c));
            const bool center_in = center <= 0.0;
            // Cut off the corners whose side differs from the center.
            if (in0 != center_in) {
                segs.push_back({*e[0], *e[3]});
                segs.push_back({*e[1], *e[2]});
            }
            else {
                segs.push_back({*e[0], *e[1]});
                segs.push_back({*e[2], *e[3]});
            }
        }
    }
    return segs;
}

double point_segment_distance2(double pr, double pc, const Point& a, const Point& b)
{
    const double dr = b.row - a.row;
    const double dc = b.col - a.col;
    const double len2 = dr * dr + dc * dc;
    double t = 0.0;
    if (len2 > 0.0)
        t = std::clamp(((pr - a.row) * dr + (pc - a.col) * dc) / len2, 0.0, 1.0);
    const double qr = a.row + t * dr - pr;
    const double qc = a.col + t * dc - pc;
    return qr * qr + qc * qc;
}

}  // namespace

ScalarField reinitialize(const ScalarField& phi)
{
    const std::vector<Segment> segs = zero_crossing_segments(phi);
    if (segs.empty())
        throw ContourVanished();

    const int w = phi.width();
    const int h = phi.height();
    constexpr int bucket = 8;
    const int bw = (w + bucket - 1) / bucket;
    const int bh = (h + bucket - 1) / bucket;
    std::vector<std::vector<int>> buckets(static_cast<std::size_t>(bw) * bh);
    for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
        const double mr = 0.5 * (segs[i].a.at.row + segs[i].b.at.row);
        const double mc = 0.5 * (segs[i].a.at.col + segs[i].b.at.col);
        const int br = std::clamp(static_cast<int>(mr) / bucket, 0, bh - 1);
        const int bc = std::clamp(static_cast<int>(mc) / bucket, 0, bw - 1);
        buckets[static_cast<std::size_t>(br) * bw + bc].push_back(i);
    }

    ScalarField out(w, h);
    const int max_ring = std::max(bw, bh);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int br = r / bucket;
            const int bc = c / bucket;
            double best = std::numeric_limits<double>::infinity();
            for (int ring = 0; ring <= max_ring; ++ring) {
                // Segments are filed by midpoint and are at most sqrt(2) long, hence the slack.
                const double bound = std::max(0.0, (ring - 1) * double(bucket) - 1.0);
                if (bound * bound > best)
                    break;
                for (int i = br - ring; i <= br + ring; ++i) {
                    if (i < 0 || i >= bh)
                        continue;
                    const bool edge_row = i == br - ring || i == br + ring;
                    for (int j = bc - ring; j <= bc + ring; j += (edge_row ? 1 : 2 * ring)) {
                        if (j >= 0 && j < bw)
                            for (int s : buckets[static_cast<std::size_t>(i) * bw + j])
                                best = std::min(best, point_segment_distance2(r, c, segs[s].a.at, segs[s].b.at));
                        if (ring == 0)
                            break;
                    }
                }
            }
            const double d = std::sqrt(best);
            out(r, c) = phi(r, c) <= 0.0 ? -d : std::max(d, 1e-12);
        }
    }
    return out;
}

std::vector<Polyline> extract_contour(const ScalarField& phi)
{
    const std::vector<Segment> segs = zero_crossing_segments(phi);
    std::unordered_map<long, std::vector<int>> by_key;
    by_key.reserve(segs.size() * 2);
    for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
        by_key[segs[i].a.key].push_back(i);
        by_key[segs[i].b.key].push_back(i);
    }

    std::vector<char> used(segs.size(), 0);
    std::vector<Polyline> lines;

    auto walk = [&](int first, long start_key) {
        Polyline line;
        long key = start_key;
        int seg = first;
        const Crossing& s0 = segs[first].a.key == start_key ? segs[first].a : segs[first].b;
        line.push_back(s0.at);
        while (seg >= 0 && !used[seg]) {
            used[seg] = 1;
            const Crossing& next = segs[seg].a.key == key ? segs[seg].b : segs[seg].a;
            line.push_back(next.at);
            key = next.key;
            int following = -1;
            for (int cand : by_key[key])
                if (!used[cand])
                    following = cand;
            seg = following;
        }
        return line;
    };

    // Open chains start at crossings shared by a single segment (the grid frame).
    std::vector<long> ends;
    for (const auto& [key, list] : by_key)
        if (list.size() == 1)
            ends.push_back(key);
    std::sort(ends.begin(), ends.end());
    for (long key : ends) {
        const int seg = by_key[key][0];
        if (!used[seg])
            lines.push_back(walk(seg, key));
    }
    for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
        if (!used[i]) {
            Polyline line = walk(i, segs[i].a.key);
            lines.push_back(std::move(line));
        }
    }
    // Deterministic order independent of hash iteration.
    std::sort(lines.begin(), lines.end(), [](const Polyline& a, const Polyline& b) {
        if (a.front().row != b.front().row)
            return a.front().row < b.front().row;
        return a.front().col < b.front().col;
    });
    return lines;
}

double smoothed_energy(const ScalarField& phi, const ScalarField& g, double alpha, double epsilon)
{
    if (!phi.same_shape(g))
        throw ParameterError("phi and g must have the same dimensions");
    double length = 0.0;
    double area = 0.0;
    for (int r = 0; r < phi.height(); ++r) {
        for (int c = 0; c < phi.width(); ++c) {
            const double n = std::hypot(d_col(phi, r, c), d_row(phi, r, c));
            length += g(r, c) * smoothed_delta(phi(r, c), epsilon) * n;
            area += g(r, c) * smoothed_heaviside(-phi(r, c), epsilon);
        }
    }
    return length + alpha * area;
}

}  // namespace figac::levelset
