#pragma once

// Independent reference implementations used to check the library. They favor
// obviously-correct brute force over speed and share no code with src/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "figac/grid.hpp"
#include "figac/knowledge.hpp"

namespace oracle {

using figac::Mask;

inline double window_map(double z, double ww, double wl)
{
    if (z >= wl + ww / 2.0)
        return 255.0;
    if (z <= wl - ww / 2.0)
        return 0.0;
    return 255.0 / ww * (z - wl) + 127.5;
}

struct ThetaSearch {
    double theta1;
    double theta2;
    double lattice_step;  ///< largest change of the mapped value between neighboring lattice nodes
};

/// Grid search of the worst-case gray levels over an n x n lattice of (width, level).
inline ThetaSearch brute_theta(const figac::knowledge::BoneWindowSpec& s, int n = 200)
{
    double t1 = -std::numeric_limits<double>::infinity();
    double t2 = std::numeric_limits<double>::infinity();
    const double dw = (s.w2 - s.w1) / (n - 1);
    const double dl = (s.l2 - s.l1) / (n - 1);
    for (int i = 0; i < n; ++i) {
        const double w = s.w1 + dw * i;
        for (int j = 0; j < n; ++j) {
            const double l = s.l1 + dl * j;
            t1 = std::max(t1, window_map(s.S, w, l));
            t2 = std::min(t2, window_map(s.B, w, l));
        }
    }
    // |dm/dl| <= 255/w and |dm/dw| <= 127.5/w inside the linear ramp.
    const double step = 255.0 / s.w1 * dl + 127.5 / s.w1 * dw;
    return {t1, t2, step};
}

/// Euclidean distance from every pixel to the nearest set pixel, by exhaustive search.
inline std::vector<double> brute_distance(const Mask& set)
{
    std::vector<std::pair<int, int>> pts;
    for (int r = 0; r < set.height(); ++r)
        for (int c = 0; c < set.width(); ++c)
            if (set(r, c))
                pts.emplace_back(r, c);
    std::vector<double> out;
    for (int r = 0; r < set.height(); ++r) {
        for (int c = 0; c < set.width(); ++c) {
            double best = std::numeric_limits<double>::infinity();
            for (auto [pr, pc] : pts)
                best = std::min(best, std::sqrt(double((r - pr) * (r - pr) + (c - pc) * (c - pc))));
            out.push_back(best);
        }
    }
    return out;
}

inline std::vector<double> brute_normalized_distance(const Mask& set)
{
    auto d = brute_distance(set);
    const double mx = *std::max_element(d.begin(), d.end());
    for (double& v : d)
        v = mx > 0 ? v / mx : 0.0;
    return d;
}

inline std::vector<std::pair<int, int>> brute_boundary(const Mask& m)
{
    std::vector<std::pair<int, int>> out;
    for (int r = 0; r < m.height(); ++r) {
        for (int c = 0; c < m.width(); ++c) {
            if (!m(r, c))
                continue;
            bool edge = false;
            const int dr[] = {-1, 1, 0, 0};
            const int dc[] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                const int rr = r + dr[k], cc = c + dc[k];
                if (rr < 0 || cc < 0 || rr >= m.height() || cc >= m.width() || !m(rr, cc))
                    edge = true;
            }
            if (edge)
                out.emplace_back(r, c);
        }
    }
    return out;
}

struct BruteMetrics {
    double dice;
    double jaccard;
    double hd;
    double assd;
};

/// Overlap by counting and boundary distances by all-pairs search.
inline BruteMetrics brute_metrics(const Mask& g, const Mask& s)
{
    long ng = 0, ns = 0, both = 0;
    for (int r = 0; r < g.height(); ++r)
        for (int c = 0; c < g.width(); ++c) {
            ng += g(r, c) != 0;
            ns += s(r, c) != 0;
            both += g(r, c) && s(r, c);
        }
    BruteMetrics m{};
    m.dice = ng + ns == 0 ? 100.0 : 200.0 * both / double(ng + ns);
    m.jaccard = ng + ns - both == 0 ? 100.0 : 100.0 * both / double(ng + ns - both);
    const auto bg = brute_boundary(g);
    const auto bs = brute_boundary(s);
    auto nearest = [](std::pair<int, int> p, const std::vector<std::pair<int, int>>& set) {
        double best = std::numeric_limits<double>::infinity();
        for (auto q : set)
            best = std::min(best, std::hypot(double(p.first - q.first), double(p.second - q.second)));
        return best;
    };
    double hd = 0.0, sum = 0.0;
    for (auto p : bg) {
        const double d = nearest(p, bs);
        hd = std::max(hd, d);
        sum += d;
    }
    for (auto p : bs) {
        const double d = nearest(p, bg);
        hd = std::max(hd, d);
        sum += d;
    }
    m.hd = hd;
    m.assd = sum / double(bg.size() + bs.size());
    return m;
}

inline Mask random_mask(std::mt19937& rng, int w, int h, double density)
{
    std::bernoulli_distribution coin(density);
    Mask m(w, h, 0);
    for (auto& v : m.values())
        v = coin(rng);
    return m;
}

/// Random union of axis-aligned rectangles, closer to segmentation-like masks than noise.
inline Mask random_blocks(std::mt19937& rng, int w, int h, int blocks)
{
    Mask m(w, h, 0);
    std::uniform_int_distribution<int> rr(0, h - 1), cc(0, w - 1), len(1, std::max(1, std::min(w, h) / 2));
    for (int b = 0; b < blocks; ++b) {
        const int r0 = rr(rng), c0 = cc(rng), hh = len(rng), ww = len(rng);
        for (int r = r0; r < std::min(h, r0 + hh); ++r)
            for (int c = c0; c < std::min(w, c0 + ww); ++c)
                m(r, c) = 1;
    }
    return m;
}

inline figac::ScalarField circle_sdf(int size, double cr, double cc, double radius)
{
    return figac::ScalarField::generate(size, size,
                                        [&](int r, int c) { return std::hypot(r - cr, c - cc) - radius; });
}

}  // namespace oracle
