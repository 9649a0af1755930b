#include "figac/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace figac {

std::size_t count(const Mask& mask)
{
    return static_cast<std::size_t>(
        std::count_if(mask.values().begin(), mask.values().end(), [](std::uint8_t v) { return v != 0; }));
}

namespace {

void require_stencil_size(int width, int height)
{
    if (width < 3 || height < 3)
        throw ParameterError("scalar field must be at least 3x3");
}

}  // namespace

ScalarField::ScalarField(int width, int height, double fill)
{
    require_stencil_size(width, height);
    if (!std::isfinite(fill))
        throw ParameterError("scalar field values must be finite");
    grid_ = Grid<double>(width, height, fill);
}

ScalarField::ScalarField(int width, int height, std::vector<double> data)
{
    require_stencil_size(width, height);
    if (data.size() != static_cast<std::size_t>(width) * height)
        throw ParameterError("scalar field data length does not match dimensions");
    grid_ = Grid<double>(width, height);
    std::copy(data.begin(), data.end(), grid_.values().begin());
    if (!all_finite())
        throw ParameterError("scalar field values must be finite");
}

ScalarField::ScalarField(Grid<double> grid)
{
    require_stencil_size(grid.width(), grid.height());
    grid_ = std::move(grid);
    if (!all_finite())
        throw ParameterError("scalar field values must be finite");
}

bool ScalarField::all_finite() const noexcept
{
    return std::all_of(values().begin(), values().end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::min() const
{
    return *std::min_element(values().begin(), values().end());
}

double ScalarField::max() const
{
    return *std::max_element(values().begin(), values().end());
}

CtSlice CtSlice::ingest(ScalarField raw, double pixel_spacing)
{
    if (!(pixel_spacing > 0.0))
        throw ParameterError("pixel spacing must be positive");
    for (double& v : raw.values())
        v = std::clamp(v, kMinHu, kMaxHu);
    return CtSlice{std::move(raw), pixel_spacing};
}

Kernel::Kernel(int size, std::vector<double> weights)
    : size_(size), weights_(std::move(weights))
{
    if (size < 1 || size % 2 == 0)
        throw ParameterError("kernel size must be odd and positive");
    if (weights_.size() != static_cast<std::size_t>(size) * size)
        throw ParameterError("kernel weight count must be size*size");
}

Kernel Kernel::average(int size)
{
    if (size < 1 || size % 2 == 0)
        throw ParameterError("kernel size must be odd and positive");
    const double w = 1.0 / (static_cast<double>(size) * size);
    return Kernel(size, std::vector<double>(static_cast<std::size_t>(size) * size, w));
}

Kernel Kernel::identity(int size)
{
    if (size < 1 || size % 2 == 0)
        throw ParameterError("kernel size must be odd and positive");
    std::vector<double> w(static_cast<std::size_t>(size) * size, 0.0);
    w[w.size() / 2] = 1.0;
    return Kernel(size, std::move(w));
}

Kernel Kernel::gaussian(int size, double sigma)
{
    if (size < 1 || size % 2 == 0)
        throw ParameterError("gaussian size must be odd and positive");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw ParameterError("gaussian sigma must be positive");
    const int r = size / 2;
    std::vector<double> w(static_cast<std::size_t>(size) * size);
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j)
            w[static_cast<std::size_t>(i + r) * size + (j + r)] = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w)
        v /= total;
    return Kernel(size, std::move(w));
}

double Kernel::sum() const noexcept
{
    return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

Gradient gradient(const ScalarField& f)
{
    const int w = f.width();
    const int h = f.height();
    ScalarField gx(w, h), gy(w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (c == 0)
                gx(r, c) = f(r, 1) - f(r, 0);
            else if (c == w - 1)
                gx(r, c) = f(r, c) - f(r, c - 1);
            else
                gx(r, c) = 0.5 * (f(r, c + 1) - f(r, c - 1));

            if (r == 0)
                gy(r, c) = f(1, c) - f(0, c);
            else if (r == h - 1)
                gy(r, c) = f(r, c) - f(r - 1, c);
            else
                gy(r, c) = 0.5 * (f(r + 1, c) - f(r - 1, c));
        }
    }
    return {std::move(gx), std::move(gy)};
}

ScalarField magnitude(const Gradient& g)
{
    ScalarField out(g.gx.width(), g.gx.height());
    auto ox = g.gx.values();
    auto oy = g.gy.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i)
        o[i] = std::hypot(ox[i], oy[i]);
    return out;
}

ScalarField convolve(const ScalarField& f, const Kernel& k)
{
    const int w = f.width();
    const int h = f.height();
    const int rad = k.radius();
    ScalarField out(w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -rad; i <= rad; ++i) {
                const int rr = std::clamp(r - i, 0, h - 1);
                for (int j = -rad; j <= rad; ++j) {
                    const int cc = std::clamp(c - j, 0, w - 1);
                    acc += k(i + rad, j + rad) * f(rr, cc);
                }
            }
            out(r, c) = acc;
        }
    }
    return out;
}

ScalarField gaussian_smooth(const ScalarField& f, int size, double sigma)
{
    return convolve(f, Kernel::gaussian(size, sigma));
}

namespace {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), one line at a time.
void distance_1d(std::span<const double> f, std::span<double> d, std::vector<int>& v, std::vector<double>& z)
{
    const int n = static_cast<int>(f.size());
    constexpr double inf = std::numeric_limits<double>::infinity();
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (!std::isfinite(f[q]))
            continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        double s;
        while (true) {
            const int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
            if (s <= z[k] && k > 0)
                --k;
            else
                break;
        }
        if (s <= z[k]) {
            // k == 0 and the new parabola dominates everywhere.
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    if (k < 0) {
        std::fill(d.begin(), d.end(), inf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q)
            ++j;
        const double dq = q - v[j];
        d[q] = dq * dq + f[v[j]];
    }
}

}  // namespace

Grid<double> squared_distance_to(const Mask& set)
{
    const int w = set.width();
    const int h = set.height();
    constexpr double inf = std::numeric_limits<double>::infinity();
    Grid<double> out(w, h, inf);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (set(r, c))
                out(r, c) = 0.0;

    const int n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);

    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r)
            f[r] = out(r, c);
        distance_1d(std::span(f).first(h), std::span(d).first(h), v, z);
        for (int r = 0; r < h; ++r)
            out(r, c) = d[r];
    }
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c)
            f[c] = out(r, c);
        distance_1d(std::span(f).first(w), std::span(d).first(w), v, z);
        for (int c = 0; c < w; ++c)
            out(r, c) = d[c];
    }
    return out;
}

}  // namespace figac
