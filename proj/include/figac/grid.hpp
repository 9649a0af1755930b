#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "figac/errors.hpp"

namespace figac {

/// Pixel coordinate, row first.
struct Pixel {
    int row = 0;
    int col = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Dense row-major 2D array with no size or value constraints.
template <class T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height)
    {
        if (width < 1 || height < 1)
            throw ParameterError("grid dimensions must be positive");
        data_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }

    bool contains(int row, int col) const noexcept
    {
        return row >= 0 && col >= 0 && row < height_ && col < width_;
    }

    T& operator()(int row, int col) { return data_[index(row, col)]; }
    const T& operator()(int row, int col) const { return data_[index(row, col)]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    bool same_shape(int width, int height) const noexcept
    {
        return width_ == width && height_ == height;
    }
    template <class U>
    bool same_shape(const Grid<U>& other) const noexcept
    {
        return same_shape(other.width(), other.height());
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t index(int row, int col) const noexcept
    {
        return static_cast<std::size_t>(row) * width_ + col;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Boolean per-pixel field stored as 0/1 bytes.
using Mask = Grid<std::uint8_t>;

std::size_t count(const Mask& mask);

/// Real-valued image-domain field (image, level set, edge detector, ...).
///
/// At least 3x3 so that every stencil has a one-pixel margin; values are
/// required to be finite on construction.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(int width, int height, double fill = 0.0);
    ScalarField(int width, int height, std::vector<double> data);
    explicit ScalarField(Grid<double> grid);

    int width() const noexcept { return grid_.width(); }
    int height() const noexcept { return grid_.height(); }
    std::size_t size() const noexcept { return grid_.size(); }
    bool contains(int row, int col) const noexcept { return grid_.contains(row, col); }

    double& operator()(int row, int col) { return grid_(row, col); }
    double operator()(int row, int col) const { return grid_(row, col); }

    std::span<double> values() noexcept { return grid_.values(); }
    std::span<const double> values() const noexcept { return grid_.values(); }

    const Grid<double>& grid() const noexcept { return grid_; }

    template <class U>
    bool same_shape(const Grid<U>& other) const noexcept { return grid_.same_shape(other); }
    bool same_shape(const ScalarField& other) const noexcept { return grid_.same_shape(other.grid_); }

    bool all_finite() const noexcept;
    double min() const;
    double max() const;

    /// Builds a field from a callable f(row, col).
    template <class F>
    static ScalarField generate(int width, int height, F&& f)
    {
        ScalarField out(width, height);
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c)
                out(r, c) = f(r, c);
        return out;
    }

    friend bool operator==(const ScalarField&, const ScalarField&) = default;

private:
    Grid<double> grid_;
};

/// Raw CT slice in Hounsfield units.
struct CtSlice {
    ScalarField hu;
    double pixel_spacing = 1.0;

    static constexpr double kMinHu = -32768.0;
    static constexpr double kMaxHu = 32767.0;

    /// Clamps every value into the representable HU range.
    static CtSlice ingest(ScalarField raw, double pixel_spacing = 1.0);
};

/// Square convolution kernel with odd side length.
class Kernel {
public:
    Kernel(int size, std::vector<double> weights);

    static Kernel average(int size);
    static Kernel identity(int size = 1);
    /// Normalized truncated Gaussian.
    static Kernel gaussian(int size, double sigma);

    int size() const noexcept { return size_; }
    int radius() const noexcept { return size_ / 2; }
    double operator()(int i, int j) const { return weights_[static_cast<std::size_t>(i) * size_ + j]; }
    std::span<const double> weights() const noexcept { return weights_; }
    double sum() const noexcept;

private:
    int size_;
    std::vector<double> weights_;
};

struct Gradient {
    ScalarField gx;  ///< derivative along columns
    ScalarField gy;  ///< derivative along rows
};

/// Central differences inside, one-sided differences on the frame.
Gradient gradient(const ScalarField& f);

/// sqrt(gx^2 + gy^2) pixelwise.
ScalarField magnitude(const Gradient& g);

/// Convolution with edge replication; output has the input's size.
ScalarField convolve(const ScalarField& f, const Kernel& k);

ScalarField gaussian_smooth(const ScalarField& f, int size, double sigma);

/// Exact squared Euclidean distance from every pixel to the nearest set pixel.
/// Pixels of an empty mask get +infinity.
Grid<double> squared_distance_to(const Mask& set);

}  // namespace figac
