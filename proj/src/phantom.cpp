#include "figac/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace figac::phantom {

std::string_view to_string(Kind kind)
{
    switch (kind) {
    case Kind::ring: return "ring";
    case Kind::fractured_ring: return "fractured_ring";
    case Kind::ring_with_blob: return "ring_with_blob";
    case Kind::annulus: return "annulus";
    case Kind::two_disks: return "two_disks";
    }
    return "ring";
}

Kind kind_from_string(std::string_view name)
{
    for (Kind k : {Kind::ring, Kind::fractured_ring, Kind::ring_with_blob, Kind::annulus, Kind::two_disks})
        if (to_string(k) == name)
            return k;
    throw ParameterError("unknown phantom kind '" + std::string(name) + "'");
}

namespace {

double center_of(const PhantomSpec& s) { return (s.size - 1) / 2.0; }

double angle_deg(double dr, double dc)
{
    double a = std::atan2(-dr, dc) * 180.0 / std::numbers::pi;
    return a < 0.0 ? a + 360.0 : a;
}

bool in_gap(const PhantomSpec& s, double dr, double dc)
{
    double diff = std::fmod(angle_deg(dr, dc) - s.gap_center_degrees + 540.0, 360.0) - 180.0;
    return std::abs(diff) <= s.gap_degrees / 2.0;
}

}  // namespace

void PhantomSpec::validate() const
{
    if (size < 8)
        throw ParameterError("phantom size must be at least 8");
    const double half = center_of(*this);
    if (kind == Kind::two_disks) {
        const double reach = disk_separation / 2.0 + 2.0 * disk_radius;
        if (!(disk_radius > 0.0) || reach >= half || channel_width < 1)
            throw ParameterError("two_disks geometry does not fit inside the phantom");
        return;
    }
    if (!(inner_radius > 0.0) || !(outer_radius > inner_radius))
        throw ParameterError("phantom radii must satisfy 0 < inner < outer");
    if (outer_radius >= half - 1.0)
        throw ParameterError("phantom ring does not fit inside the image");
    if (kind == Kind::fractured_ring && !(gap_degrees > 0.0 && gap_degrees < 360.0))
        throw ParameterError("gap_degrees must lie in (0, 360)");
    if (kind == Kind::ring_with_blob && (blob_distance + blob_radius >= half * std::numbers::sqrt2 ||
                                         !(blob_radius > 0.0)))
        throw ParameterError("blob does not fit inside the phantom");
}

Phantom make_phantom(const PhantomSpec& s)
{
    s.validate();
    const int n = s.size;
    const double cr = center_of(s);
    const double cc = cr;
    ScalarField image(n, n, s.background_gray);
    Mask truth(n, n, 0);

    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double dr = r - cr;
            const double dc = c - cc;
            const double rho = std::hypot(dr, dc);
            switch (s.kind) {
            case Kind::ring:
            case Kind::ring_with_blob:
            case Kind::fractured_ring:
                if (rho <= s.inner_radius)
                    image(r, c) = s.interior_gray;
                else if (rho <= s.outer_radius)
                    image(r, c) = (s.kind == Kind::fractured_ring && in_gap(s, dr, dc)) ? s.background_gray
                                                                                       : s.cortical_gray;
                truth(r, c) = rho <= s.outer_radius;
                break;
            case Kind::annulus:
                if (rho <= s.inner_radius)
                    image(r, c) = s.hole_gray;
                else if (rho <= s.outer_radius)
                    image(r, c) = s.cortical_gray;
                truth(r, c) = rho <= s.outer_radius && (rho > s.inner_radius || s.hole_gray > s.bone_gray_min);
                break;
            case Kind::two_disks: {
                const double offset = s.disk_radius + s.disk_separation / 2.0;
                const bool disk = std::hypot(dr, dc - offset) <= s.disk_radius ||
                                  std::hypot(dr, dc + offset) <= s.disk_radius;
                const int top = static_cast<int>(std::floor(cr)) - (s.channel_width - 1) / 2;
                const bool channel = r >= top && r < top + s.channel_width && std::abs(dc) <= offset;
                if (disk || channel) {
                    image(r, c) = s.cortical_gray;
                    truth(r, c) = 1;
                }
                break;
            }
            }
        }
    }

    if (s.kind == Kind::ring_with_blob) {
        const double a = s.blob_angle_degrees * std::numbers::pi / 180.0;
        const double br = cr - s.blob_distance * std::sin(a);
        const double bc = cc + s.blob_distance * std::cos(a);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                if (std::hypot(r - br, c - bc) <= s.blob_radius && !truth(r, c))
                    image(r, c) = s.blob_gray;
    }

    if (s.noise_sigma > 0.0) {
        std::mt19937 rng(s.seed);
        std::normal_distribution<double> noise(0.0, s.noise_sigma);
        for (double& v : image.values())
            v = std::clamp(v + noise(rng), 0.0, 255.0);
    }
    return {std::move(image), std::move(truth)};
}

edges::PromptSet suggested_fracture_prompt(const PhantomSpec& s)
{
    const double c = center_of(s);
    const double radius = s.outer_radius - 0.5;
    const double half = s.gap_degrees / 2.0 + 4.0;
    constexpr int points = 5;
    std::vector<Pixel> stroke;
    for (int i = 0; i < points; ++i) {
        const double deg = s.gap_center_degrees - half + 2.0 * half * i / (points - 1);
        const double a = deg * std::numbers::pi / 180.0;
        stroke.push_back({static_cast<int>(std::lround(c - radius * std::sin(a))),
                          static_cast<int>(std::lround(c + radius * std::cos(a)))});
    }
    return edges::PromptSet{{stroke}};
}

Mask ring_interior(const PhantomSpec& s)
{
    const double c = center_of(s);
    Mask m(s.size, s.size, 0);
    for (int r = 0; r < s.size; ++r)
        for (int col = 0; col < s.size; ++col)
            m(r, col) = std::hypot(r - c, col - c) < s.inner_radius;
    return m;
}

}  // namespace figac::phantom
