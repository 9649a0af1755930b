#include "figac/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <png.h>

namespace figac::io {

namespace {

struct ReadCursor {
    const std::string* bytes;
    std::size_t pos = 0;
};

void read_callback(png_structp png, png_bytep out, png_size_t n)
{
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + n > cur->bytes->size())
        png_error(png, "truncated PNG data");
    std::memcpy(out, cur->bytes->data() + cur->pos, n);
    cur->pos += n;
}

void write_callback(png_structp png, png_bytep data, png_size_t n)
{
    static_cast<std::string*>(png_get_io_ptr(png))->append(reinterpret_cast<const char*>(data), n);
}

void flush_callback(png_structp) {}

[[noreturn]] void error_callback(png_structp png, png_const_charp msg)
{
    *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
    png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

std::string encode(int width, int height, int color_type, int bit_depth, const std::vector<png_bytep>& rows)
{
    std::string out;
    std::string message;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, error_callback, warning_callback);
    if (!png)
        throw IoError("cannot allocate PNG writer");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("cannot allocate PNG writer");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encoding failed: " + message);
    }
    png_set_write_fn(png, &out, write_callback, flush_callback);
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16 && std::endian::native == std::endian::little)
        png_set_swap(png);
    png_write_image(png, const_cast<png_bytepp>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

}  // namespace

GrayImage decode_png(const std::string& bytes)
{
    if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
        throw IoError("not a PNG image");

    std::string message;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, error_callback, warning_callback);
    if (!png)
        throw IoError("cannot allocate PNG reader");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("cannot allocate PNG reader");
    }
    ReadCursor cursor{&bytes, 0};
    GrayImage out;
    std::vector<std::uint8_t> buffer;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("PNG decoding failed: " + message);
    }
    png_set_read_fn(png, &cursor, read_callback);
    png_read_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_strip_alpha(png);
    if (depth == 16 && std::endian::native == std::endian::little)
        png_set_swap(png);
    png_read_update_info(png, info);

    depth = png_get_bit_depth(png, info);
    const int channels = png_get_channels(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    buffer.resize(rowbytes * height);
    rows.resize(height);
    for (int r = 0; r < height; ++r)
        rows[r] = buffer.data() + rowbytes * r;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    out.bit_depth = depth;
    out.samples = Grid<std::uint16_t>(width, height);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double v[3] = {0, 0, 0};
            for (int k = 0; k < channels; ++k) {
                const std::size_t at = static_cast<std::size_t>(c) * channels + k;
                if (depth == 16) {
                    std::uint16_t s;
                    std::memcpy(&s, rows[r] + 2 * at, 2);
                    v[k] = s;
                }
                else {
                    v[k] = rows[r][at];
                }
            }
            const double lum = channels >= 3 ? 0.299 * v[0] + 0.587 * v[1] + 0.114 * v[2] : v[0];
            out.samples(r, c) = static_cast<std::uint16_t>(std::lround(lum));
        }
    }
    return out;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("cannot write " + path.string());
}

GrayImage read_png(const std::filesystem::path& path)
{
    try {
        return decode_png(read_file(path));
    }
    catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

std::string encode_png(const Grid<std::uint8_t>& gray)
{
    std::vector<png_bytep> rows(gray.height());
    auto* base = const_cast<std::uint8_t*>(gray.values().data());
    for (int r = 0; r < gray.height(); ++r)
        rows[r] = base + static_cast<std::size_t>(r) * gray.width();
    return encode(gray.width(), gray.height(), PNG_COLOR_TYPE_GRAY, 8, rows);
}

std::string encode_png(const Grid<std::uint16_t>& gray)
{
    std::vector<png_bytep> rows(gray.height());
    auto* base = reinterpret_cast<png_bytep>(const_cast<std::uint16_t*>(gray.values().data()));
    for (int r = 0; r < gray.height(); ++r)
        rows[r] = base + static_cast<std::size_t>(r) * gray.width() * 2;
    return encode(gray.width(), gray.height(), PNG_COLOR_TYPE_GRAY, 16, rows);
}

std::string encode_png(const RgbImage& image)
{
    if (image.rgb.size() != static_cast<std::size_t>(image.width) * image.height * 3)
        throw ParameterError("RGB buffer does not match its dimensions");
    std::vector<png_bytep> rows(image.height);
    auto* base = const_cast<std::uint8_t*>(image.rgb.data());
    for (int r = 0; r < image.height; ++r)
        rows[r] = base + static_cast<std::size_t>(r) * image.width * 3;
    return encode(image.width, image.height, PNG_COLOR_TYPE_RGB, 8, rows);
}

pipeline::InputImage to_input(const GrayImage& png, const nlohmann::json& sidecar)
{
    const auto& s = png.samples;
    if (png.bit_depth == 8) {
        std::vector<double> data(s.values().begin(), s.values().end());
        return ScalarField(s.width(), s.height(), std::move(data));
    }
    if (!sidecar.is_object() || !sidecar.contains("hu_offset") || !sidecar["hu_offset"].is_number())
        throw IoError("16-bit images need a description with a numeric hu_offset");
    const double offset = sidecar["hu_offset"].get<double>();
    double spacing = 1.0;
    if (sidecar.contains("pixel_spacing")) {
        if (!sidecar["pixel_spacing"].is_number())
            throw IoError("pixel_spacing must be a number");
        spacing = sidecar["pixel_spacing"].get<double>();
    }
    std::vector<double> data;
    data.reserve(s.size());
    for (std::uint16_t v : s.values())
        data.push_back(v + offset);
    return CtSlice::ingest(ScalarField(s.width(), s.height(), std::move(data)), spacing);
}

pipeline::InputImage load_slice(const std::filesystem::path& path)
{
    const GrayImage png = read_png(path);
    nlohmann::json sidecar;
    if (png.bit_depth == 16) {
        std::filesystem::path side = path;
        side.replace_extension(".json");
        if (!std::filesystem::exists(side))
            throw IoError(path.string() + ": 16-bit image without description file " + side.string());
        sidecar = nlohmann::json::parse(read_file(side), nullptr, false);
        if (sidecar.is_discarded())
            throw IoError(side.string() + " is not valid JSON");
    }
    return to_input(png, sidecar);
}

Mask to_mask(const GrayImage& png)
{
    Mask m(png.samples.width(), png.samples.height(), 0);
    auto in = png.samples.values();
    auto out = m.values();
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = in[i] != 0;
    return m;
}

Mask read_mask(const std::filesystem::path& path) { return to_mask(read_png(path)); }

Grid<std::uint8_t> mask_image(const Mask& mask)
{
    Grid<std::uint8_t> out(mask.width(), mask.height(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i)
        out.values()[i] = mask.values()[i] ? 255 : 0;
    return out;
}

Grid<std::uint8_t> gray_image(const ScalarField& f)
{
    Grid<std::uint8_t> out(f.width(), f.height(), 0);
    for (std::size_t i = 0; i < f.size(); ++i)
        out.values()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(f.values()[i]), 0L, 255L));
    return out;
}

Grid<std::uint8_t> rescaled_image(const ScalarField& f)
{
    const double lo = f.min();
    const double hi = f.max();
    Grid<std::uint8_t> out(f.width(), f.height(), 0);
    if (hi <= lo)
        return out;
    for (std::size_t i = 0; i < f.size(); ++i)
        out.values()[i] = static_cast<std::uint8_t>(std::lround(255.0 * (f.values()[i] - lo) / (hi - lo)));
    return out;
}

RgbImage overlay(const ScalarField& gray, const std::vector<levelset::Polyline>& contour)
{
    const Grid<std::uint8_t> base = gray_image(gray);
    RgbImage out{gray.width(), gray.height(), {}};
    out.rgb.reserve(base.size() * 3);
    for (std::uint8_t v : base.values())
        out.rgb.insert(out.rgb.end(), {v, v, v});
    auto plot = [&](double r, double c) {
        const int ri = static_cast<int>(std::lround(r));
        const int ci = static_cast<int>(std::lround(c));
        if (!gray.contains(ri, ci))
            return;
        const std::size_t at = (static_cast<std::size_t>(ri) * out.width + ci) * 3;
        out.rgb[at] = 255;
        out.rgb[at + 1] = 0;
        out.rgb[at + 2] = 0;
    };
    for (const auto& line : contour) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            plot(line[i].row, line[i].col);
            if (i == 0)
                continue;
            const auto& a = line[i - 1];
            const auto& b = line[i];
            const int steps = static_cast<int>(std::ceil(4.0 * std::hypot(b.row - a.row, b.col - a.col)));
            for (int k = 1; k < steps; ++k) {
                const double t = static_cast<double>(k) / steps;
                plot(a.row + t * (b.row - a.row), a.col + t * (b.col - a.col));
            }
        }
    }
    return out;
}

void write_pfm(const std::filesystem::path& path, const ScalarField& f)
{
    std::string out = "Pf\n" + std::to_string(f.width()) + " " + std::to_string(f.height()) + "\n-1.0\n";
    for (int r = f.height() - 1; r >= 0; --r) {
        for (int c = 0; c < f.width(); ++c) {
            const float v = static_cast<float>(f(r, c));
            std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
            for (int k = 0; k < 4; ++k)
                out.push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
        }
    }
    write_file(path, out);
}

ScalarField read_pfm(const std::filesystem::path& path)
{
    const std::string bytes = read_file(path);
    std::istringstream in(bytes);
    std::string magic;
    int width = 0, height = 0;
    double scale = 0.0;
    in >> magic >> width >> height >> scale;
    if (magic != "Pf" || width < 1 || height < 1 || scale >= 0.0)
        throw IoError(path.string() + ": unsupported PFM (expected little-endian single channel)");
    in.get();
    const std::size_t offset = static_cast<std::size_t>(in.tellg());
    if (bytes.size() < offset + static_cast<std::size_t>(width) * height * 4)
        throw IoError(path.string() + ": truncated PFM");
    ScalarField f(width, height);
    std::size_t at = offset;
    for (int r = height - 1; r >= 0; --r) {
        for (int c = 0; c < width; ++c) {
            std::uint32_t bits = 0;
            for (int k = 0; k < 4; ++k)
                bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at++])) << (8 * k);
            f(r, c) = std::bit_cast<float>(bits);
        }
    }
    return f;
}

namespace {
constexpr char kRasterMagic[8] = {'F', 'I', 'G', 'A', 'C', 'F', '6', '4'};
}

std::string encode_raster(const ScalarField& f)
{
    std::string out(kRasterMagic, sizeof kRasterMagic);
    auto put32 = [&](std::uint32_t v) {
        for (int k = 0; k < 4; ++k)
            out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
    };
    put32(static_cast<std::uint32_t>(f.width()));
    put32(static_cast<std::uint32_t>(f.height()));
    for (double v : f.values()) {
        const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        for (int k = 0; k < 8; ++k)
            out.push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
    }
    return out;
}

ScalarField decode_raster(const std::string& bytes)
{
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kRasterMagic, 8) != 0)
        throw IoError("not a level-set raster");
    auto get = [&](std::size_t at, int n) {
        std::uint64_t v = 0;
        for (int k = 0; k < n; ++k)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + k])) << (8 * k);
        return v;
    };
    const int width = static_cast<int>(get(8, 4));
    const int height = static_cast<int>(get(12, 4));
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (bytes.size() != 16 + 8 * n)
        throw IoError("level-set raster has the wrong length");
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i)
        data[i] = std::bit_cast<double>(get(16 + 8 * i, 8));
    return ScalarField(width, height, std::move(data));
}

}  // namespace figac::io
