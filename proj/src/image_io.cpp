#include "mothscan/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mothscan {
namespace {

constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

struct PngReadState {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
    auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (state->offset + count > state->bytes.size()) png_error(png, "truncated PNG stream");
    std::memcpy(out, state->bytes.data() + state->offset, count);
    state->offset += count;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t count) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + count);
}

void png_flush_noop(png_structp) {}

struct PngError {
    char message[256] = {};
};

void png_record_error(png_structp png, png_const_charp msg) {
    auto* err = static_cast<PngError*>(png_get_error_ptr(png));
    std::snprintf(err->message, sizeof err->message, "%s", msg);
    png_longjmp(png, 1);
}

void png_ignore_warning(png_structp, png_const_charp) {}

struct PngPixels {
    int width = 0;
    int height = 0;
    int channels = 0;
    int depth = 0;
    std::size_t rowbytes = 0;
    std::vector<std::uint8_t> buffer;
    std::vector<png_bytep> rows;
};

// libpng unwinds with longjmp. Everything with a destructor lives in the
// caller-owned `out`, so the jump never skips one.
bool png_decode_raw(PngReadState* state, PngPixels* out, PngError* err) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, err, png_record_error, png_ignore_warning);
    if (!png) {
        std::snprintf(err->message, sizeof err->message, "cannot allocate decoder");
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        return false;
    }
    png_set_read_fn(png, state, png_read_from_memory);
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    out->width = static_cast<int>(png_get_image_width(png, info));
    out->height = static_cast<int>(png_get_image_height(png, info));
    out->channels = png_get_channels(png, info);
    out->depth = png_get_bit_depth(png, info);
    out->rowbytes = png_get_rowbytes(png, info);
    out->buffer.resize(out->rowbytes * static_cast<std::size_t>(out->height));
    out->rows.resize(static_cast<std::size_t>(out->height));
    for (int y = 0; y < out->height; ++y) out->rows[static_cast<std::size_t>(y)] = out->buffer.data() + out->rowbytes * y;
    png_read_image(png, out->rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

AnyImage decode_png(std::span<const std::uint8_t> bytes) {
    PngReadState state{bytes, 0};
    PngPixels raw;
    PngError err;
    if (!png_decode_raw(&state, &raw, &err)) throw IoError(std::string("PNG: ") + err.message);

    const int width = raw.width;
    const int height = raw.height;
    const int depth = raw.depth;
    const auto& buffer = raw.buffer;
    const double scale = depth == 16 ? 255.0 / 65535.0 : 1.0;
    auto sample = [&](std::size_t index) -> double {
        if (depth == 16) {
            std::uint16_t v;
            std::memcpy(&v, buffer.data() + 2 * index, 2);
            return v * scale;
        }
        return buffer[index];
    };

    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    const std::size_t stride = raw.rowbytes / static_cast<std::size_t>(depth == 16 ? 2 : 1);
    if (raw.channels == 1) {
        std::vector<double> px(n);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) px[static_cast<std::size_t>(y) * width + x] = sample(y * stride + x);
        return GrayImage(width, height, std::move(px));
    }
    if (raw.channels == 3) {
        std::vector<Rgb> px(n);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const std::size_t base = y * stride + 3 * static_cast<std::size_t>(x);
                px[static_cast<std::size_t>(y) * width + x] = Rgb{sample(base), sample(base + 1), sample(base + 2)};
            }
        }
        return ColorImage(width, height, std::move(px));
    }
    throw IoError("PNG: unsupported channel layout");
}

// Reads one whitespace-delimited header token, skipping '#' comments.
class PnmHeaderReader {
public:
    explicit PnmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes), pos_(2) {}

    int next_int() {
        skip_space_and_comments();
        const std::size_t start = pos_;
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > (1L << 30)) throw IoError("PNM: header value too large");
            ++pos_;
        }
        if (pos_ == start) throw IoError("PNM: malformed header");
        return static_cast<int>(value);
    }

    // Exactly one whitespace byte separates the header from the samples.
    std::size_t data_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw IoError("PNM: malformed header");
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_;
};

AnyImage decode_pnm(std::span<const std::uint8_t> bytes) {
    const bool color = bytes[1] == '6';
    PnmHeaderReader header(bytes);
    const int width = header.next_int();
    const int height = header.next_int();
    const int maxval = header.next_int();
    const std::size_t offset = header.data_offset();
    if (width < 1 || height < 1) throw IoError("PNM: invalid dimensions");
    if (maxval < 1 || maxval > 65535) throw IoError("PNM: invalid maxval");

    const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
    const std::size_t channels = color ? 3 : 1;
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() < offset + n * channels * bytes_per_sample) throw IoError("PNM: truncated sample data");

    const double scale = 255.0 / maxval;
    auto sample = [&](std::size_t index) -> double {
        const std::uint8_t* p = bytes.data() + offset + index * bytes_per_sample;
        const unsigned v = bytes_per_sample == 2 ? (unsigned(p[0]) << 8 | p[1]) : p[0];
        return maxval == 255 ? double(v) : v * scale;
    };

    if (!color) {
        std::vector<double> px(n);
        for (std::size_t i = 0; i < n; ++i) px[i] = sample(i);
        return GrayImage(width, height, std::move(px));
    }
    std::vector<Rgb> px(n);
    for (std::size_t i = 0; i < n; ++i) px[i] = Rgb{sample(3 * i), sample(3 * i + 1), sample(3 * i + 2)};
    return ColorImage(width, height, std::move(px));
}

std::uint8_t to_byte(double v) noexcept {
    if (!(v > 0.0)) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v));
}

bool png_encode_raw(int width, int height, int color_type, const std::vector<std::uint8_t>* samples,
                    std::vector<std::uint8_t>* out, PngError* err) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, err, png_record_error, png_ignore_warning);
    if (!png) {
        std::snprintf(err->message, sizeof err->message, "cannot allocate encoder");
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, info ? &info : nullptr);
        return false;
    }
    png_set_write_fn(png, out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = samples->size() / static_cast<std::size_t>(height);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(samples->data() + stride * y));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

std::vector<std::uint8_t> encode_png_rows(int width, int height, int color_type,
                                          const std::vector<std::uint8_t>& samples) {
    std::vector<std::uint8_t> out;
    PngError err;
    if (!png_encode_raw(width, height, color_type, &samples, &out, &err)) {
        throw IoError(std::string("PNG: ") + err.message);
    }
    return out;
}

std::vector<std::uint8_t> pnm_header(char kind, int width, int height) {
    const std::string h = std::string("P") + kind + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    return {h.begin(), h.end()};
}

std::uint32_t read_u32_le(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

ImageFormat detect_format(std::span<const std::uint8_t> head) noexcept {
    if (head.size() >= 8 && std::equal(std::begin(kPngMagic), std::end(kPngMagic), head.begin())) {
        return ImageFormat::png;
    }
    if (head.size() >= 3 && head[0] == 'P' && std::isspace(head[2])) {
        if (head[1] == '5') return ImageFormat::pgm;
        if (head[1] == '6') return ImageFormat::ppm;
    }
    return ImageFormat::unknown;
}

AnyImage decode_image(std::span<const std::uint8_t> bytes) {
    switch (detect_format(bytes)) {
        case ImageFormat::png:
            return decode_png(bytes);
        case ImageFormat::pgm:
        case ImageFormat::ppm:
            return decode_pnm(bytes);
        case ImageFormat::unknown:
            break;
    }
    throw IoError("unrecognized image format");
}

AnyImage read_image(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_image(bytes);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

GrayImage as_gray(const AnyImage& img) {
    if (const auto* g = std::get_if<GrayImage>(&img)) return *g;
    return to_grayscale(std::get<ColorImage>(img));
}

ColorImage as_color(const AnyImage& img) {
    if (const auto* c = std::get_if<ColorImage>(&img)) return *c;
    const auto& g = std::get<GrayImage>(img);
    std::vector<Rgb> px;
    px.reserve(g.size());
    for (double v : g.pixels()) px.push_back(Rgb{v, v, v});
    return ColorImage(g.width(), g.height(), std::move(px));
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
    std::vector<std::uint8_t> samples;
    samples.reserve(img.size());
    for (double v : img.pixels()) samples.push_back(to_byte(v));
    return encode_png_rows(img.width(), img.height(), PNG_COLOR_TYPE_GRAY, samples);
}

std::vector<std::uint8_t> encode_png(const ColorImage& img) {
    std::vector<std::uint8_t> samples;
    samples.reserve(img.size() * 3);
    for (const Rgb& p : img.pixels()) {
        samples.push_back(to_byte(p.r));
        samples.push_back(to_byte(p.g));
        samples.push_back(to_byte(p.b));
    }
    return encode_png_rows(img.width(), img.height(), PNG_COLOR_TYPE_RGB, samples);
}

std::vector<std::uint8_t> encode_pnm(const GrayImage& img) {
    auto out = pnm_header('5', img.width(), img.height());
    for (double v : img.pixels()) out.push_back(to_byte(v));
    return out;
}

std::vector<std::uint8_t> encode_pnm(const ColorImage& img) {
    auto out = pnm_header('6', img.width(), img.height());
    for (const Rgb& p : img.pixels()) {
        out.push_back(to_byte(p.r));
        out.push_back(to_byte(p.g));
        out.push_back(to_byte(p.b));
    }
    return out;
}

void write_image(const std::filesystem::path& path, const AnyImage& img) {
    const auto ext = path.extension().string();
    const bool pnm = ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
    const auto bytes = std::visit([&](const auto& im) { return pnm ? encode_pnm(im) : encode_png(im); }, img);
    write_file_atomic(path, bytes);
}

GrayImage read_float_raster(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 8) throw IoError(path.string() + ": float raster shorter than its header");
    const std::uint32_t width = read_u32_le(bytes.data());
    const std::uint32_t height = read_u32_le(bytes.data() + 4);
    const std::uint64_t n = std::uint64_t(width) * height;
    if (width == 0 || height == 0 || width > (1u << 30) || height > (1u << 30)) {
        throw IoError(path.string() + ": invalid raster dimensions");
    }
    if (bytes.size() != 8 + 4 * n) {
        throw IoError(path.string() + ": expected " + std::to_string(8 + 4 * n) + " bytes, found " +
                      std::to_string(bytes.size()));
    }
    std::vector<double> px(n);
    for (std::size_t i = 0; i < n; ++i) {
        px[i] = std::bit_cast<float>(read_u32_le(bytes.data() + 8 + 4 * i));
    }
    GrayImage img(static_cast<int>(width), static_cast<int>(height), std::move(px));
    check_finite(img);
    return img;
}

void write_float_raster(const std::filesystem::path& path, const GrayImage& img) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + 4 * img.size());
    put_u32_le(out, static_cast<std::uint32_t>(img.width()));
    put_u32_le(out, static_cast<std::uint32_t>(img.height()));
    for (double v : img.pixels()) put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    write_file_atomic(path, out);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open file");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError(path.string() + ": read failed");
    return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".part";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp.string() + ": cannot open for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw IoError(tmp.string() + ": write failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError(path.string() + ": " + ec.message());
}

}  // namespace mothscan
