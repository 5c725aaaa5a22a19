#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mothscan/errors.hpp"

namespace mothscan {

struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major pixel grid. Dimensions are fixed at construction; the pixel
/// buffer is owned by value so copies are deep and sharing is safe.
template <typename Pixel>
class Raster {
public:
    using value_type = Pixel;

    Raster() = default;

    /// Filled with `fill`.
    Raster(int width, int height, Pixel fill = Pixel{}) : width_(width), height_(height) {
        check_dims(width, height);
        pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    Raster(int width, int height, std::vector<Pixel> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        check_dims(width, height);
        if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
            throw ShapeError("pixel count " + std::to_string(pixels_.size()) + " does not match " +
                             std::to_string(width) + "x" + std::to_string(height));
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    const Pixel& at(int x, int y) const noexcept {
        return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
    }
    Pixel& at(int x, int y) noexcept {
        return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
    }

    std::span<const Pixel> pixels() const noexcept { return pixels_; }
    std::span<Pixel> pixels() noexcept { return pixels_; }

    std::span<const Pixel> row(int y) const noexcept {
        return std::span<const Pixel>(pixels_).subspan(static_cast<std::size_t>(y) * static_cast<std::size_t>(width_),
                                                       static_cast<std::size_t>(width_));
    }
    std::span<Pixel> row(int y) noexcept {
        return std::span<Pixel>(pixels_).subspan(static_cast<std::size_t>(y) * static_cast<std::size_t>(width_),
                                                 static_cast<std::size_t>(width_));
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    static void check_dims(int width, int height) {
        if (width < 1 || height < 1) {
            throw ShapeError("image dimensions must be positive, got " + std::to_string(width) + "x" +
                             std::to_string(height));
        }
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<Pixel> pixels_;
};

using GrayImage = Raster<double>;
using ColorImage = Raster<Rgb>;
/// Foreground is 1, background 0. Bytes rather than vector<bool> so rows can
/// be scanned without bit unpacking.
using BinaryImage = Raster<std::uint8_t>;

/// Throws ValidationError if any pixel is NaN or infinite.
void check_finite(const GrayImage& img);
void check_finite(const ColorImage& img);

/// Axis-aligned rectangle in integer pixel units. Covers columns x..x+w-1 and
/// rows y..y+h-1, so area is exactly w*h.
struct Box {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    std::int64_t area() const noexcept { return static_cast<std::int64_t>(w) * h; }
    int right() const noexcept { return x + w; }
    int bottom() const noexcept { return y + h; }

    bool valid() const noexcept { return w >= 1 && h >= 1 && x >= 0 && y >= 0; }
    bool fits(int width, int height) const noexcept {
        return valid() && right() <= width && bottom() <= height;
    }

    friend bool operator==(const Box&, const Box&) = default;
};

std::string to_string(const Box& b);

struct Detection {
    Box box;
    double score = 0.0;
    std::optional<std::string> label;

    friend bool operator==(const Detection&, const Detection&) = default;
};

GrayImage to_grayscale(const ColorImage& img);

/// Pixel (i, j) of the result is pixel (box.x + i, box.y + j) of the input.
/// Throws BoundsError when the box does not fit.
template <typename Pixel>
Raster<Pixel> crop(const Raster<Pixel>& img, const Box& box) {
    if (!box.fits(img.width(), img.height())) {
        throw BoundsError("crop box " + to_string(box) + " outside " + std::to_string(img.width()) + "x" +
                          std::to_string(img.height()) + " image");
    }
    std::vector<Pixel> out;
    out.reserve(static_cast<std::size_t>(box.area()));
    for (int j = 0; j < box.h; ++j) {
        auto src = img.row(box.y + j).subspan(static_cast<std::size_t>(box.x), static_cast<std::size_t>(box.w));
        out.insert(out.end(), src.begin(), src.end());
    }
    return Raster<Pixel>(box.w, box.h, std::move(out));
}

/// Intersection over union with pixel-area semantics. Returns 0 when the
/// union is empty (only possible for invalid boxes).
double iou(const Box& a, const Box& b) noexcept;

/// Area of the overlap of two boxes, 0 when disjoint.
std::int64_t intersection_area(const Box& a, const Box& b) noexcept;

/// Grows `box` by `margin` on every side, clamped to the image.
Box expand_clamped(const Box& box, int margin, int width, int height) noexcept;

}  // namespace mothscan
