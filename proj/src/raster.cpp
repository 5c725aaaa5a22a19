#include "mothscan/raster.hpp"

#include <algorithm>
#include <cmath>

namespace mothscan {

void check_finite(const GrayImage& img) {
    for (double v : img.pixels()) {
        if (!std::isfinite(v)) throw ValidationError("image contains a non-finite pixel");
    }
}

void check_finite(const ColorImage& img) {
    for (const Rgb& p : img.pixels()) {
        if (!std::isfinite(p.r) || !std::isfinite(p.g) || !std::isfinite(p.b)) {
            throw ValidationError("image contains a non-finite pixel");
        }
    }
}

std::string to_string(const Box& b) {
    return "(" + std::to_string(b.x) + ", " + std::to_string(b.y) + ", " + std::to_string(b.w) + ", " +
           std::to_string(b.h) + ")";
}

GrayImage to_grayscale(const ColorImage& img) {
    std::vector<double> out;
    out.reserve(img.size());
    for (const Rgb& p : img.pixels()) {
        const double luma = 0.299 * p.r + 0.587 * p.g + 0.114 * p.b;
        // Rounding can push luma a hair past the channel range.
        out.push_back(std::clamp(luma, std::min({p.r, p.g, p.b}), std::max({p.r, p.g, p.b})));
    }
    return GrayImage(img.width(), img.height(), std::move(out));
}

std::int64_t intersection_area(const Box& a, const Box& b) noexcept {
    const std::int64_t iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const std::int64_t ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    if (iw <= 0 || ih <= 0) return 0;
    return iw * ih;
}

double iou(const Box& a, const Box& b) noexcept {
    const std::int64_t inter = intersection_area(a, b);
    const std::int64_t uni = a.area() + b.area() - inter;
    if (uni <= 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

Box expand_clamped(const Box& box, int margin, int width, int height) noexcept {
    const int x0 = std::max(0, box.x - margin);
    const int y0 = std::max(0, box.y - margin);
    const int x1 = std::min(width, box.right() + margin);
    const int y1 = std::min(height, box.bottom() + margin);
    return Box{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace mothscan
