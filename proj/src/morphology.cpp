#include "mothscan/detector.hpp"

#include <cmath>

namespace mothscan {
namespace {

enum class Op { erode, dilate };

// dst[x] = erode: every pixel of src[x-a .. x+a] is set and inside the row;
//          dilate: any pixel of that window is set.
void row_window(std::span<const std::uint8_t> src, std::span<std::uint8_t> dst, int a, Op op) {
    const int w = static_cast<int>(src.size());
    int count = 0;
    for (int x = 0; x <= std::min(a, w - 1); ++x) count += src[x];
    for (int x = 0; x < w; ++x) {
        if (x > 0) {
            if (x + a < w) count += src[x + a];
            if (x - a - 1 >= 0) count -= src[x - a - 1];
        }
        dst[x] = op == Op::erode ? (count == 2 * a + 1 ? 1 : 0) : (count > 0 ? 1 : 0);
    }
}

BinaryImage square_morph(const BinaryImage& b, int r, Op op) {
    const int w = b.width();
    const int h = b.height();
    BinaryImage rows(w, h);
    for (int y = 0; y < h; ++y) row_window(b.row(y), rows.row(y), r, op);

    BinaryImage out(w, h);
    std::vector<int> count(static_cast<std::size_t>(w), 0);
    for (int y = 0; y <= std::min(r, h - 1); ++y) {
        auto src = rows.row(y);
        for (int x = 0; x < w; ++x) count[x] += src[x];
    }
    for (int y = 0; y < h; ++y) {
        if (y > 0) {
            if (y + r < h) {
                auto add = rows.row(y + r);
                for (int x = 0; x < w; ++x) count[x] += add[x];
            }
            if (y - r - 1 >= 0) {
                auto sub = rows.row(y - r - 1);
                for (int x = 0; x < w; ++x) count[x] -= sub[x];
            }
        }
        auto dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            dst[x] = op == Op::erode ? (count[x] == 2 * r + 1 ? 1 : 0) : (count[x] > 0 ? 1 : 0);
        }
    }
    return out;
}

BinaryImage disk_morph(const BinaryImage& b, int r, Op op) {
    const int w = b.width();
    const int h = b.height();
    BinaryImage out(w, h, op == Op::erode ? 1 : 0);
    std::vector<std::uint8_t> scratch(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        auto dst = out.row(y);
        for (int dy = -r; dy <= r; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= h) {
                if (op == Op::erode) std::fill(dst.begin(), dst.end(), 0);
                continue;
            }
            row_window(b.row(yy), scratch, disk_half_width(r, dy), op);
            for (int x = 0; x < w; ++x) {
                dst[x] = op == Op::erode ? (dst[x] & scratch[x]) : (dst[x] | scratch[x]);
            }
        }
    }
    return out;
}

BinaryImage morph(const BinaryImage& b, const StructuringElement& se, Op op) {
    if (se.radius < 1) throw ParameterError("structuring element radius must be >= 1");
    return se.shape == SeShape::square ? square_morph(b, se.radius, op) : disk_morph(b, se.radius, op);
}

}  // namespace

int disk_half_width(int radius, int dy) noexcept {
    const int rem = radius * radius - dy * dy;
    if (rem < 0) return -1;
    int a = static_cast<int>(std::sqrt(static_cast<double>(rem)));
    while ((a + 1) * (a + 1) <= rem) ++a;
    while (a * a > rem) --a;
    return a;
}

BinaryImage erode(const BinaryImage& b, const StructuringElement& se) { return morph(b, se, Op::erode); }

BinaryImage dilate(const BinaryImage& b, const StructuringElement& se) { return morph(b, se, Op::dilate); }

BinaryImage open(const BinaryImage& b, const StructuringElement& se) { return dilate(erode(b, se), se); }

BinaryImage close(const BinaryImage& b, const StructuringElement& se) { return erode(dilate(b, se), se); }

}  // namespace mothscan
