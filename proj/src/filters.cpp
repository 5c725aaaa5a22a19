#include "mothscan/detector.hpp"
#include "mothscan/detail/filters.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace mothscan {
namespace detail {

void box_mean_rows(const GrayImage& img, int radius, const std::function<void(int, std::span<const double>)>& sink) {
    if (radius < 1) throw ParameterError("blur radius must be >= 1, got " + std::to_string(radius));
    const int w = img.width();
    const int h = img.height();
    const double count = static_cast<double>(2 * radius + 1) * (2 * radius + 1);
    auto clamp_y = [h](int y) { return std::clamp(y, 0, h - 1); };

    // colsum[x] holds the sum over rows y-r..y+r (replicated) of column x;
    // padded by r on each side so the horizontal window never needs clamping.
    std::vector<double> colsum(static_cast<std::size_t>(w));
    std::vector<double> padded(static_cast<std::size_t>(w + 2 * radius));
    std::vector<double> out(static_cast<std::size_t>(w));

    for (int dy = -radius; dy <= radius; ++dy) {
        auto src = img.row(clamp_y(dy));
        for (int x = 0; x < w; ++x) colsum[x] += src[x];
    }

    for (int y = 0; y < h; ++y) {
        if (y > 0) {
            auto add = img.row(clamp_y(y + radius));
            auto sub = img.row(clamp_y(y - radius - 1));
            for (int x = 0; x < w; ++x) colsum[x] += add[x] - sub[x];
        }
        std::fill(padded.begin(), padded.begin() + radius, colsum.front());
        std::copy(colsum.begin(), colsum.end(), padded.begin() + radius);
        std::fill(padded.begin() + radius + w, padded.end(), colsum.back());

        double acc = 0.0;
        for (int i = 0; i <= 2 * radius; ++i) acc += padded[i];
        out[0] = acc / count;
        for (int x = 1; x < w; ++x) {
            acc += padded[x + 2 * radius] - padded[x - 1];
            out[x] = acc / count;
        }
        sink(y, out);
    }
}

GrayImage local_gaussian_mean(const GrayImage& img, int window) {
    if (window < 3 || window % 2 == 0) {
        throw ParameterError("local window must be odd and >= 3, got " + std::to_string(window));
    }
    const int half = window / 2;
    const double sigma = window / 6.0;
    std::vector<double> kernel(static_cast<std::size_t>(window));
    double total = 0.0;
    for (int d = -half; d <= half; ++d) {
        kernel[d + half] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        total += kernel[d + half];
    }
    for (double& k : kernel) k /= total;

    const int w = img.width();
    const int h = img.height();
    // Weighted sums of differences from the centre sample; since the kernel
    // sums to 1 this is the weighted mean, and flat regions come out exact.
    GrayImage vertical(w, h);
    for (int y = 0; y < h; ++y) {
        auto centre = img.row(y);
        auto dst = vertical.row(y);
        for (int d = -half; d <= half; ++d) {
            if (d == 0) continue;
            auto src = img.row(std::clamp(y + d, 0, h - 1));
            const double k = kernel[d + half];
            for (int x = 0; x < w; ++x) dst[x] += k * (src[x] - centre[x]);
        }
        for (int x = 0; x < w; ++x) dst[x] += centre[x];
    }
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        auto src = vertical.row(y);
        auto dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int d = -half; d <= half; ++d) acc += kernel[d + half] * (src[std::clamp(x + d, 0, w - 1)] - src[x]);
            dst[x] = src[x] + acc;
        }
    }
    return out;
}

// Offsets from the minimum keep the mean of a flat image exact.
double image_mean(const GrayImage& img) noexcept {
    const double lo = *std::min_element(img.pixels().begin(), img.pixels().end());
    double sum = 0.0;
    for (double v : img.pixels()) sum += v - lo;
    return lo + sum / static_cast<double>(img.size());
}

}  // namespace detail

GrayImage low_pass(const GrayImage& img, int radius) {
    GrayImage out(img.width(), img.height());
    detail::box_mean_rows(img, radius, [&](int y, std::span<const double> mean) {
        std::copy(mean.begin(), mean.end(), out.row(y).begin());
    });
    return out;
}

GrayImage high_pass(const GrayImage& img, int radius) {
    GrayImage out(img.width(), img.height());
    detail::box_mean_rows(img, radius, [&](int y, std::span<const double> mean) {
        auto src = img.row(y);
        auto dst = out.row(y);
        for (std::size_t x = 0; x < mean.size(); ++x) dst[x] = std::abs(src[x] - mean[x]);
    });
    return out;
}

BinaryImage threshold_global_mean(const GrayImage& img) {
    const double mean = detail::image_mean(img);
    BinaryImage out(img.width(), img.height());
    auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > mean ? 1 : 0;
    return out;
}

int otsu_bin(double value) noexcept {
    if (!(value >= 0.0)) return 0;
    if (value >= 255.0) return 255;
    return static_cast<int>(value);
}

int otsu_threshold_bin(const GrayImage& img) {
    std::array<std::int64_t, 256> hist{};
    for (double v : img.pixels()) ++hist[otsu_bin(v)];

    const double total = static_cast<double>(img.size());
    double total_sum = 0.0;
    for (int b = 0; b < 256; ++b) total_sum += static_cast<double>(b) * hist[b];

    std::array<double, 256> variance{};
    std::array<bool, 256> defined{};
    double best = -1.0;
    std::int64_t n0 = 0;
    double s0 = 0.0;
    for (int t = 0; t < 255; ++t) {
        n0 += hist[t];
        s0 += static_cast<double>(t) * hist[t];
        const double n1 = total - static_cast<double>(n0);
        if (n0 == 0 || n1 == 0) continue;
        const double mu0 = s0 / static_cast<double>(n0);
        const double mu1 = (total_sum - s0) / n1;
        variance[t] = static_cast<double>(n0) * n1 * (mu0 - mu1) * (mu0 - mu1) / (total * total);
        defined[t] = true;
        best = std::max(best, variance[t]);
    }
    if (best < 0.0) return -1;
    for (int t = 0; t < 255; ++t) {
        if (defined[t] && variance[t] >= best * (1.0 - 1e-12)) return t;
    }
    return -1;
}

BinaryImage threshold_otsu(const GrayImage& img) {
    const int t = otsu_threshold_bin(img);
    BinaryImage out(img.width(), img.height());
    if (t < 0) return out;
    auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = otsu_bin(src[i]) > t ? 1 : 0;
    return out;
}

BinaryImage threshold_local_gaussian(const GrayImage& img, int window, double offset) {
    const GrayImage mean = detail::local_gaussian_mean(img, window);
    BinaryImage out(img.width(), img.height());
    auto src = img.pixels();
    auto ref = mean.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > ref[i] - offset ? 1 : 0;
    return out;
}

}  // namespace mothscan
