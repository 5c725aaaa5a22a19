#pragma once

#include <functional>
#include <span>

#include "mothscan/raster.hpp"

namespace mothscan::detail {

/// Streams the (2r+1)^2 replicated-border box mean one row at a time, so
/// callers can fuse it with a per-pixel step without a full-size temporary.
void box_mean_rows(const GrayImage& img, int radius, const std::function<void(int, std::span<const double>)>& sink);

/// Gaussian-weighted mean over a window x window neighbourhood,
/// sigma = window / 6, replicated borders, weights normalized to 1.
GrayImage local_gaussian_mean(const GrayImage& img, int window);

double image_mean(const GrayImage& img) noexcept;

}  // namespace mothscan::detail
