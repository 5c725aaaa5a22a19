#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mothscan/raster.hpp"

namespace mothscan {

enum class ThresholdMethod { global_mean, otsu, local_gaussian };

std::string_view to_string(ThresholdMethod m) noexcept;
ThresholdMethod parse_threshold_method(std::string_view name);

/// Tunables of the blob detector. Radii of 0 for the morphology stages skip
/// that stage.
struct DetectorConfig {
    int blur_radius = 15;
    ThresholdMethod threshold_method = ThresholdMethod::global_mean;
    int local_window = 31;
    int morph_open_radius = 1;
    int morph_close_radius = 3;
    int min_area = 50;
    int max_recursion = 2;
    int split_min_children = 2;
    double nms_iou = 0.3;

    /// Throws ParameterError naming the first violated constraint.
    void validate() const;

    friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

/// JSON document with exactly the DetectorConfig field names. Missing fields
/// keep their defaults; unknown fields and type mismatches throw ParseError.
DetectorConfig config_from_json(std::string_view text);
std::string config_to_json(const DetectorConfig& cfg);

enum class SeShape { square, disk };

struct StructuringElement {
    SeShape shape = SeShape::square;
    int radius = 1;
};

// ---- pre-processing -------------------------------------------------------

/// Mean over the (2r+1)^2 window with replicated borders.
GrayImage low_pass(const GrayImage& img, int radius);

/// |img - low_pass(img, radius)|.
GrayImage high_pass(const GrayImage& img, int radius);

// ---- binarization ---------------------------------------------------------

/// Foreground iff value > mean of all pixels.
BinaryImage threshold_global_mean(const GrayImage& img);

/// Histogram bin of a sample for the 256-bin Otsu histogram: floor(v) clamped
/// to [0, 255].
int otsu_bin(double value) noexcept;

/// Otsu threshold over the 256-bin histogram, as a bin index. Foreground is
/// every pixel whose bin is strictly above it. Candidates whose variance is
/// within a relative 1e-12 of the maximum count as ties, resolved to the
/// lowest bin. Returns -1 when no candidate leaves both classes non-empty
/// (constant images), meaning everything is background.
int otsu_threshold_bin(const GrayImage& img);
BinaryImage threshold_otsu(const GrayImage& img);

/// Foreground iff value > (Gaussian-weighted local mean) - offset, with
/// sigma = window / 6 and replicated borders. `window` must be odd and >= 3.
BinaryImage threshold_local_gaussian(const GrayImage& img, int window, double offset);

// ---- morphology -----------------------------------------------------------
// Pixels outside the image are background.

BinaryImage erode(const BinaryImage& b, const StructuringElement& se);
BinaryImage dilate(const BinaryImage& b, const StructuringElement& se);
BinaryImage open(const BinaryImage& b, const StructuringElement& se);
BinaryImage close(const BinaryImage& b, const StructuringElement& se);

/// Half-width of the disk structuring element's row at vertical offset dy.
int disk_half_width(int radius, int dy) noexcept;

// ---- components -----------------------------------------------------------

struct Component {
    Box box;
    std::int64_t area = 0;

    friend bool operator==(const Component&, const Component&) = default;
};

/// 8-connected components, sorted by (y, x, w, h, area) of the bounding box.
std::vector<Component> connected_components(const BinaryImage& b);

// ---- suppression ----------------------------------------------------------

/// Greedy NMS. Output sorted by descending score, ties by (y, x, w, h).
std::vector<Detection> nms(std::vector<Detection> dets, double iou_thresh);

// ---- pipeline -------------------------------------------------------------

/// High-pass, binarize, open, close, components, area filter, recursive
/// split, NMS. Deterministic; empty for blank images.
std::vector<Detection> detect(const GrayImage& img, const DetectorConfig& cfg);

/// Re-runs pre-processing, binarization and component extraction on the crop
/// under `det.box`. When at least split_min_children components of area >=
/// min_area come out, they replace `det` and are split again at depth + 1.
std::vector<Detection> recursive_split(const GrayImage& img, const Detection& det, const DetectorConfig& cfg,
                                       int depth);

/// Mean high-pass response inside `box` divided by the image's maximum
/// response `max_response`; 0 when the maximum is 0.
double box_score(const GrayImage& response, const Box& box, double max_response);

}  // namespace mothscan
