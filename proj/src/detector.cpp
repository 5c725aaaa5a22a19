#include "mothscan/detector.hpp"

#include <algorithm>

namespace mothscan {
namespace {

BinaryImage binarize(const GrayImage& response, const DetectorConfig& cfg) {
    switch (cfg.threshold_method) {
        case ThresholdMethod::global_mean:
            return threshold_global_mean(response);
        case ThresholdMethod::otsu:
            return threshold_otsu(response);
        case ThresholdMethod::local_gaussian:
            return threshold_local_gaussian(response, cfg.local_window, 0.0);
    }
    throw ParameterError("unknown threshold method");
}

BinaryImage cleanup(BinaryImage mask, const DetectorConfig& cfg) {
    if (cfg.morph_open_radius > 0) mask = open(mask, {SeShape::square, cfg.morph_open_radius});
    if (cfg.morph_close_radius > 0) mask = close(mask, {SeShape::square, cfg.morph_close_radius});
    return mask;
}

std::vector<Box> large_components(const BinaryImage& mask, int min_area) {
    std::vector<Box> boxes;
    for (const Component& c : connected_components(mask)) {
        if (c.area >= min_area) boxes.push_back(c.box);
    }
    return boxes;
}

}  // namespace

double box_score(const GrayImage& response, const Box& box, double max_response) {
    if (!(max_response > 0.0)) return 0.0;
    double sum = 0.0;
    for (int y = box.y; y < box.bottom(); ++y) {
        auto row = response.row(y).subspan(static_cast<std::size_t>(box.x), static_cast<std::size_t>(box.w));
        for (double v : row) sum += v;
    }
    const double score = sum / static_cast<double>(box.area()) / max_response;
    return std::clamp(score, 0.0, 1.0);
}

std::vector<Detection> recursive_split(const GrayImage& img, const Detection& det, const DetectorConfig& cfg,
                                       int depth) {
    if (depth >= cfg.max_recursion) return {det};
    const GrayImage patch = crop(img, det.box);
    const GrayImage response = high_pass(patch, cfg.blur_radius);
    const auto children = large_components(cleanup(binarize(response, cfg), cfg), cfg.min_area);
    if (static_cast<int>(children.size()) < cfg.split_min_children) return {det};

    std::vector<Detection> out;
    for (const Box& child : children) {
        Detection d = det;
        d.box = Box{det.box.x + child.x, det.box.y + child.y, child.w, child.h};
        auto refined = recursive_split(img, d, cfg, depth + 1);
        out.insert(out.end(), refined.begin(), refined.end());
    }
    return out;
}

std::vector<Detection> detect(const GrayImage& img, const DetectorConfig& cfg) {
    cfg.validate();
    const GrayImage response = high_pass(img, cfg.blur_radius);
    const double max_response = *std::max_element(response.pixels().begin(), response.pixels().end());
    if (!(max_response > 0.0)) return {};

    std::vector<Detection> candidates;
    for (const Box& box : large_components(cleanup(binarize(response, cfg), cfg), cfg.min_area)) {
        auto refined = recursive_split(img, Detection{box, 0.0, std::nullopt}, cfg, 0);
        candidates.insert(candidates.end(), refined.begin(), refined.end());
    }
    for (Detection& d : candidates) d.score = box_score(response, d.box, max_response);
    return nms(std::move(candidates), cfg.nms_iou);
}

}  // namespace mothscan
