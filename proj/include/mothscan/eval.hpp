#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mothscan/raster.hpp"

namespace mothscan {

struct GroundTruthImage {
    std::string image_id;
    std::vector<Box> boxes;
    std::vector<std::optional<std::string>> labels;  // empty or one per box
};

struct ImagePredictions {
    std::string image_id;
    std::vector<Detection> detections;
};

struct MatchResult {
    /// One flag per prediction, in the (stable) descending-score order.
    std::vector<bool> tp;
    /// Index into the caller's prediction list for each flag.
    std::vector<std::size_t> order;
    std::size_t unmatched_gt = 0;
};

/// Stable sort of indices by descending score.
std::vector<std::size_t> score_order(const std::vector<Detection>& preds);

/// Each prediction, in descending-score order, claims the still-unmatched
/// ground-truth box with the highest IoU (lowest index on ties) if that IoU is
/// at least `iou_thresh`.
MatchResult match_greedy(const std::vector<Detection>& preds, const std::vector<Box>& gts, double iou_thresh);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

/// Cumulative (recall, precision) after each flag.
std::vector<PrPoint> pr_curve(const std::vector<bool>& flags, std::size_t n_gt);

/// All-point interpolated AP: area under the precision envelope. 0 when
/// there are no ground truths.
double average_precision(const std::vector<bool>& flags, std::size_t n_gt);

struct ThresholdResult {
    double iou = 0.0;
    double ap = 0.0;
    std::size_t true_positives = 0;
    std::vector<PrPoint> curve;
};

struct EvalReport {
    std::vector<ThresholdResult> per_threshold;  // in the requested order
    std::size_t total_ground_truths = 0;
    std::size_t total_predictions = 0;

    /// Throws std::out_of_range if `iou` was not evaluated.
    double ap_at(double iou) const;
};

/// Single-class evaluation: matching is per image, predictions are then
/// pooled across images by descending score (ties keep input order).
/// Throws ValidationError when a prediction names an unknown image_id.
EvalReport map_at(const std::vector<ImagePredictions>& preds, const std::vector<GroundTruthImage>& gts,
                  const std::vector<double>& thresholds);

/// Threshold key as written in reports, e.g. "0.50".
std::string threshold_key(double iou);

std::string eval_report_to_json(const EvalReport& report);
std::string pr_curves_to_csv(const EvalReport& report);

}  // namespace mothscan
