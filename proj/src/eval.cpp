#include "mothscan/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace mothscan {

std::vector<std::size_t> score_order(const std::vector<Detection>& preds) {
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
    return order;
}

MatchResult match_greedy(const std::vector<Detection>& preds, const std::vector<Box>& gts, double iou_thresh) {
    MatchResult result;
    result.order = score_order(preds);
    result.tp.reserve(preds.size());
    std::vector<bool> taken(gts.size(), false);
    std::size_t matched = 0;
    for (std::size_t idx : result.order) {
        double best = -1.0;
        std::size_t best_gt = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) continue;
            const double v = iou(preds[idx].box, gts[g]);
            if (v > best) {
                best = v;
                best_gt = g;
            }
        }
        const bool hit = best_gt < gts.size() && best >= iou_thresh;
        if (hit) {
            taken[best_gt] = true;
            ++matched;
        }
        result.tp.push_back(hit);
    }
    result.unmatched_gt = gts.size() - matched;
    return result;
}

std::vector<PrPoint> pr_curve(const std::vector<bool>& flags, std::size_t n_gt) {
    std::vector<PrPoint> curve;
    curve.reserve(flags.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i]) ++tp;
        const double recall = n_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(n_gt);
        curve.push_back(PrPoint{recall, static_cast<double>(tp) / static_cast<double>(i + 1)});
    }
    return curve;
}

double average_precision(const std::vector<bool>& flags, std::size_t n_gt) {
    if (n_gt == 0 || flags.empty()) return 0.0;
    const auto curve = pr_curve(flags, n_gt);
    std::vector<double> envelope(curve.size());
    double running = 0.0;
    for (std::size_t i = curve.size(); i-- > 0;) {
        running = std::max(running, curve[i].precision);
        envelope[i] = running;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        ap += (curve[i].recall - prev_recall) * envelope[i];
        prev_recall = curve[i].recall;
    }
    return std::clamp(ap, 0.0, 1.0);
}

double EvalReport::ap_at(double iou) const {
    for (const auto& t : per_threshold) {
        if (std::abs(t.iou - iou) < 1e-12) return t.ap;
    }
    throw std::out_of_range("IoU threshold " + threshold_key(iou) + " was not evaluated");
}

EvalReport map_at(const std::vector<ImagePredictions>& preds, const std::vector<GroundTruthImage>& gts,
                  const std::vector<double>& thresholds) {
    std::unordered_map<std::string, std::size_t> gt_index;
    EvalReport report;
    for (std::size_t i = 0; i < gts.size(); ++i) {
        if (!gt_index.emplace(gts[i].image_id, i).second) {
            throw ValidationError("duplicate ground-truth image_id \"" + gts[i].image_id + "\"");
        }
        report.total_ground_truths += gts[i].boxes.size();
    }

    // Merge prediction records per image, keeping first-appearance order.
    std::vector<std::size_t> image_of;
    std::vector<std::vector<Detection>> grouped;
    std::unordered_map<std::string, std::size_t> group_of;
    for (const auto& p : preds) {
        const auto it = gt_index.find(p.image_id);
        if (it == gt_index.end()) throw ValidationError("prediction references unknown image_id \"" + p.image_id + "\"");
        auto [slot, fresh] = group_of.emplace(p.image_id, grouped.size());
        if (fresh) {
            grouped.emplace_back();
            image_of.push_back(it->second);
        }
        auto& dst = grouped[slot->second];
        dst.insert(dst.end(), p.detections.begin(), p.detections.end());
        report.total_predictions += p.detections.size();
    }

    for (double t : thresholds) {
        if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("IoU threshold must lie in [0, 1]");
        struct Pooled {
            double score;
            bool tp;
        };
        std::vector<Pooled> pooled;
        pooled.reserve(report.total_predictions);
        for (std::size_t g = 0; g < grouped.size(); ++g) {
            const auto& dets = grouped[g];
            const MatchResult m = match_greedy(dets, gts[image_of[g]].boxes, t);
            // Scatter back to input order so the global stable sort sees
            // predictions in the order they were supplied.
            std::vector<bool> flag_of(dets.size());
            for (std::size_t i = 0; i < m.order.size(); ++i) flag_of[m.order[i]] = m.tp[i];
            for (std::size_t i = 0; i < dets.size(); ++i) pooled.push_back({dets[i].score, flag_of[i]});
        }
        std::stable_sort(pooled.begin(), pooled.end(),
                         [](const Pooled& a, const Pooled& b) { return a.score > b.score; });
        std::vector<bool> flags;
        flags.reserve(pooled.size());
        for (const auto& p : pooled) flags.push_back(p.tp);

        ThresholdResult r;
        r.iou = t;
        r.ap = average_precision(flags, report.total_ground_truths);
        r.true_positives = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
        r.curve = pr_curve(flags, report.total_ground_truths);
        report.per_threshold.push_back(std::move(r));
    }
    return report;
}

std::string threshold_key(double iou) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", iou);
    if (std::abs(std::strtod(buf, nullptr) - iou) < 1e-12) return buf;
    std::snprintf(buf, sizeof buf, "%.6g", iou);
    return buf;
}

std::string eval_report_to_json(const EvalReport& report) {
    nlohmann::ordered_json doc;
    doc["ap"] = nlohmann::ordered_json::object();
    doc["pr_curves"] = nlohmann::ordered_json::object();
    doc["true_positives"] = nlohmann::ordered_json::object();
    for (const auto& t : report.per_threshold) {
        const auto key = threshold_key(t.iou);
        doc["ap"][key] = t.ap;
        doc["true_positives"][key] = t.true_positives;
        auto curve = nlohmann::ordered_json::array();
        for (const auto& p : t.curve) curve.push_back({p.recall, p.precision});
        doc["pr_curves"][key] = std::move(curve);
    }
    doc["counts"] = {{"ground_truths", report.total_ground_truths}, {"predictions", report.total_predictions}};
    return doc.dump(2);
}

std::string pr_curves_to_csv(const EvalReport& report) {
    std::string out = "iou,rank,recall,precision\n";
    char line[128];
    for (const auto& t : report.per_threshold) {
        for (std::size_t i = 0; i < t.curve.size(); ++i) {
            std::snprintf(line, sizeof line, "%s,%zu,%.17g,%.17g\n", threshold_key(t.iou).c_str(), i + 1,
                          t.curve[i].recall, t.curve[i].precision);
            out += line;
        }
    }
    return out;
}

}  // namespace mothscan
