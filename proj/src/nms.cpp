#include "mothscan/detector.hpp"

#include <algorithm>
#include <tuple>

namespace mothscan {

std::vector<Detection> nms(std::vector<Detection> dets, double iou_thresh) {
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.box.y, a.box.x, a.box.w, a.box.h) < std::tie(b.box.y, b.box.x, b.box.w, b.box.h);
    });
    std::vector<Detection> kept;
    std::vector<bool> suppressed(dets.size(), false);
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (suppressed[i]) continue;
        kept.push_back(dets[i]);
        for (std::size_t j = i + 1; j < dets.size(); ++j) {
            if (!suppressed[j] && iou(dets[i].box, dets[j].box) > iou_thresh) suppressed[j] = true;
        }
    }
    return kept;
}

}  // namespace mothscan
