#include "mothscan/detector.hpp"

#include <algorithm>
#include <tuple>

namespace mothscan {

std::vector<Component> connected_components(const BinaryImage& b) {
    const int w = b.width();
    const int h = b.height();
    BinaryImage todo = b;
    std::vector<std::pair<int, int>> stack;
    std::vector<Component> out;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!todo.at(x, y)) continue;
            todo.at(x, y) = 0;
            stack.emplace_back(x, y);
            int x0 = x, x1 = x, y0 = y, y1 = y;
            std::int64_t area = 0;
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                ++area;
                x0 = std::min(x0, cx);
                x1 = std::max(x1, cx);
                y0 = std::min(y0, cy);
                y1 = std::max(y1, cy);
                for (int ny = std::max(cy - 1, 0); ny <= std::min(cy + 1, h - 1); ++ny) {
                    for (int nx = std::max(cx - 1, 0); nx <= std::min(cx + 1, w - 1); ++nx) {
                        if (todo.at(nx, ny)) {
                            todo.at(nx, ny) = 0;
                            stack.emplace_back(nx, ny);
                        }
                    }
                }
            }
            out.push_back(Component{Box{x0, y0, x1 - x0 + 1, y1 - y0 + 1}, area});
        }
    }

    std::sort(out.begin(), out.end(), [](const Component& a, const Component& b) {
        return std::tie(a.box.y, a.box.x, a.box.w, a.box.h, a.area) <
               std::tie(b.box.y, b.box.x, b.box.w, b.box.h, b.area);
    });
    return out;
}

}  // namespace mothscan
