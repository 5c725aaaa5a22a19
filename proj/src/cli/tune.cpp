#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <mutex>
#include <thread>

#include "cli/commands.hpp"
#include "cli/logging.hpp"
#include "mothscan/image_io.hpp"

namespace mothscan::cli {
namespace {

using nlohmann::json;

template <typename T>
std::vector<T> values_or(const std::vector<T>& values, T fallback) {
    return values.empty() ? std::vector<T>{fallback} : values;
}

template <typename T>
std::vector<T> read_list(const json& v, const std::string& key) {
    if (!v.is_array() || v.empty()) throw ParseError("tune grid: \"" + key + "\" must be a non-empty list");
    std::vector<T> out;
    for (const auto& item : v) {
        if constexpr (std::is_same_v<T, int>) {
            if (!item.is_number_integer()) throw ParseError("tune grid: \"" + key + "\" values must be integers");
        } else {
            if (!item.is_number()) throw ParseError("tune grid: \"" + key + "\" values must be numbers");
        }
        out.push_back(item.get<T>());
    }
    return out;
}

std::string read_text(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

}  // namespace

std::vector<DetectorConfig> TuneGrid::expand() const {
    const DetectorConfig base;
    std::vector<DetectorConfig> out;
    for (int blur : values_or(blur_radius, base.blur_radius))
        for (ThresholdMethod method : values_or(threshold_method, base.threshold_method))
            for (int window : values_or(local_window, base.local_window))
                for (int open_r : values_or(morph_open_radius, base.morph_open_radius))
                    for (int close_r : values_or(morph_close_radius, base.morph_close_radius))
                        for (int area : values_or(min_area, base.min_area))
                            for (int depth : values_or(max_recursion, base.max_recursion))
                                for (int children : values_or(split_min_children, base.split_min_children))
                                    for (double iou : values_or(nms_iou, base.nms_iou)) {
                                        out.push_back(DetectorConfig{blur, method, window, open_r, close_r, area,
                                                                     depth, children, iou});
                                    }
    return out;
}

TuneGrid tune_grid_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("tune grid: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("grid") || !doc.at("grid").is_object()) {
        throw ParseError("tune grid: expected an object with a \"grid\" object");
    }
    TuneGrid grid;
    for (const auto& [key, value] : doc.items()) {
        if (key == "objective") {
            if (!value.is_string()) throw ParseError("tune grid: \"objective\" must be a string");
            grid.objective = value.get<std::string>();
        } else if (key != "grid") {
            throw ParseError("tune grid: unknown field \"" + key + "\"");
        }
    }
    const json& g = doc.at("grid");
    if (g.empty()) throw ValidationError("tune grid: no parameters to search");
    for (const auto& [key, value] : g.items()) {
        if (key == "blur_radius") {
            grid.blur_radius = read_list<int>(value, key);
        } else if (key == "threshold_method") {
            if (!value.is_array() || value.empty()) throw ParseError("tune grid: \"threshold_method\" must be a non-empty list");
            for (const auto& m : value) {
                if (!m.is_string()) throw ParseError("tune grid: threshold methods must be strings");
                grid.threshold_method.push_back(parse_threshold_method(m.get<std::string>()));
            }
        } else if (key == "local_window") {
            grid.local_window = read_list<int>(value, key);
        } else if (key == "morph_open_radius") {
            grid.morph_open_radius = read_list<int>(value, key);
        } else if (key == "morph_close_radius") {
            grid.morph_close_radius = read_list<int>(value, key);
        } else if (key == "min_area") {
            grid.min_area = read_list<int>(value, key);
        } else if (key == "max_recursion") {
            grid.max_recursion = read_list<int>(value, key);
        } else if (key == "split_min_children") {
            grid.split_min_children = read_list<int>(value, key);
        } else if (key == "nms_iou") {
            grid.nms_iou = read_list<double>(value, key);
        } else {
            throw ParseError("tune grid: unknown parameter \"" + key + "\"");
        }
    }
    objective_threshold(grid.objective);
    return grid;
}

double objective_threshold(const std::string& metric) {
    if (metric == "map@0.50") return 0.50;
    if (metric == "map@0.75") return 0.75;
    throw ParameterError("unsupported metric \"" + metric + "\" (expected map@0.50 or map@0.75)");
}

TuneResult tune_detector(const std::vector<GrayImage>& images, const std::vector<GroundTruthImage>& gts,
                         const TuneGrid& grid, int jobs) {
    if (images.size() != gts.size()) throw ShapeError("tune: image and ground-truth counts differ");
    const double threshold = objective_threshold(grid.objective);
    const auto configs = grid.expand();
    for (const auto& c : configs) c.validate();

    TuneResult result;
    result.leaderboard.resize(configs.size());
    auto evaluate = [&](std::size_t i) {
        std::vector<ImagePredictions> preds;
        preds.reserve(images.size());
        for (std::size_t j = 0; j < images.size(); ++j) {
            preds.push_back(ImagePredictions{gts[j].image_id, detect(images[j], configs[i])});
        }
        result.leaderboard[i] = TuneEntry{configs[i], map_at(preds, gts, {threshold}).per_threshold.front().ap};
    };

    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, configs.size());
    if (workers == 1) {
        for (std::size_t i = 0; i < configs.size(); ++i) evaluate(i);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_lock;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < configs.size(); i += workers) {
                    try {
                        evaluate(i);
                    } catch (...) {
                        std::lock_guard lock(failure_lock);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    for (std::size_t i = 1; i < result.leaderboard.size(); ++i) {
        if (result.leaderboard[i].score > result.leaderboard[result.best].score) result.best = i;
    }
    return result;
}

std::string leaderboard_csv(const TuneResult& result) {
    std::string out =
        "index,blur_radius,threshold_method,local_window,morph_open_radius,morph_close_radius,min_area,"
        "max_recursion,split_min_children,nms_iou,score\n";
    char line[256];
    for (std::size_t i = 0; i < result.leaderboard.size(); ++i) {
        const auto& c = result.leaderboard[i].config;
        std::snprintf(line, sizeof line, "%zu,%d,%s,%d,%d,%d,%d,%d,%d,%.17g,%.17g\n", i, c.blur_radius,
                      std::string(to_string(c.threshold_method)).c_str(), c.local_window, c.morph_open_radius,
                      c.morph_close_radius, c.min_area, c.max_recursion, c.split_min_children, c.nms_iou,
                      result.leaderboard[i].score);
        out += line;
    }
    return out;
}

int run_tune(const TuneOptions& opt) {
    return guarded([&] {
        TuneGrid grid = tune_grid_from_json(read_text(opt.grid));
        if (opt.metric) grid.objective = *opt.metric;
        objective_threshold(grid.objective);

        const AnnotationFile gt = load_annotations(opt.gt);
        if (gt.images.empty() || gt.boxes.empty()) throw ValidationError("tune: ground truth is empty");

        std::vector<GrayImage> images;
        for (const auto& rec : gt.images) images.push_back(as_gray(read_image(opt.images / rec.file_path)));
        logger()->info("tuning over {} configurations on {} images", grid.expand().size(), images.size());

        const TuneResult result = tune_detector(images, to_ground_truth(gt), grid, opt.jobs);
        const auto& best = result.leaderboard[result.best];
        logger()->info("best {} = {:.4f} (configuration {})", grid.objective, best.score, result.best);

        const std::string cfg_text = config_to_json(best.config) + "\n";
        write_file_atomic(opt.out, std::span(reinterpret_cast<const std::uint8_t*>(cfg_text.data()), cfg_text.size()));
        fs::path board = opt.leaderboard ? *opt.leaderboard : fs::path(opt.out).replace_extension(".leaderboard.csv");
        const std::string csv = leaderboard_csv(result);
        write_file_atomic(board, std::span(reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()));
        return kOk;
    });
}

}  // namespace mothscan::cli
