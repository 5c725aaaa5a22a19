#include "mothscan/detector.hpp"

#include <nlohmann/json.hpp>

namespace mothscan {

using nlohmann::json;

std::string_view to_string(ThresholdMethod m) noexcept {
    switch (m) {
        case ThresholdMethod::global_mean:
            return "global_mean";
        case ThresholdMethod::otsu:
            return "otsu";
        case ThresholdMethod::local_gaussian:
            return "local_gaussian";
    }
    return "unknown";
}

ThresholdMethod parse_threshold_method(std::string_view name) {
    if (name == "global_mean") return ThresholdMethod::global_mean;
    if (name == "otsu") return ThresholdMethod::otsu;
    if (name == "local_gaussian") return ThresholdMethod::local_gaussian;
    throw ParseError("unknown threshold_method \"" + std::string(name) + "\"");
}

void DetectorConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ParameterError("detector config: " + msg); };
    if (blur_radius < 1) fail("blur_radius must be >= 1");
    if (local_window < 3 || local_window % 2 == 0) fail("local_window must be odd and >= 3");
    if (morph_open_radius < 0) fail("morph_open_radius must be >= 0");
    if (morph_close_radius < 0) fail("morph_close_radius must be >= 0");
    if (min_area < 1) fail("min_area must be >= 1");
    if (max_recursion < 0) fail("max_recursion must be >= 0");
    if (split_min_children < 2) fail("split_min_children must be >= 2");
    if (!(nms_iou >= 0.0 && nms_iou <= 1.0)) fail("nms_iou must lie in [0, 1]");
}

namespace {

int get_int(const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ParseError("detector config: \"" + key + "\" must be an integer");
    return v.get<int>();
}

}  // namespace

DetectorConfig config_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("detector config: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("detector config: expected a JSON object");

    DetectorConfig cfg;
    for (const auto& [key, value] : doc.items()) {
        if (key == "blur_radius") {
            cfg.blur_radius = get_int(value, key);
        } else if (key == "threshold_method") {
            if (!value.is_string()) throw ParseError("detector config: \"threshold_method\" must be a string");
            cfg.threshold_method = parse_threshold_method(value.get<std::string>());
        } else if (key == "local_window") {
            cfg.local_window = get_int(value, key);
        } else if (key == "morph_open_radius") {
            cfg.morph_open_radius = get_int(value, key);
        } else if (key == "morph_close_radius") {
            cfg.morph_close_radius = get_int(value, key);
        } else if (key == "min_area") {
            cfg.min_area = get_int(value, key);
        } else if (key == "max_recursion") {
            cfg.max_recursion = get_int(value, key);
        } else if (key == "split_min_children") {
            cfg.split_min_children = get_int(value, key);
        } else if (key == "nms_iou") {
            if (!value.is_number()) throw ParseError("detector config: \"nms_iou\" must be a number");
            cfg.nms_iou = value.get<double>();
        } else {
            throw ParseError("detector config: unknown field \"" + key + "\"");
        }
    }
    cfg.validate();
    return cfg;
}

std::string config_to_json(const DetectorConfig& cfg) {
    json doc = json::object();
    doc["blur_radius"] = cfg.blur_radius;
    doc["threshold_method"] = std::string(to_string(cfg.threshold_method));
    doc["local_window"] = cfg.local_window;
    doc["morph_open_radius"] = cfg.morph_open_radius;
    doc["morph_close_radius"] = cfg.morph_close_radius;
    doc["min_area"] = cfg.min_area;
    doc["max_recursion"] = cfg.max_recursion;
    doc["split_min_children"] = cfg.split_min_children;
    doc["nms_iou"] = cfg.nms_iou;
    return doc.dump(2);
}

}  // namespace mothscan
