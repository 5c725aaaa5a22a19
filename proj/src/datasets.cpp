#include "mothscan/datasets.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "mothscan/image_io.hpp"

namespace mothscan {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool is_calendar_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    const int year = std::stoi(s.substr(0, 4));
    const int month = std::stoi(s.substr(5, 2));
    const int day = std::stoi(s.substr(8, 2));
    if (month < 1 || month > 12 || day < 1) return false;
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return day <= kDays[month - 1] + (month == 2 && leap ? 1 : 0);
}

class RecordReader {
public:
    RecordReader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) fail("expected an object");
    }

    void only(std::initializer_list<const char*> allowed) const {
        for (const auto& [key, _] : obj_.items()) {
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
                fail("unknown field \"" + key + "\"");
            }
        }
    }

    std::string str(const char* key) const {
        const json& v = require(key);
        if (!v.is_string()) fail(std::string("\"") + key + "\" must be a string");
        return v.get<std::string>();
    }

    int integer(const char* key) const {
        const json& v = require(key);
        if (!v.is_number_integer()) fail(std::string("\"") + key + "\" must be an integer");
        const auto n = v.get<std::int64_t>();
        if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) {
            fail(std::string("\"") + key + "\" out of range");
        }
        return static_cast<int>(n);
    }

    std::optional<std::string> opt_str(const char* key) const {
        if (!obj_.contains(key) || obj_.at(key).is_null()) return std::nullopt;
        if (!obj_.at(key).is_string()) fail(std::string("\"") + key + "\" must be a string or null");
        return obj_.at(key).get<std::string>();
    }

    std::optional<double> opt_number(const char* key) const {
        if (!obj_.contains(key) || obj_.at(key).is_null()) return std::nullopt;
        if (!obj_.at(key).is_number()) fail(std::string("\"") + key + "\" must be a number or null");
        return obj_.at(key).get<double>();
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(where_ + ": " + msg); }

private:
    const json& require(const char* key) const {
        if (!obj_.contains(key)) fail(std::string("missing field \"") + key + "\"");
        return obj_.at(key);
    }

    const json& obj_;
    std::string where_;
};

}  // namespace

const ImageRecord* AnnotationFile::find_image(std::string_view image_id) const {
    for (const auto& img : images) {
        if (img.image_id == image_id) return &img;
    }
    return nullptr;
}

void AnnotationFile::validate() const {
    std::unordered_map<std::string, const ImageRecord*> by_id;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& img = images[i];
        const std::string where = "images[" + std::to_string(i) + "] (image_id \"" + img.image_id + "\")";
        if (img.image_id.empty()) throw ValidationError(where + ": empty image_id");
        if (!by_id.emplace(img.image_id, &img).second) throw ValidationError(where + ": duplicate image_id");
        if (img.width < 1 || img.height < 1) throw ValidationError(where + ": width and height must be >= 1");
        if (img.night && !is_calendar_date(*img.night)) {
            throw ValidationError(where + ": night \"" + *img.night + "\" is not a YYYY-MM-DD date");
        }
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& b = boxes[i];
        const std::string where = "boxes[" + std::to_string(i) + "] (image_id \"" + b.image_id + "\")";
        const auto it = by_id.find(b.image_id);
        if (it == by_id.end()) throw ValidationError(where + ": image_id not listed in images");
        if (!b.box.valid()) throw ValidationError(where + ": box " + to_string(b.box) + " is not a valid box");
        if (!b.box.fits(it->second->width, it->second->height)) {
            throw ValidationError(where + ": box " + to_string(b.box) + " exceeds image bounds " +
                                  std::to_string(it->second->width) + "x" + std::to_string(it->second->height));
        }
        if (b.score && !(*b.score >= 0.0 && *b.score <= 1.0)) {
            throw ValidationError(where + ": score must lie in [0, 1]");
        }
    }
}

AnnotationFile parse_annotations(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("annotation file: ") + e.what());
    }
    RecordReader top(doc, "annotation file");
    top.only({"images", "boxes"});
    if (!doc.contains("images") || !doc.at("images").is_array()) top.fail("\"images\" must be a list");
    if (!doc.contains("boxes") || !doc.at("boxes").is_array()) top.fail("\"boxes\" must be a list");

    AnnotationFile a;
    const auto& images = doc.at("images");
    for (std::size_t i = 0; i < images.size(); ++i) {
        RecordReader r(images[i], "images[" + std::to_string(i) + "]");
        r.only({"image_id", "file_path", "width", "height", "night", "split"});
        ImageRecord img;
        img.image_id = r.str("image_id");
        img.file_path = r.str("file_path");
        img.width = r.integer("width");
        img.height = r.integer("height");
        img.night = r.opt_str("night");
        if (auto s = r.opt_str("split")) {
            if (*s == "train") {
                img.split = SplitFlag::train;
            } else if (*s == "test") {
                img.split = SplitFlag::test;
            } else {
                r.fail("split must be \"train\", \"test\" or null");
            }
        }
        a.images.push_back(std::move(img));
    }
    const auto& boxes = doc.at("boxes");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        RecordReader r(boxes[i], "boxes[" + std::to_string(i) + "]");
        r.only({"image_id", "x", "y", "w", "h", "species", "score"});
        BoxRecord b;
        b.image_id = r.str("image_id");
        b.box = Box{r.integer("x"), r.integer("y"), r.integer("w"), r.integer("h")};
        b.species = r.opt_str("species");
        b.score = r.opt_number("score");
        a.boxes.push_back(std::move(b));
    }
    a.validate();
    return a;
}

AnnotationFile load_annotations(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return parse_annotations(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string serialize_annotations(const AnnotationFile& a) {
    ordered_json doc;
    doc["images"] = ordered_json::array();
    for (const auto& img : a.images) {
        ordered_json r;
        r["image_id"] = img.image_id;
        r["file_path"] = img.file_path;
        r["width"] = img.width;
        r["height"] = img.height;
        r["night"] = img.night ? ordered_json(*img.night) : ordered_json(nullptr);
        r["split"] = img.split ? ordered_json(*img.split == SplitFlag::train ? "train" : "test") : ordered_json(nullptr);
        doc["images"].push_back(std::move(r));
    }
    doc["boxes"] = ordered_json::array();
    for (const auto& b : a.boxes) {
        ordered_json r;
        r["image_id"] = b.image_id;
        r["x"] = b.box.x;
        r["y"] = b.box.y;
        r["w"] = b.box.w;
        r["h"] = b.box.h;
        r["species"] = b.species ? ordered_json(*b.species) : ordered_json(nullptr);
        if (b.score) r["score"] = *b.score;
        doc["boxes"].push_back(std::move(r));
    }
    return doc.dump(2) + "\n";
}

void save_annotations(const std::filesystem::path& path, const AnnotationFile& a) {
    const std::string text = serialize_annotations(a);
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

SplitResult split(const AnnotationFile& a, const SplitSpec& s) {
    std::unordered_set<std::string> train_ids;
    if (s.mode == SplitSpec::Mode::by_night) {
        if (s.train_nights.empty()) throw ValidationError("by_night split needs at least one training night");
        const std::set<std::string> nights(s.train_nights.begin(), s.train_nights.end());
        for (const auto& img : a.images) {
            if (!img.night) throw ValidationError("image \"" + img.image_id + "\" has no night for a by_night split");
            if (nights.count(*img.night)) train_ids.insert(img.image_id);
        }
    } else {
        for (const auto& img : a.images) {
            if (!img.split) throw ValidationError("image \"" + img.image_id + "\" has no split flag");
            if (*img.split == SplitFlag::train) train_ids.insert(img.image_id);
        }
    }

    SplitResult out;
    for (const auto& img : a.images) {
        (train_ids.count(img.image_id) ? out.train : out.test).images.push_back(img);
    }
    for (const auto& b : a.boxes) {
        (train_ids.count(b.image_id) ? out.train : out.test).boxes.push_back(b);
    }
    return out;
}

DatasetStats stats(const AnnotationFile& a) {
    DatasetStats s;
    s.n_images = a.images.size();
    s.n_boxes = a.boxes.size();

    std::set<std::string> species;
    std::unordered_map<std::string, std::size_t> per_image;
    std::vector<double> areas;
    for (const auto& img : a.images) per_image[img.image_id] = 0;
    for (const auto& b : a.boxes) {
        if (b.species) species.insert(*b.species);
        ++per_image[b.image_id];
        areas.push_back(static_cast<double>(b.box.area()));
    }
    s.n_species = species.size();
    for (const auto& [_, count] : per_image) ++s.boxes_per_image[count];

    std::sort(areas.begin(), areas.end());
    for (int q : kStatsQuantiles) {
        if (areas.empty()) {
            s.area_quantiles[q] = 0.0;
            continue;
        }
        const double pos = q / 100.0 * static_cast<double>(areas.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, areas.size() - 1);
        s.area_quantiles[q] = areas[lo] + (pos - static_cast<double>(lo)) * (areas[hi] - areas[lo]);
    }
    return s;
}

std::string format_stats_table(const DatasetStats& s) {
    std::string out;
    char line[128];
    auto row = [&](const char* name, const std::string& value) {
        std::snprintf(line, sizeof line, "%-22s %s\n", name, value.c_str());
        out += line;
    };
    row("images", std::to_string(s.n_images));
    row("boxes", std::to_string(s.n_boxes));
    row("species", std::to_string(s.n_species));
    out += "boxes per image:\n";
    for (const auto& [count, n] : s.boxes_per_image) {
        std::snprintf(line, sizeof line, "  %-20zu %zu\n", count, n);
        out += line;
    }
    out += "box area quantiles (px^2):\n";
    for (const auto& [q, v] : s.area_quantiles) {
        std::snprintf(line, sizeof line, "  p%-19d %.1f\n", q, v);
        out += line;
    }
    return out;
}

std::string stats_to_json(const DatasetStats& s) {
    ordered_json doc;
    doc["n_images"] = s.n_images;
    doc["n_boxes"] = s.n_boxes;
    doc["n_species"] = s.n_species;
    doc["boxes_per_image"] = ordered_json::object();
    for (const auto& [count, n] : s.boxes_per_image) doc["boxes_per_image"][std::to_string(count)] = n;
    doc["area_quantiles"] = ordered_json::object();
    for (const auto& [q, v] : s.area_quantiles) doc["area_quantiles"]["p" + std::to_string(q)] = v;
    return doc.dump(2);
}

std::vector<GroundTruthImage> to_ground_truth(const AnnotationFile& a) {
    std::vector<GroundTruthImage> out;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& img : a.images) {
        index[img.image_id] = out.size();
        out.push_back(GroundTruthImage{img.image_id, {}, {}});
    }
    for (const auto& b : a.boxes) {
        auto& gt = out[index.at(b.image_id)];
        gt.boxes.push_back(b.box);
        gt.labels.push_back(b.species);
    }
    return out;
}

std::vector<ImagePredictions> to_predictions(const AnnotationFile& a) {
    std::vector<ImagePredictions> out;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& img : a.images) {
        index[img.image_id] = out.size();
        out.push_back(ImagePredictions{img.image_id, {}});
    }
    for (std::size_t i = 0; i < a.boxes.size(); ++i) {
        const auto& b = a.boxes[i];
        if (!b.score) throw ValidationError("boxes[" + std::to_string(i) + "]: prediction has no score");
        out[index.at(b.image_id)].detections.push_back(Detection{b.box, *b.score, b.species});
    }
    return out;
}

}  // namespace mothscan
