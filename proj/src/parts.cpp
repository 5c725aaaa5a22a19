#include "mothscan/parts.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "mothscan/image_io.hpp"

namespace mothscan {

using nlohmann::json;

SaliencyMap::SaliencyMap(GrayImage values) : values_(std::move(values)) {
    for (double v : values_.pixels()) {
        if (!std::isfinite(v) || v < 0.0) throw ValidationError("saliency values must be finite and >= 0");
    }
}

GradientMapSet::GradientMapSet(std::vector<int> dims, std::vector<GrayImage> maps)
    : dims_(std::move(dims)), maps_(std::move(maps)) {
    if (dims_.empty()) throw ValidationError("gradient map set is empty");
    if (dims_.size() != maps_.size()) {
        throw ShapeError("gradient map set lists " + std::to_string(dims_.size()) + " dims but has " +
                         std::to_string(maps_.size()) + " maps");
    }
    if (std::set<int>(dims_.begin(), dims_.end()).size() != dims_.size()) {
        throw ValidationError("gradient map set has duplicate dimension indices");
    }
    for (std::size_t i = 1; i < maps_.size(); ++i) {
        if (maps_[i].width() != maps_[0].width() || maps_[i].height() != maps_[0].height()) {
            throw ShapeError("gradient map for dim " + std::to_string(dims_[i]) + " is " +
                             std::to_string(maps_[i].width()) + "x" + std::to_string(maps_[i].height()) +
                             ", expected " + std::to_string(maps_[0].width()) + "x" +
                             std::to_string(maps_[0].height()));
        }
    }
}

GradientMapSet GradientMapSet::restricted_to(const std::vector<int>& keep) const {
    const std::set<int> wanted(keep.begin(), keep.end());
    std::vector<int> dims;
    std::vector<GrayImage> maps;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (wanted.count(dims_[i])) {
            dims.push_back(dims_[i]);
            maps.push_back(maps_[i]);
        }
    }
    if (dims.empty()) throw ValidationError("no gradient maps remain after feature-dimension selection");
    return GradientMapSet(std::move(dims), std::move(maps));
}

GradientMapSet load_gradient_maps(const std::filesystem::path& dir) {
    const auto dims_path = dir / "dims.json";
    const auto bytes = read_file_bytes(dims_path);
    json doc;
    try {
        doc = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ParseError(dims_path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw ParseError(dims_path.string() + ": expected a list of dimension indices");
    std::vector<int> dims;
    std::vector<GrayImage> maps;
    for (const auto& d : doc) {
        if (!d.is_number_integer()) throw ParseError(dims_path.string() + ": dimension indices must be integers");
        dims.push_back(d.get<int>());
        maps.push_back(read_float_raster(dir / ("grad_" + std::to_string(dims.back()) + ".bin")));
    }
    return GradientMapSet(std::move(dims), std::move(maps));
}

void save_gradient_maps(const std::filesystem::path& dir, const GradientMapSet& set) {
    std::filesystem::create_directories(dir);
    const std::string dims = json(set.dims()).dump();
    write_file_atomic(dir / "dims.json", std::span(reinterpret_cast<const std::uint8_t*>(dims.data()), dims.size()));
    for (std::size_t i = 0; i < set.dims().size(); ++i) {
        write_float_raster(dir / ("grad_" + std::to_string(set.dims()[i]) + ".bin"), set.maps()[i]);
    }
}

void FeatureWeights::validate() const {
    if (classes < 1 || dim < 1) throw ValidationError("feature weights need classes >= 1 and dim >= 1");
    if (weights.size() != static_cast<std::size_t>(classes) * static_cast<std::size_t>(dim)) {
        throw ShapeError("feature weights hold " + std::to_string(weights.size()) + " values, expected " +
                         std::to_string(classes) + "x" + std::to_string(dim));
    }
    for (double w : weights) {
        if (!std::isfinite(w)) throw ValidationError("feature weights must be finite");
    }
}

FeatureWeights feature_weights_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("feature weights: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("classes") || !doc.contains("dim") || !doc.contains("weights")) {
        throw ParseError("feature weights: expected an object with classes, dim and weights");
    }
    FeatureWeights w;
    try {
        w.classes = doc.at("classes").get<int>();
        w.dim = doc.at("dim").get<int>();
        for (const auto& v : doc.at("weights")) {
            if (v.is_array()) {
                for (const auto& x : v) w.weights.push_back(x.get<double>());
            } else {
                w.weights.push_back(v.get<double>());
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("feature weights: ") + e.what());
    }
    w.validate();
    return w;
}

FeatureWeights load_feature_weights(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return feature_weights_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void PartConfig::validate() const {
    if (k < 1) throw ParameterError("part config: k must be >= 1");
    if (max_iters < 1) throw ParameterError("part config: max_iters must be >= 1");
    if (!(tol > 0.0)) throw ParameterError("part config: tol must be > 0");
    if (!(peak_min_distance >= 0.0)) throw ParameterError("part config: peak_min_distance must be >= 0");
}

std::vector<int> select_feature_dims(const FeatureWeights& w, double threshold) {
    if (!(threshold >= 0.0)) throw ParameterError("selection threshold must be >= 0");
    w.validate();
    std::vector<int> dims;
    for (int d = 0; d < w.dim; ++d) {
        for (int c = 0; c < w.classes; ++c) {
            if (std::abs(w.at(c, d)) > threshold) {
                dims.push_back(d);
                break;
            }
        }
    }
    return dims;
}

SaliencyMap saliency_from_gradmaps(const GradientMapSet& g) {
    GrayImage out(g.width(), g.height());
    auto dst = out.pixels();
    for (const GrayImage& m : g.maps()) {
        auto src = m.pixels();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += std::abs(src[i]);
    }
    const double n = static_cast<double>(g.maps().size());
    for (double& v : dst) v /= n;
    return SaliencyMap(std::move(out));
}

SaliencyMap sparsify_saliency(const SaliencyMap& m) {
    const auto src = m.values().pixels();
    const auto [lo, hi] = std::minmax_element(src.begin(), src.end());
    GrayImage out(m.width(), m.height());
    if (!(*hi > *lo)) return SaliencyMap(std::move(out));

    const double range = *hi - *lo;
    auto dst = out.pixels();
    double sum = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = (src[i] - *lo) / range;
        sum += dst[i];
    }
    const double mean = sum / static_cast<double>(dst.size());
    for (double& v : dst) {
        if (v < mean) v = 0.0;
    }
    return SaliencyMap(std::move(out));
}

std::vector<Peak> find_peaks(const SaliencyMap& m, int k, double min_distance) {
    if (k < 1) throw ParameterError("find_peaks: k must be >= 1");
    struct Candidate {
        double value;
        int x;
        int y;
    };
    std::vector<Candidate> candidates;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (m.at(x, y) > 0.0) candidates.push_back({m.at(x, y), x, y});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.value != b.value) return a.value > b.value;
        return std::tie(a.y, a.x) < std::tie(b.y, b.x);
    });

    const double min_d2 = min_distance * min_distance;
    std::vector<Peak> peaks;
    for (const Candidate& c : candidates) {
        if (static_cast<int>(peaks.size()) >= k) break;
        const bool far = std::all_of(peaks.begin(), peaks.end(), [&](const Peak& p) {
            const double dx = c.x - p.x;
            const double dy = c.y - p.y;
            return dx * dx + dy * dy > min_d2;
        });
        if (far) peaks.push_back(Peak{c.x, c.y});
    }
    return peaks;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

}  // namespace

PartClustering cluster_saliency(const SaliencyMap& m, const ColorImage& img, const PartConfig& cfg) {
    cfg.validate();
    if (img.width() != m.width() || img.height() != m.height()) {
        throw ShapeError("image is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                         " but saliency map is " + std::to_string(m.width()) + "x" + std::to_string(m.height()));
    }

    PartClustering result;
    const auto peaks = find_peaks(m, cfg.k, cfg.peak_min_distance);
    if (peaks.empty()) return result;

    const double sx = m.width() > 1 ? 1.0 / (m.width() - 1) : 0.0;
    const double sy = m.height() > 1 ? 1.0 / (m.height() - 1) : 0.0;
    const std::size_t dim = cfg.use_rgb ? 6 : 3;
    auto features_of = [&](int x, int y, std::vector<double>& out) {
        out.push_back(x * sx);
        out.push_back(y * sy);
        out.push_back(m.at(x, y));
        if (cfg.use_rgb) {
            const Rgb& c = img.at(x, y);
            out.push_back(c.r / 255.0);
            out.push_back(c.g / 255.0);
            out.push_back(c.b / 255.0);
        }
    };

    std::vector<double> features;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (m.at(x, y) > 0.0) {
                result.points.push_back(Peak{x, y});
                features_of(x, y, features);
            }
        }
    }
    const std::size_t n = result.points.size();
    auto feature = [&](std::size_t i) { return std::span<const double>(features).subspan(i * dim, dim); };

    for (const Peak& p : peaks) {
        std::vector<double> c;
        features_of(p.x, p.y, c);
        result.centroids.push_back(std::move(c));
    }
    const std::size_t k = result.centroids.size();
    result.labels.assign(n, 0);

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int label = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(feature(i), result.centroids[c]);
                if (d < best) {
                    best = d;
                    label = static_cast<int>(c);
                }
            }
            result.labels[i] = label;
            objective += best;
        }
        result.objective.push_back(objective);
        ++result.iterations;

        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto f = feature(i);
            auto& s = sums[static_cast<std::size_t>(result.labels[i])];
            for (std::size_t j = 0; j < dim; ++j) s[j] += f[j];
            ++counts[static_cast<std::size_t>(result.labels[i])];
        }
        double movement = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty clusters keep their centroid and are dropped later
            for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
            movement = std::max(movement, std::sqrt(squared_distance(sums[c], result.centroids[c])));
            result.centroids[c] = std::move(sums[c]);
        }
        if (movement < cfg.tol) break;
    }
    return result;
}

std::vector<Box> estimate_parts(const SaliencyMap& m, const ColorImage& img, const PartConfig& cfg) {
    const PartClustering clusters = cluster_saliency(m, img, cfg);
    const std::size_t k = clusters.centroids.size();
    std::vector<int> x0(k, std::numeric_limits<int>::max()), y0(k, std::numeric_limits<int>::max());
    std::vector<int> x1(k, -1), y1(k, -1);
    for (std::size_t i = 0; i < clusters.points.size(); ++i) {
        const auto c = static_cast<std::size_t>(clusters.labels[i]);
        const Peak& p = clusters.points[i];
        x0[c] = std::min(x0[c], p.x);
        y0[c] = std::min(y0[c], p.y);
        x1[c] = std::max(x1[c], p.x);
        y1[c] = std::max(y1[c], p.y);
    }
    std::vector<Box> boxes;
    for (std::size_t c = 0; c < k; ++c) {
        if (x1[c] < 0) continue;
        boxes.push_back(Box{x0[c], y0[c], x1[c] - x0[c] + 1, y1[c] - y0[c] + 1});
    }
    return boxes;
}

}  // namespace mothscan
