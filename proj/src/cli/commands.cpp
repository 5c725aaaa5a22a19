#include "cli/commands.hpp"

#include <nlohmann/json.hpp>

#include <iostream>
#include <set>

#include "cli/logging.hpp"
#include "mothscan/fusion.hpp"
#include "mothscan/image_io.hpp"
#include "mothscan/parts.hpp"

namespace mothscan::cli {
namespace {

std::string read_text(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_text(const fs::path& path, const std::string& text) {
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

std::string image_id_for(const fs::path& image) { return image.stem().string(); }

void append_predictions(AnnotationFile& out, const std::string& image_id, const std::string& file_path,
                        const GrayImage& img, const std::vector<Detection>& dets) {
    out.images.push_back(ImageRecord{image_id, file_path, img.width(), img.height(), std::nullopt, std::nullopt});
    for (const Detection& d : dets) {
        out.boxes.push_back(BoxRecord{image_id, d.box, d.label, d.score});
    }
}

DetectorConfig load_config(const fs::path& path) { return config_from_json(read_text(path)); }

int run_detect(const DetectOptions& opt) {
    return guarded([&] {
        const DetectorConfig cfg = opt.config ? load_config(*opt.config) : DetectorConfig{};
        cfg.validate();
        AnnotationFile out;
        std::set<std::string> seen;
        bool failed = false;
        for (const fs::path& path : opt.images) {
            const std::string id = image_id_for(path);
            if (!seen.insert(id).second) throw ValidationError("two inputs share the image id \"" + id + "\"");
            GrayImage img;
            try {
                img = as_gray(read_image(path));
            } catch (const Error& e) {
                logger()->error("{}", e.what());
                failed = true;
                if (!opt.keep_going) return kInputError;
                continue;
            }
            const auto dets = detect(img, cfg);
            logger()->info("{}: {} detections", path.string(), dets.size());
            append_predictions(out, id, path.string(), img, dets);
        }
        save_annotations(opt.out, out);
        return failed ? kInputError : kOk;
    });
}

int run_eval(const EvalOptions& opt, std::ostream& table) {
    return guarded([&] {
        const AnnotationFile gt = load_annotations(opt.gt);
        const AnnotationFile pred = load_annotations(opt.pred);
        const EvalReport report = map_at(to_predictions(pred), to_ground_truth(gt), opt.iou);

        table << "threshold      AP\n";
        char line[64];
        for (const auto& t : report.per_threshold) {
            std::snprintf(line, sizeof line, "mAP@%-9s %.4f\n", threshold_key(t.iou).c_str(), t.ap);
            table << line;
        }
        table << "ground truths: " << report.total_ground_truths << ", predictions: " << report.total_predictions
              << "\n";
        if (opt.out) write_text(*opt.out, eval_report_to_json(report) + "\n");
        if (opt.csv) write_text(*opt.csv, pr_curves_to_csv(report));
        return kOk;
    });
}

int run_parts(const PartsOptions& opt) {
    return guarded([&] {
        if (opt.gradmaps.has_value() == opt.saliency.has_value()) {
            throw ParameterError("exactly one of --gradmaps or --saliency is required");
        }
        SaliencyMap raw = [&] {
            if (opt.saliency) return SaliencyMap(read_float_raster(*opt.saliency));
            GradientMapSet set = load_gradient_maps(*opt.gradmaps);
            if (opt.weights) {
                const auto dims = select_feature_dims(load_feature_weights(*opt.weights), opt.weight_threshold);
                set = set.restricted_to(dims);
            }
            return saliency_from_gradmaps(set);
        }();
        const ColorImage img = as_color(read_image(opt.image));
        if (img.width() != raw.width() || img.height() != raw.height()) {
            throw ShapeError("image " + opt.image.string() + " is " + std::to_string(img.width()) + "x" +
                             std::to_string(img.height()) + " but the saliency map is " +
                             std::to_string(raw.width()) + "x" + std::to_string(raw.height()));
        }
        PartConfig cfg;
        cfg.k = opt.k;
        cfg.peak_min_distance = opt.min_distance;
        cfg.use_rgb = opt.use_rgb;
        const auto boxes = estimate_parts(sparsify_saliency(raw), img, cfg);

        nlohmann::ordered_json doc;
        doc["image"] = opt.image.string();
        doc["parts"] = nlohmann::ordered_json::array();
        for (const Box& b : boxes) doc["parts"].push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}});
        write_text(opt.out, doc.dump(2) + "\n");
        logger()->info("{} parts", boxes.size());
        return kOk;
    });
}

int run_stats(const StatsOptions& opt, std::ostream& out) {
    return guarded([&] {
        const DatasetStats s = stats(load_annotations(opt.gt));
        out << (opt.json ? stats_to_json(s) + "\n" : format_stats_table(s));
        return kOk;
    });
}

int run_fuse(const FuseOptions& opt, std::ostream& out) {
    return guarded([&] {
        const ProbVector fused = fuse_geometric(prob_vector_from_json(read_text(opt.p)),
                                                prob_vector_from_json(read_text(opt.q)));
        const std::string text =
            nlohmann::json(std::vector<double>(fused.values().begin(), fused.values().end())).dump() + "\n";
        if (opt.out) {
            write_text(*opt.out, text);
        } else {
            out << text;
        }
        return kOk;
    });
}

}  // namespace mothscan::cli
