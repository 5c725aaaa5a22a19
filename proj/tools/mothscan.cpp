// Command-line front end: batch detection, evaluation, tuning, part
// estimation, fusion, dataset statistics and the unattended watcher.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <sstream>

#include "cli/commands.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

std::vector<double> parse_iou_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size() || !(v >= 0.0 && v <= 1.0)) throw CLI::ValidationError("--iou", "bad threshold " + item);
        out.push_back(v);
    }
    if (out.empty()) throw CLI::ValidationError("--iou", "no thresholds given");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace mothscan::cli;

    CLI::App app{"Blob detection and evaluation for light-trap insect images"};
    app.require_subcommand(1);

    DetectOptions detect_opt;
    auto* detect_cmd = app.add_subcommand("detect", "Run the blob detector on images");
    detect_cmd->add_option("images", detect_opt.images, "Image files (PNG, PGM, PPM)")->required();
    detect_cmd->add_option("--config", detect_opt.config, "Detector config JSON");
    detect_cmd->add_option("--out", detect_opt.out, "Output predictions JSON")->required();
    detect_cmd->add_flag("--keep-going", detect_opt.keep_going, "Continue past undecodable images");

    EvalOptions eval_opt;
    std::string iou_text = "0.50,0.75";
    auto* eval_cmd = app.add_subcommand("eval", "Compute AP at IoU thresholds");
    eval_cmd->add_option("--pred", eval_opt.pred, "Predictions JSON")->required();
    eval_cmd->add_option("--gt", eval_opt.gt, "Ground-truth annotation JSON")->required();
    eval_cmd->add_option("--iou", iou_text, "Comma-separated IoU thresholds")->capture_default_str();
    eval_cmd->add_option("--out", eval_opt.out, "Write the full report as JSON");
    eval_cmd->add_option("--csv", eval_opt.csv, "Write PR curve points as CSV");

    TuneOptions tune_opt;
    auto* tune_cmd = app.add_subcommand("tune", "Exhaustive grid search over detector parameters");
    tune_cmd->add_option("--images", tune_opt.images, "Directory the annotation file paths resolve against")->required();
    tune_cmd->add_option("--gt", tune_opt.gt, "Ground-truth annotation JSON (training split)")->required();
    tune_cmd->add_option("--grid", tune_opt.grid, "Grid JSON")->required();
    tune_cmd->add_option("--metric", tune_opt.metric, "map@0.50 or map@0.75 (overrides the grid objective)");
    tune_cmd->add_option("--out", tune_opt.out, "Best config JSON")->required();
    tune_cmd->add_option("--leaderboard", tune_opt.leaderboard, "Leaderboard CSV (default <out>.leaderboard.csv)");
    tune_cmd->add_option("--jobs", tune_opt.jobs, "Configurations evaluated concurrently")->check(CLI::PositiveNumber);

    PartsOptions parts_opt;
    auto* parts_cmd = app.add_subcommand("parts", "Estimate part boxes from gradient maps or a saliency map");
    auto* grad_flag = parts_cmd->add_option("--gradmaps", parts_opt.gradmaps, "Gradient map directory");
    auto* sal_flag = parts_cmd->add_option("--saliency", parts_opt.saliency, "Saliency float raster");
    grad_flag->excludes(sal_flag);
    parts_cmd->add_option("--image", parts_opt.image, "Source image")->required();
    parts_cmd->add_option("--k", parts_opt.k, "Number of parts")->capture_default_str();
    parts_cmd->add_option("--min-distance", parts_opt.min_distance, "Minimum peak distance in pixels")
        ->capture_default_str();
    parts_cmd->add_flag("!--no-rgb", parts_opt.use_rgb, "Cluster without color features");
    parts_cmd->add_option("--weights", parts_opt.weights, "Classifier weights JSON for dimension selection");
    parts_cmd->add_option("--weight-threshold", parts_opt.weight_threshold, "Absolute weight threshold")
        ->capture_default_str();
    parts_cmd->add_option("--out", parts_opt.out, "Output parts JSON")->required();

    WatchOptions watch_opt;
    bool once = false;
    auto* watch_cmd = app.add_subcommand("watch", "Poll a directory, detect, and write crops plus a manifest");
    watch_cmd->add_option("--in", watch_opt.in, "Directory the camera writes to")->required();
    watch_cmd->add_option("--out", watch_opt.out, "Directory for crops and manifest.jsonl")->required();
    watch_cmd->add_option("--config", watch_opt.config, "Detector config JSON");
    watch_cmd->add_option("--interval", watch_opt.interval_seconds, "Seconds between polls")->capture_default_str();
    watch_cmd->add_option("--margin", watch_opt.margin, "Crop padding in pixels")->capture_default_str();
    watch_cmd->add_flag("--once", once, "Run a single poll cycle and exit");

    StatsOptions stats_opt;
    auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics");
    stats_cmd->add_option("--gt", stats_opt.gt, "Annotation JSON")->required();
    stats_cmd->add_flag("--json", stats_opt.json, "Print JSON instead of a table");

    FuseOptions fuse_opt;
    auto* fuse_cmd = app.add_subcommand("fuse", "Geometric-mean fusion of two probability vectors");
    fuse_cmd->add_option("--p", fuse_opt.p, "Global prediction JSON array")->required();
    fuse_cmd->add_option("--q", fuse_opt.q, "Part prediction JSON array")->required();
    fuse_cmd->add_option("--out", fuse_opt.out, "Write the fused vector here instead of stdout");

    try {
        app.parse(argc, argv);
        if (eval_cmd->parsed()) eval_opt.iou = parse_iou_list(iou_text);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInputError;
    }

    if (detect_cmd->parsed()) return run_detect(detect_opt);
    if (eval_cmd->parsed()) return run_eval(eval_opt, std::cout);
    if (tune_cmd->parsed()) return run_tune(tune_opt);
    if (parts_cmd->parsed()) return run_parts(parts_opt);
    if (stats_cmd->parsed()) return run_stats(stats_opt, std::cout);
    if (fuse_cmd->parsed()) return run_fuse(fuse_opt, std::cout);
    if (watch_cmd->parsed()) {
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        if (once) watch_opt.max_cycles = 1;
        return run_watch(watch_opt, g_stop);
    }
    return kInternalError;
}
