#pragma once

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mothscan/datasets.hpp"
#include "mothscan/detector.hpp"
#include "mothscan/eval.hpp"

namespace mothscan::cli {

namespace fs = std::filesystem;

/// Process exit codes shared by every command.
enum ExitCode : int { kOk = 0, kInputError = 1, kInternalError = 2 };

/// Image id used for a file in detection output: the file name without its
/// extension.
std::string image_id_for(const fs::path& image);

/// Detections for one decoded image, as prediction records.
void append_predictions(AnnotationFile& out, const std::string& image_id, const std::string& file_path,
                        const GrayImage& img, const std::vector<Detection>& dets);

DetectorConfig load_config(const fs::path& path);

struct DetectOptions {
    std::vector<fs::path> images;
    std::optional<fs::path> config;
    fs::path out;
    bool keep_going = false;
};
int run_detect(const DetectOptions& opt);

struct EvalOptions {
    fs::path pred;
    fs::path gt;
    std::vector<double> iou{0.50, 0.75};
    std::optional<fs::path> out;
    std::optional<fs::path> csv;
};
int run_eval(const EvalOptions& opt, std::ostream& table);

// ---- tune -----------------------------------------------------------------

/// Candidate values per DetectorConfig field. Fields left empty keep the
/// default config's value. Expansion order is the field order below with the
/// last field varying fastest.
struct TuneGrid {
    std::vector<int> blur_radius;
    std::vector<ThresholdMethod> threshold_method;
    std::vector<int> local_window;
    std::vector<int> morph_open_radius;
    std::vector<int> morph_close_radius;
    std::vector<int> min_area;
    std::vector<int> max_recursion;
    std::vector<int> split_min_children;
    std::vector<double> nms_iou;
    std::string objective = "map@0.50";

    std::vector<DetectorConfig> expand() const;
};

TuneGrid tune_grid_from_json(std::string_view text);

/// IoU threshold named by "map@0.50" or "map@0.75". Throws ParameterError for
/// anything else.
double objective_threshold(const std::string& metric);

struct TuneEntry {
    DetectorConfig config;
    double score = 0.0;
};

struct TuneResult {
    std::vector<TuneEntry> leaderboard;  // grid order
    std::size_t best = 0;
};

/// Exhaustive grid evaluation. `jobs` > 1 evaluates configurations
/// concurrently; the result does not depend on it.
TuneResult tune_detector(const std::vector<GrayImage>& images, const std::vector<GroundTruthImage>& gts,
                         const TuneGrid& grid, int jobs = 1);

std::string leaderboard_csv(const TuneResult& result);

struct TuneOptions {
    fs::path images;
    fs::path gt;
    fs::path grid;
    std::optional<std::string> metric;
    fs::path out;
    std::optional<fs::path> leaderboard;
    int jobs = 1;
};
int run_tune(const TuneOptions& opt);

// ---- parts, stats, fuse ---------------------------------------------------

struct PartsOptions {
    std::optional<fs::path> gradmaps;
    std::optional<fs::path> saliency;
    fs::path image;
    int k = 4;
    double min_distance = 8.0;
    bool use_rgb = true;
    std::optional<fs::path> weights;
    double weight_threshold = 0.0;
    fs::path out;
};
int run_parts(const PartsOptions& opt);

struct StatsOptions {
    fs::path gt;
    bool json = false;
};
int run_stats(const StatsOptions& opt, std::ostream& out);

struct FuseOptions {
    fs::path p;
    fs::path q;
    std::optional<fs::path> out;
};
int run_fuse(const FuseOptions& opt, std::ostream& out);

// ---- watch ----------------------------------------------------------------

struct WatchOptions {
    fs::path in;
    fs::path out;
    std::optional<fs::path> config;
    double interval_seconds = 120.0;
    int margin = 10;
    /// Stop after this many poll cycles; 0 runs until `stop` is set.
    int max_cycles = 0;
};

inline constexpr const char* kManifestName = "manifest.jsonl";

/// Image file names already recorded in the manifest under `out`.
std::vector<std::string> manifest_sources(const fs::path& out);

/// One poll cycle: processes every not-yet-recorded image. Returns the number
/// of manifest lines appended.
std::size_t watch_cycle(const WatchOptions& opt, const DetectorConfig& cfg);

int run_watch(const WatchOptions& opt, const std::atomic<bool>& stop);

/// Runs `body`, mapping library errors to kInputError and anything else to
/// kInternalError, logging the message.
template <typename F>
int guarded(F&& body);

}  // namespace mothscan::cli

#include "cli/guarded.inl"
