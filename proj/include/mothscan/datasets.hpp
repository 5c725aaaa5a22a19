#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mothscan/eval.hpp"
#include "mothscan/raster.hpp"

namespace mothscan {

enum class SplitFlag { train, test };

struct ImageRecord {
    std::string image_id;
    std::string file_path;  // relative to the annotation file's directory
    int width = 0;
    int height = 0;
    std::optional<std::string> night;  // YYYY-MM-DD of the evening the session started
    std::optional<SplitFlag> split;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct BoxRecord {
    std::string image_id;
    Box box;
    std::optional<std::string> species;
    std::optional<double> score;  // set on prediction files only

    friend bool operator==(const BoxRecord&, const BoxRecord&) = default;
};

struct AnnotationFile {
    std::vector<ImageRecord> images;
    std::vector<BoxRecord> boxes;

    /// Throws ValidationError naming the first offending record.
    void validate() const;
    const ImageRecord* find_image(std::string_view image_id) const;

    friend bool operator==(const AnnotationFile&, const AnnotationFile&) = default;
};

/// Parses and validates. Schema violations throw ParseError, broken
/// invariants ValidationError; both name the record at fault.
AnnotationFile parse_annotations(std::string_view text);
AnnotationFile load_annotations(const std::filesystem::path& path);

/// Canonical form: two-space indented JSON, records in stored order, nulls
/// written explicitly.
std::string serialize_annotations(const AnnotationFile& a);
void save_annotations(const std::filesystem::path& path, const AnnotationFile& a);

struct SplitSpec {
    enum class Mode { by_night, by_flag };
    Mode mode = Mode::by_flag;
    std::vector<std::string> train_nights;
};

struct SplitResult {
    AnnotationFile train;
    AnnotationFile test;
};

SplitResult split(const AnnotationFile& a, const SplitSpec& s);

struct DatasetStats {
    std::size_t n_images = 0;
    std::size_t n_boxes = 0;
    std::size_t n_species = 0;
    std::map<std::size_t, std::size_t> boxes_per_image;  // box count -> number of images
    std::map<int, double> area_quantiles;                // percent -> area, linear interpolation
};

inline constexpr int kStatsQuantiles[] = {5, 25, 50, 75, 95};

DatasetStats stats(const AnnotationFile& a);
std::string format_stats_table(const DatasetStats& s);
std::string stats_to_json(const DatasetStats& s);

/// Ground truth in the evaluator's shape, one entry per image, stored order.
std::vector<GroundTruthImage> to_ground_truth(const AnnotationFile& a);
/// Predictions grouped per image; every box must carry a score.
std::vector<ImagePredictions> to_predictions(const AnnotationFile& a);

}  // namespace mothscan
