#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "mothscan/raster.hpp"

namespace mothscan {

/// Non-negative per-pixel importance scores over an image.
class SaliencyMap {
public:
    /// Throws ValidationError on negative or non-finite values.
    explicit SaliencyMap(GrayImage values);

    int width() const noexcept { return values_.width(); }
    int height() const noexcept { return values_.height(); }
    double at(int x, int y) const noexcept { return values_.at(x, y); }
    const GrayImage& values() const noexcept { return values_; }

private:
    GrayImage values_;
};

/// Gradient maps of selected feature dimensions with respect to the input
/// image, one scalar map per dimension.
class GradientMapSet {
public:
    /// Throws ShapeError when map sizes differ or counts mismatch and
    /// ValidationError on an empty set or duplicate dimension indices.
    GradientMapSet(std::vector<int> dims, std::vector<GrayImage> maps);

    const std::vector<int>& dims() const noexcept { return dims_; }
    const std::vector<GrayImage>& maps() const noexcept { return maps_; }
    int width() const noexcept { return maps_.front().width(); }
    int height() const noexcept { return maps_.front().height(); }

    /// Keeps only the listed dimensions, in this set's order. Throws
    /// ValidationError when nothing remains.
    GradientMapSet restricted_to(const std::vector<int>& keep) const;

private:
    std::vector<int> dims_;
    std::vector<GrayImage> maps_;
};

/// Reads `dims.json` plus `grad_<dim>.bin` float rasters from a directory.
GradientMapSet load_gradient_maps(const std::filesystem::path& dir);
void save_gradient_maps(const std::filesystem::path& dir, const GradientMapSet& set);

/// Weights of a linear classifier, classes x dim, row-major.
struct FeatureWeights {
    int classes = 0;
    int dim = 0;
    std::vector<double> weights;

    double at(int c, int d) const noexcept { return weights[static_cast<std::size_t>(c) * dim + d]; }
    void validate() const;
};

FeatureWeights feature_weights_from_json(std::string_view text);
FeatureWeights load_feature_weights(const std::filesystem::path& path);

struct PartConfig {
    int k = 4;
    double peak_min_distance = 8.0;
    bool use_rgb = true;
    int max_iters = 100;
    double tol = 1e-6;

    void validate() const;
};

struct Peak {
    int x = 0;
    int y = 0;

    friend bool operator==(const Peak&, const Peak&) = default;
};

/// Union over classes of the dimensions whose absolute weight exceeds
/// `threshold`, ascending.
std::vector<int> select_feature_dims(const FeatureWeights& w, double threshold);

/// Per-pixel mean of absolute gradients over all dimensions in the set.
SaliencyMap saliency_from_gradmaps(const GradientMapSet& g);

/// Min-max normalize to [0, 1] and zero everything strictly below the mean
/// of the normalized map. Constant maps become all zeros.
SaliencyMap sparsify_saliency(const SaliencyMap& m);

/// Greedy peak picking over positive pixels: highest value first (ties by
/// row, then column), skipping pixels within `min_distance` of a chosen peak.
std::vector<Peak> find_peaks(const SaliencyMap& m, int k, double min_distance);

/// Result of peak-seeded Lloyd clustering, kept for inspection and tests.
struct PartClustering {
    std::vector<Peak> points;             // pixels with saliency > 0, row-major order
    std::vector<int> labels;              // cluster per point
    std::vector<std::vector<double>> centroids;
    std::vector<double> objective;        // after each assignment step
    int iterations = 0;
};

PartClustering cluster_saliency(const SaliencyMap& m, const ColorImage& img, const PartConfig& cfg);

/// One tight box per non-empty cluster, in cluster (peak) order.
std::vector<Box> estimate_parts(const SaliencyMap& m, const ColorImage& img, const PartConfig& cfg);

}  // namespace mothscan
