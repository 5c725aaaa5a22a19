#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace mothscan {

/// Class probabilities: non-negative, summing to 1 within 1e-9.
class ProbVector {
public:
    /// Throws ValidationError when the invariant does not hold.
    explicit ProbVector(std::vector<double> probs);

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const noexcept { return probs_[i]; }
    std::span<const double> values() const noexcept { return probs_; }

    static ProbVector uniform(std::size_t classes);

private:
    std::vector<double> probs_;
};

struct OneHotLabel {
    std::size_t class_index = 0;
};

inline constexpr double kLogClamp = 1e-12;

/// -log p[y], with p[y] clamped below at 1e-12.
double cross_entropy(const ProbVector& p, OneHotLabel y);

/// Mean of the two cross-entropies, equal to -log sqrt(p[y] q[y]).
double final_loss(const ProbVector& p, const ProbVector& q, OneHotLabel y);

/// r_i proportional to sqrt(p_i q_i); uniform when every product is zero.
ProbVector fuse_geometric(const ProbVector& p, const ProbVector& q);

ProbVector prob_vector_from_json(std::string_view text);

}  // namespace mothscan
