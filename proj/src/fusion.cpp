#include "mothscan/fusion.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "mothscan/errors.hpp"

namespace mothscan {

ProbVector::ProbVector(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ValidationError("probability vector is empty");
    double sum = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0) throw ValidationError("probabilities must be finite and >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("probabilities sum to " + std::to_string(sum) + ", expected 1");
    }
}

ProbVector ProbVector::uniform(std::size_t classes) {
    return ProbVector(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

double cross_entropy(const ProbVector& p, OneHotLabel y) {
    if (y.class_index >= p.size()) throw ValidationError("label index out of range");
    return -std::log(std::max(p[y.class_index], kLogClamp));
}

double final_loss(const ProbVector& p, const ProbVector& q, OneHotLabel y) {
    if (p.size() != q.size()) throw ShapeError("probability vectors differ in length");
    return 0.5 * (cross_entropy(p, y) + cross_entropy(q, y));
}

ProbVector fuse_geometric(const ProbVector& p, const ProbVector& q) {
    if (p.size() != q.size()) throw ShapeError("probability vectors differ in length");
    std::vector<double> r(p.size());
    double total = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = std::sqrt(p[i] * q[i]);
        total += r[i];
    }
    if (!(total > 0.0)) return ProbVector::uniform(r.size());
    for (double& v : r) v /= total;
    return ProbVector(std::move(r));
}

ProbVector prob_vector_from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("probability vector: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("probability vector: expected a JSON array");
    std::vector<double> probs;
    for (const auto& v : doc) {
        if (!v.is_number()) throw ParseError("probability vector: entries must be numbers");
        probs.push_back(v.get<double>());
    }
    return ProbVector(std::move(probs));
}

}  // namespace mothscan
