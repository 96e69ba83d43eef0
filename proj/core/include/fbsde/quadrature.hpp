#pragma once

#include <cstddef>
#include <vector>

namespace fbsde {

/// Gauss-Hermite rule for a standard normal variable, tensorized over
/// `dim` independent coordinates. Weights are normalized to sum to 1, so
/// sum_q w_q g(xi_q) approximates E[g(xi)] with xi ~ N(0, I_dim).
class GaussHermite {
public:
    GaussHermite() = default;
    /// `order` nodes per coordinate (>= 2); total size order^dim.
    GaussHermite(int order, int dim);

    [[nodiscard]] int order() const { return order_; }
    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] std::size_t size() const { return weights_.size(); }
    [[nodiscard]] double weight(std::size_t q) const { return weights_[q]; }
    /// Coordinate k of node q.
    [[nodiscard]] double node(std::size_t q, int k) const {
        return nodes_[q * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(k)];
    }
    [[nodiscard]] const std::vector<double>& weights() const { return weights_; }

    /// One-dimensional nodes and weights (symmetric; an odd order has an exact 0 node).
    static void one_dimensional(int order, std::vector<double>& nodes, std::vector<double>& weights);

private:
    int order_ = 0;
    int dim_ = 0;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

}  // namespace fbsde
