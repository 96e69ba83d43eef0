#include "fbsde/quadrature.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "fbsde/errors.hpp"

namespace fbsde {

// Golub-Welsch on the Jacobi matrix of the monic probabilists' Hermite
// polynomials: zero diagonal, off-diagonal sqrt(k).
void GaussHermite::one_dimensional(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    if (order < 2) throw PreconditionError("Gauss-Hermite order must be at least 2");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        J(k, k - 1) = std::sqrt(static_cast<double>(k));
        J(k - 1, k) = J(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    const auto& vals = eig.eigenvalues();
    const auto& vecs = eig.eigenvectors();

    std::vector<double> raw_nodes(static_cast<std::size_t>(order));
    std::vector<double> raw_weights(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
        raw_nodes[static_cast<std::size_t>(i)] = vals(i);
        raw_weights[static_cast<std::size_t>(i)] = vecs(0, i) * vecs(0, i);
    }

    nodes.assign(static_cast<std::size_t>(order), 0.0);
    weights.assign(static_cast<std::size_t>(order), 0.0);
    for (int i = 0; i < order; ++i) {
        const auto a = static_cast<std::size_t>(i);
        const auto b = static_cast<std::size_t>(order - 1 - i);
        nodes[a] = 0.5 * (raw_nodes[a] - raw_nodes[b]);
        weights[a] = 0.5 * (raw_weights[a] + raw_weights[b]);
    }
    if (order % 2 == 1) nodes[static_cast<std::size_t>(order / 2)] = 0.0;
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (auto& w : weights) w /= total;
}

GaussHermite::GaussHermite(int order, int dim) : order_(order), dim_(dim) {
    if (dim < 1) throw PreconditionError("Gauss-Hermite dimension must be at least 1");
    std::vector<double> x1, w1;
    one_dimensional(order, x1, w1);

    std::size_t total = 1;
    for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(order);
    nodes_.resize(total * static_cast<std::size_t>(dim));
    weights_.resize(total);

    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (std::size_t q = 0; q < total; ++q) {
        double w = 1.0;
        for (int k = 0; k < dim; ++k) {
            const auto j = static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]);
            nodes_[q * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)] = x1[j];
            w *= w1[j];
        }
        weights_[q] = w;
        for (int k = dim - 1; k >= 0; --k) {
            auto& c = idx[static_cast<std::size_t>(k)];
            if (++c < order) break;
            c = 0;
        }
    }
}

}  // namespace fbsde
