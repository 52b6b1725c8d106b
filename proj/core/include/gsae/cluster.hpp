#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace gsae {

struct ClusterConfig {
  int k = 2;                // number of clusters
  int knn = 10;             // neighbor count for the similarity graph
  int kmeans_restarts = 10; // independent seedings, best kept by WCSS
  int max_iters = 100;      // Lloyd iteration cap per restart
  std::uint64_t seed = 0;

  void validate() const;
};

// Per column: clamp negatives to zero, then scale to unit sum. A column that
// is entirely nonpositive maps to the uniform vector.
Eigen::MatrixXd codes_nonneg_simplex(const Eigen::MatrixXd& x);

struct KmeansResult {
  Eigen::VectorXi labels;     // one entry per column of the input
  Eigen::MatrixXd centroids;  // features x k
  double wcss = 0.0;          // within-cluster sum of squared distances
  int iterations = 0;         // Lloyd iterations of the winning restart
};

// Lloyd's algorithm with greedy k-means++ seeding over columns of x, best of
// cfg.kmeans_restarts by WCSS. Deterministic given cfg.seed.
KmeansResult kmeans(const Eigen::MatrixXd& x, const ClusterConfig& cfg);

struct SpectralResult {
  Eigen::VectorXi labels;
  double bandwidth = 0.0;          // Gaussian kernel width actually used
  int num_components = 0;          // connected components of the kNN graph
  bool disconnected_warning = false; // more components than clusters
};

// Symmetric kNN graph (union rule) with Gaussian weights, symmetric
// normalized Laplacian, bottom-k dense eigenvectors, row-normalized
// embedding, then kmeans in the embedding space.
SpectralResult spectral_clustering(const Eigen::MatrixXd& x,
                                   const ClusterConfig& cfg);

// Pairwise Euclidean distance matrix over columns of x with rows and columns
// ordered by ascending label (ties keep input order). Empty labels keep the
// input order.
Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& x,
                                  const std::vector<int>& labels_for_sort);

// Fraction of points whose predicted cluster maps to their true class under
// the best one-to-one cluster-to-class assignment.
double clustering_accuracy(const std::vector<int>& predicted,
                           const std::vector<int>& truth);

}  // namespace gsae
