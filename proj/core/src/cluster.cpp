#include "gsae/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "gsae/errors.hpp"
#include "gsae/parallel.hpp"
#include "gsae/rng.hpp"

namespace gsae {

namespace {

constexpr int kBlock = 64;
constexpr std::uint64_t kTagKmeansRestart = 21;

struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(b)] = a;
  }
};

// Squared distances of every column of x to every centroid, then per-column
// argmin. Writes labels and returns the summed minimal squared distances.
double assign_labels(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centroids,
                     Eigen::VectorXi& labels) {
  const Eigen::Index n = x.cols();
  const Eigen::Index k = centroids.cols();
  const Eigen::VectorXd centroid_sq = centroids.colwise().squaredNorm();
  const std::size_t blocks = num_blocks(static_cast<std::size_t>(n), kBlock);
  std::vector<double> partial(blocks, 0.0);
  parallel_blocks(static_cast<std::size_t>(n), kBlock,
                  [&](std::size_t block, std::size_t begin, std::size_t end) {
    double local = 0.0;
    for (std::size_t ii = begin; ii < end; ++ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      const double point_sq = x.col(i).squaredNorm();
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d =
            point_sq + centroid_sq(c) - 2.0 * x.col(i).dot(centroids.col(c));
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      labels(i) = best;
      local += std::max(best_d, 0.0);
    }
    partial[block] = local;
  });
  double total = 0.0;
  for (const double p : partial) total += p;
  return total;
}

Eigen::MatrixXd seed_kmeanspp(const Eigen::MatrixXd& x, int k, Rng& rng) {
  const Eigen::Index n = x.cols();
  Eigen::MatrixXd centroids(x.rows(), k);
  Eigen::VectorXd picked = x.col(static_cast<Eigen::Index>(
      rng.below(static_cast<std::uint64_t>(n))));
  centroids.col(0) = picked;
  Eigen::VectorXd closest =
      (x.colwise() - picked).colwise().squaredNorm().transpose();
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    Eigen::Index pick;
    if (total > 0.0) {
      double t = rng.uniform(0.0, total);
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        t -= closest(i);
        if (t <= 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    picked = x.col(pick);
    centroids.col(c) = picked;
    closest = closest.cwiseMin(
        (x.colwise() - picked).colwise().squaredNorm().transpose());
  }
  return centroids;
}

}  // namespace

void ClusterConfig::validate() const {
  if (k < 2) throw ConfigError("k must be at least 2");
  if (knn < 1) throw ConfigError("knn must be at least 1");
  if (kmeans_restarts < 1) throw ConfigError("kmeans_restarts must be positive");
  if (max_iters < 1) throw ConfigError("max_iters must be positive");
}

Eigen::MatrixXd codes_nonneg_simplex(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x.cwiseMax(0.0);
  const double uniform = out.rows() > 0 ? 1.0 / static_cast<double>(out.rows())
                                        : 0.0;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double sum = out.col(j).sum();
    if (sum > 0.0) {
      out.col(j) /= sum;
    } else {
      out.col(j).setConstant(uniform);
    }
  }
  return out;
}

KmeansResult kmeans(const Eigen::MatrixXd& x, const ClusterConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = x.cols();
  if (n < cfg.k) throw ConfigError("kmeans needs at least k points");
  if (x.rows() == 0) throw DimensionError("kmeans needs at least one feature");
  if (!x.allFinite()) throw NumericError("kmeans input must be finite");

  KmeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  Eigen::VectorXi labels(n);
  Eigen::VectorXi prev_labels(n);

  for (int restart = 0; restart < cfg.kmeans_restarts; ++restart) {
    Rng rng = Rng::stream(cfg.seed, kTagKmeansRestart,
                          static_cast<std::uint64_t>(restart));
    Eigen::MatrixXd centroids = seed_kmeanspp(x, cfg.k, rng);
    double wcss = assign_labels(x, centroids, labels);
    double prev_wcss = wcss;
    int iterations = 0;
    for (int it = 0; it < cfg.max_iters; ++it) {
      prev_labels = labels;
      // Means of each cluster; empty clusters grab the point currently
      // farthest from its centroid so every restart keeps k centroids.
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(x.rows(), cfg.k);
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(cfg.k);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.col(labels(i)) += x.col(i);
        counts(labels(i)) += 1.0;
      }
      std::vector<Eigen::Index> taken;
      for (int c = 0; c < cfg.k; ++c) {
        if (counts(c) > 0.0) {
          centroids.col(c) = sums.col(c) / counts(c);
          continue;
        }
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (std::find(taken.begin(), taken.end(), i) != taken.end()) continue;
          const double d = (x.col(i) - centroids.col(labels(i))).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids.col(c) = x.col(far);
        taken.push_back(far);
      }
      wcss = assign_labels(x, centroids, labels);
      ++iterations;
      if (wcss > prev_wcss + 1e-9 * std::max(1.0, prev_wcss)) {
        throw NumericError("Lloyd objective increased");
      }
      prev_wcss = wcss;
      if (labels == prev_labels) break;
    }
    if (wcss < best.wcss) {
      best.wcss = wcss;
      best.labels = labels;
      best.centroids = centroids;
      best.iterations = iterations;
    }
  }
  return best;
}

SpectralResult spectral_clustering(const Eigen::MatrixXd& x,
                                   const ClusterConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = x.cols();
  if (n < cfg.k) throw ConfigError("spectral clustering needs at least k points");
  if (cfg.knn >= n) throw ConfigError("knn must be below the number of points");
  if (!x.allFinite()) throw NumericError("spectral input must be finite");

  // Dense pairwise squared distances; desk scale caps n at a few thousand.
  const Eigen::MatrixXd gram = x.transpose() * x;
  const Eigen::VectorXd sq = gram.diagonal();
  Eigen::MatrixXd dist2(n, n);
  parallel_blocks(static_cast<std::size_t>(n), kBlock,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t jj = begin; jj < end; ++jj) {
      const auto j = static_cast<Eigen::Index>(jj);
      dist2.col(j) = (sq.array() + sq(j) - 2.0 * gram.col(j).array()).max(0.0);
    }
  });

  std::vector<std::vector<Eigen::Index>> neighbors(static_cast<std::size_t>(n));
  parallel_blocks(static_cast<std::size_t>(n), kBlock,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (std::size_t ii = begin; ii < end; ++ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::partial_sort(order.begin(), order.begin() + cfg.knn + 1, order.end(),
                        [&](Eigen::Index a, Eigen::Index b) {
                          if (dist2(a, i) != dist2(b, i)) {
                            return dist2(a, i) < dist2(b, i);
                          }
                          return a < b;
                        });
      std::vector<Eigen::Index>& nbr = neighbors[ii];
      nbr.reserve(static_cast<std::size_t>(cfg.knn));
      for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(cfg.knn) + 1; ++r) {
        if (order[static_cast<std::size_t>(r)] == i) continue;
        nbr.push_back(order[static_cast<std::size_t>(r)]);
        if (static_cast<int>(nbr.size()) == cfg.knn) break;
      }
    }
  });

  std::vector<double> edge_dists;
  edge_dists.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(cfg.knn));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const Eigen::Index j : neighbors[static_cast<std::size_t>(i)]) {
      edge_dists.push_back(std::sqrt(dist2(j, i)));
    }
  }
  std::sort(edge_dists.begin(), edge_dists.end());
  const std::size_t mid = edge_dists.size() / 2;
  double sigma = edge_dists.size() % 2 == 1
                     ? edge_dists[mid]
                     : 0.5 * (edge_dists[mid - 1] + edge_dists[mid]);
  if (!(sigma > 0.0)) sigma = 1.0;

  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n, n);
  UnionFind components(static_cast<int>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const Eigen::Index j : neighbors[static_cast<std::size_t>(i)]) {
      const double w = std::exp(-dist2(j, i) / (2.0 * sigma * sigma));
      weights(i, j) = w;
      weights(j, i) = w;
      components.unite(static_cast<int>(i), static_cast<int>(j));
    }
  }

  SpectralResult result;
  result.bandwidth = sigma;
  std::vector<int> roots;
  for (int i = 0; i < static_cast<int>(n); ++i) {
    const int r = components.find(i);
    if (std::find(roots.begin(), roots.end(), r) == roots.end()) {
      roots.push_back(r);
    }
  }
  result.num_components = static_cast<int>(roots.size());
  result.disconnected_warning = result.num_components > cfg.k;

  Eigen::VectorXd degree = weights.rowwise().sum();
  Eigen::VectorXd dinv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dinv(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  }
  Eigen::MatrixXd laplacian =
      Eigen::MatrixXd::Identity(n, n) -
      dinv.asDiagonal() * weights * dinv.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian);
  if (es.info() != Eigen::Success) {
    throw NumericError("Laplacian eigendecomposition failed");
  }
  Eigen::MatrixXd embedding = es.eigenvectors().leftCols(cfg.k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }

  const KmeansResult km = kmeans(embedding.transpose(), cfg);
  result.labels = km.labels;
  return result;
}

Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& x,
                                  const std::vector<int>& labels_for_sort) {
  const Eigen::Index n = x.cols();
  if (!labels_for_sort.empty() &&
      static_cast<Eigen::Index>(labels_for_sort.size()) != n) {
    throw DimensionError("labels do not match the number of points");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  if (!labels_for_sort.empty()) {
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) {
                       return labels_for_sort[static_cast<std::size_t>(a)] <
                              labels_for_sort[static_cast<std::size_t>(b)];
                     });
  }
  Eigen::MatrixXd out(n, n);
  parallel_blocks(static_cast<std::size_t>(n), kBlock,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t jj = begin; jj < end; ++jj) {
      const auto j = static_cast<Eigen::Index>(jj);
      for (Eigen::Index i = 0; i < n; ++i) {
        out(i, j) = (x.col(order[static_cast<std::size_t>(i)]) -
                     x.col(order[static_cast<std::size_t>(j)]))
                        .norm();
      }
    }
  });
  return out;
}

double clustering_accuracy(const std::vector<int>& predicted,
                           const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw DimensionError("label vectors differ in length");
  }
  if (predicted.empty()) throw ConfigError("label vectors are empty");

  std::map<int, int> pred_ids, true_ids;
  for (const int p : predicted) pred_ids.emplace(p, 0);
  for (const int t : truth) true_ids.emplace(t, 0);
  int next = 0;
  for (auto& [key, id] : pred_ids) id = next++;
  next = 0;
  for (auto& [key, id] : true_ids) id = next++;

  const int side = std::max(static_cast<int>(pred_ids.size()),
                            static_cast<int>(true_ids.size()));
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(side, side);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    cost(pred_ids[predicted[i]], true_ids[truth[i]]) -= 1.0;
  }

  // Hungarian algorithm (potentials formulation) on the negated contingency
  // counts; 1-based arrays with row 0 as the virtual unassigned row.
  const int n = side;
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1,
                             std::numeric_limits<double>::infinity());
    std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = match[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  double agreed = 0.0;
  for (int j = 1; j <= n; ++j) {
    if (match[static_cast<std::size_t>(j)] > 0) {
      agreed -= cost(match[static_cast<std::size_t>(j)] - 1, j - 1);
    }
  }
  return agreed / static_cast<double>(predicted.size());
}

}  // namespace gsae
