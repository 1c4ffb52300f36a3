#include "advstat/distances.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace advstat {

namespace {

void check_pair(const SampleSet& x, const SampleSet& y) {
  if (x.rows() < 1 || y.rows() < 1) {
    throw std::invalid_argument("sample sets must contain at least one row");
  }
  if (x.cols() != y.cols()) {
    throw std::invalid_argument(
        "sample set dimension mismatch: " + std::to_string(x.cols()) +
        " vs " + std::to_string(y.cols()));
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("sample sets must be finite");
  }
}

// Total order on sample sets (row count, then row-major content). Fixing the
// argument order fixes every accumulation order, which makes the distances
// bitwise symmetric.
bool canonical_order_swapped(const SampleSet& x, const SampleSet& y) {
  if (x.rows() != y.rows()) return x.rows() > y.rows();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (x(i, j) != y(i, j)) return x(i, j) > y(i, j);
    }
  }
  return false;
}

}  // namespace

Eigen::VectorXd softmax(const Eigen::VectorXd& v) {
  if (v.size() < 1) throw std::invalid_argument("softmax of empty vector");
  if (!v.allFinite()) throw std::invalid_argument("softmax input must be finite");
  const double top = v.maxCoeff();
  Eigen::VectorXd e = (v.array() - top).exp();
  return e / e.sum();
}

double gaussian_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("kernel bandwidth must be > 0");
  if (u.size() != v.size()) {
    throw std::invalid_argument("kernel argument dimension mismatch");
  }
  return std::exp(-(u - v).squaredNorm() / (2.0 * sigma * sigma));
}

double median_heuristic(const SampleSet& x, const SampleSet& y) {
  check_pair(x, y);
  const Eigen::Index pooled = x.rows() + y.rows();
  if (pooled < 2) {
    throw std::invalid_argument("median heuristic needs a pool of >= 2 points");
  }
  auto row = [&](Eigen::Index i) {
    return i < x.rows() ? x.row(i) : y.row(i - x.rows());
  };
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(pooled) * (pooled - 1) / 2);
  for (Eigen::Index i = 0; i < pooled; ++i) {
    for (Eigen::Index j = i + 1; j < pooled; ++j) {
      const double d = (row(i) - row(j)).norm();
      if (d > 0.0) dists.push_back(d);
    }
  }
  if (dists.empty()) return 1.0;
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
  const double upper = dists[mid];
  if (dists.size() % 2 == 1) return upper;
  const double lower = *std::max_element(dists.begin(), dists.begin() + mid);
  return 0.5 * (lower + upper);
}

double energy_distance(const SampleSet& x, const SampleSet& y) {
  check_pair(x, y);
  if (canonical_order_swapped(x, y)) return energy_distance(y, x);

  const Eigen::Index n = x.rows();
  const Eigen::Index m = y.rows();
  double cross = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      cross += (x.row(i) - y.row(j)).norm();
    }
  }
  // i = j contributes 0, so only strict pairs are accumulated, doubled.
  double within_x = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      within_x += (x.row(i) - x.row(j)).norm();
    }
  }
  double within_y = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      within_y += (y.row(i) - y.row(j)).norm();
    }
  }
  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  const double stat = 2.0 * cross / (nd * md) - 2.0 * within_x / (nd * nd) -
                      2.0 * within_y / (md * md);
  return std::sqrt(std::max(0.0, stat));
}

double mmd_biased(const SampleSet& x, const SampleSet& y,
                  const KernelSpec& kernel) {
  check_pair(x, y);
  if (kernel.sigma <= 0.0) {
    throw std::invalid_argument("kernel bandwidth must be > 0");
  }
  if (canonical_order_swapped(x, y)) return mmd_biased(y, x, kernel);

  const double inv = 1.0 / (2.0 * kernel.sigma * kernel.sigma);
  const Eigen::Index n = x.rows();
  const Eigen::Index m = y.rows();
  double cross = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      cross += std::exp(-(x.row(i) - y.row(j)).squaredNorm() * inv);
    }
  }
  // Diagonal terms are exp(0) = 1 exactly; strict pairs doubled.
  double within_x = static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      within_x += 2.0 * std::exp(-(x.row(i) - x.row(j)).squaredNorm() * inv);
    }
  }
  double within_y = static_cast<double>(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      within_y += 2.0 * std::exp(-(y.row(i) - y.row(j)).squaredNorm() * inv);
    }
  }
  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  const double stat =
      within_x / (nd * nd) + within_y / (md * md) - 2.0 * cross / (nd * md);
  return std::sqrt(std::max(0.0, stat));
}

}  // namespace advstat
