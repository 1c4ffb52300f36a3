#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace test_util {

// Fresh directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            (prefix + "-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path mnist_dir() {
  const char* env = std::getenv("ADVSTAT_MNIST_DIR");
  return env ? std::filesystem::path(env)
             : std::filesystem::path("/root/data/mnist");
}

inline bool mnist_available() {
  return std::filesystem::exists(mnist_dir() / "t10k-images-idx3-ubyte") &&
         std::filesystem::exists(mnist_dir() / "t10k-labels-idx1-ubyte");
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                                     std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = scale * gauss(rng);
    }
  }
  return m;
}

}  // namespace test_util
