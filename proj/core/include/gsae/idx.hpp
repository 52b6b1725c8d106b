#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gsae {

// MNIST-style IDX image stack. Pixels are stored one flattened image per
// column, scaled from the on-disk u8 range to [0, 1].
struct IdxImages {
  Eigen::MatrixXd pixels;  // (image_rows * image_cols) x count
  int image_rows = 0;
  int image_cols = 0;
};

// Image file: magic 0x00000803, big-endian count/rows/cols, u8 payload.
IdxImages load_idx_images(const std::string& path);

// Label file: magic 0x00000801, big-endian count, u8 payload.
std::vector<int> load_idx_labels(const std::string& path);

// Inverse of the loaders, quantizing pixels back to u8. Used to build
// fixtures; round trips through load are exact on u8-representable data.
void save_idx_images(const std::string& path, const IdxImages& images);
void save_idx_labels(const std::string& path, const std::vector<int>& labels);

}  // namespace gsae
