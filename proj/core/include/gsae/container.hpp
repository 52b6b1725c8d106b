#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "gsae/autoencoder.hpp"
#include "gsae/synth.hpp"

namespace gsae {

// Flat binary matrix container:
//   8-byte magic "GSAEBIN1"
//   u64 little-endian header length
//   JSON header {"format_version": 1,
//                "arrays": [{"name", "rows", "cols"}, ...],
//                "meta": {...}}
//   per array, rows*cols f64 little-endian values in row-major order
// Round trips are bit-exact: doubles are moved as raw IEEE-754 bit patterns.
struct NamedMatrix {
  std::string name;
  Eigen::MatrixXd matrix;
};

struct Container {
  std::vector<NamedMatrix> arrays;
  nlohmann::json meta = nlohmann::json::object();

  const Eigen::MatrixXd* find(const std::string& name) const;
  // Throws IoError naming the missing array.
  const Eigen::MatrixXd& require(const std::string& name) const;
};

void save_container(const std::string& path, const Container& container);
Container load_container(const std::string& path);

// Dataset as a container: arrays dictionary/observations/codes/noise, meta
// holds the group structure, optional SNR, and the ground-truth supports.
void save_dataset(const std::string& path, const Dataset& dataset,
                  const nlohmann::json& extra_meta = nlohmann::json::object());
Dataset load_dataset(const std::string& path);

struct Checkpoint {
  AutoencoderState state;
  int epoch = 0;
};

// Checkpoint as a container: the weight matrix plus lambda, unroll depth,
// prox kind, optional pinned step, and the epoch counter.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

// Binary 8-bit PGM dump of a matrix, min/max scaled, for quick viewing.
void save_pgm(const std::string& path, const Eigen::MatrixXd& matrix);

}  // namespace gsae
