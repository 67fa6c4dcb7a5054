#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semidx/types.hpp"

namespace semidx {

// Fixed-dimension document embeddings with exact Euclidean k-NN retrieval.
// Vectors are stored row-major in one contiguous float buffer.
class DenseIndex {
 public:
  // DVEC1 file: magic "DVEC1" (5 bytes), little-endian u32 count, u32 dim,
  // count null-terminated doc id strings, then count*dim little-endian
  // 32-bit floats row-major. Loading is lossless (bit-exact floats).
  static DenseIndex load(const std::string& path);
  void save(const std::string& path) const;

  // Builds from in-memory rows; data.size() must equal ids.size() * dim.
  static DenseIndex from_vectors(std::size_t dim, std::vector<std::string> ids,
                                 std::vector<float> data);

  // Exact top-k by Euclidean distance ascending, ties by doc id ascending.
  // Distances are reported raw (not rescaled to [0,1]) and clamped to
  // >= kMinDistance so inverse-square weighting stays finite.
  std::vector<Neighbor> query(std::span<const float> q, std::size_t k) const;

  std::size_t size() const { return doc_ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  std::span<const float> vector(std::size_t row) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> doc_ids_;
  std::vector<float> data_;
};

}  // namespace semidx
