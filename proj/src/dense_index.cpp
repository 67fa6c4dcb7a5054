#include "semidx/dense_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "semidx/io_util.hpp"

namespace semidx {

namespace {
constexpr char kMagic[5] = {'D', 'V', 'E', 'C', '1'};
}

DenseIndex DenseIndex::from_vectors(std::size_t dim,
                                    std::vector<std::string> ids,
                                    std::vector<float> data) {
  if (dim == 0) throw std::runtime_error("vector dimension must be >= 1");
  if (data.size() != ids.size() * dim) {
    throw std::runtime_error("vector payload size does not match count * dim");
  }
  std::unordered_set<std::string> seen;
  for (const std::string& id : ids) {
    if (id.empty() || !seen.insert(id).second) {
      throw std::runtime_error("empty or duplicate doc id: " + id);
    }
  }
  for (float v : data) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("non-finite vector component");
    }
  }
  DenseIndex index;
  index.dim_ = dim;
  index.doc_ids_ = std::move(ids);
  index.data_ = std::move(data);
  return index;
}

DenseIndex DenseIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open vector file: " + path);
  char magic[5];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path + ": not a DVEC1 vector file");
  }
  const std::uint32_t count = read_le<std::uint32_t>(in, "vector count");
  const std::uint32_t dim = read_le<std::uint32_t>(in, "vector dimension");
  if (dim == 0) throw std::runtime_error(path + ": zero vector dimension");

  std::vector<std::string> ids;
  ids.reserve(count);
  std::unordered_set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string id;
    int c;
    while ((c = in.get()) != 0) {
      if (c == EOF) {
        throw std::runtime_error(path + ": unexpected end of file in doc ids");
      }
      id += static_cast<char>(c);
    }
    if (id.empty()) throw std::runtime_error(path + ": empty doc id");
    if (!seen.insert(id).second) {
      throw std::runtime_error(path + ": duplicate doc id: " + id);
    }
    ids.push_back(std::move(id));
  }

  std::vector<float> data(static_cast<std::size_t>(count) * dim);
  read_f32_array(in, data.data(), data.size(), "vector payload");
  if (in.peek() != EOF) {
    throw std::runtime_error(path + ": payload larger than count * dim");
  }
  DenseIndex index;
  index.dim_ = dim;
  index.doc_ids_ = std::move(ids);
  index.data_ = std::move(data);
  return index;
}

void DenseIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vector file: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(size()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
  for (const std::string& id : doc_ids_) {
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    out.put('\0');
  }
  write_f32_array(out, data_.data(), data_.size());
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::span<const float> DenseIndex::vector(std::size_t row) const {
  if (row >= size()) throw std::out_of_range("vector row out of range");
  return {data_.data() + row * dim_, dim_};
}

std::vector<Neighbor> DenseIndex::query(std::span<const float> q,
                                        std::size_t k) const {
  if (k < 1) throw std::runtime_error("query k must be >= 1");
  if (q.size() != dim_) {
    throw std::runtime_error("query dimension " + std::to_string(q.size()) +
                             " does not match index dimension " +
                             std::to_string(dim_));
  }
  // Squared distances accumulated in double; the square root is taken only
  // for the reported value so the ordering is exact.
  std::vector<double> dist2(size());
  for (std::size_t row = 0; row < size(); ++row) {
    const float* v = data_.data() + row * dim_;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double d = static_cast<double>(q[j]) - static_cast<double>(v[j]);
      acc += d * d;
    }
    dist2[row] = acc;
  }
  std::vector<std::uint32_t> order(size());
  for (std::size_t i = 0; i < size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  auto closer = [&](std::uint32_t a, std::uint32_t b) {
    if (dist2[a] != dist2[b]) return dist2[a] < dist2[b];
    return doc_ids_[a] < doc_ids_[b];
  };
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + take, order.end(), closer);
  order.resize(take);

  std::vector<Neighbor> result;
  result.reserve(take);
  for (std::uint32_t row : order) {
    const double d = std::max(std::sqrt(dist2[row]), kMinDistance);
    result.push_back(Neighbor{doc_ids_[row], d, -d});
  }
  return result;
}

}  // namespace semidx
