#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mmw2s/common/error.hpp"
#include "mmw2s/common/rng.hpp"

namespace mmw2s {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// Named parameter arrays in insertion order. Every array is stored as a
/// matrix; vectors are 1 x n.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Mat value;
  };

  std::size_t add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    require(!index_.count(name), ErrorCode::kInvalidConfig, "duplicate parameter name " + name);
    index_.emplace(name, entries_.size());
    entries_.push_back({name, Mat::Zero(rows, cols)});
    return entries_.size() - 1;
  }

  std::size_t size() const { return entries_.size(); }
  const Entry& entry(std::size_t k) const { return entries_[k]; }
  const Mat& operator[](std::size_t k) const { return entries_[k].value; }
  Mat& mutable_value(std::size_t k) { return entries_[k].value; }

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), ErrorCode::kShapeMismatch, "unknown parameter " + name);
    return it->second;
  }

  /// Replaces the values of an existing array; the shape must not change.
  void assign(std::size_t k, const Mat& value) {
    require(value.rows() == entries_[k].value.rows() && value.cols() == entries_[k].value.cols(),
            ErrorCode::kShapeMismatch, "shape change for parameter " + entries_[k].name);
    entries_[k].value = value;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
    return n;
  }

  std::vector<Mat> zeros_like() const {
    std::vector<Mat> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(Mat::Zero(e.value.rows(), e.value.cols()));
    return out;
  }

  bool same_shapes(const std::vector<Mat>& arrays) const {
    if (arrays.size() != entries_.size()) return false;
    for (std::size_t k = 0; k < arrays.size(); ++k) {
      if (arrays[k].rows() != entries_[k].value.rows() || arrays[k].cols() != entries_[k].value.cols()) return false;
    }
    return true;
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Gradient arrays aligned with a ParamStore.
using Gradients = std::vector<Mat>;

inline void add_into(Gradients& acc, const Gradients& g) {
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += g[k];
}

inline void scale(Gradients& g, double s) {
  for (auto& m : g) m *= s;
}

/// Glorot uniform.
inline void init_xavier(Mat& w, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform(-a, a);
}

inline void init_normal(Mat& w, double stddev, Rng& rng) {
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = stddev * rng.normal();
}

}  // namespace mmw2s
