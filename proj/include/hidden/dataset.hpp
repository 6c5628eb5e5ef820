#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "hidden/linalg.hpp"

namespace hidden {

using LabelMatrix = Table<std::uint8_t>;

// Multi-label documents: one dense feature row and one binary label row per
// document.  Label ids are dense in [0, label_count).
struct Dataset {
  std::size_t feature_dim = 0;
  std::size_t label_count = 0;
  std::vector<std::string> ids;
  Mat features;       // size() x feature_dim
  LabelMatrix labels; // size() x label_count

  std::size_t size() const { return ids.size(); }

  void validate() const {
    if (features.rows != size() || labels.rows != size())
      throw std::invalid_argument("dataset: row count mismatch");
    if (features.cols != feature_dim || labels.cols != label_count)
      throw std::invalid_argument("dataset: column count mismatch");
    if (!all_finite({features.a.data(), features.a.size()}))
      throw std::invalid_argument("dataset: non-finite feature value");
    for (std::uint8_t v : labels.a) {
      if (v > 1) throw std::invalid_argument("dataset: label entry not in {0,1}");
    }
  }

  std::vector<int> active_labels(std::size_t i) const {
    std::vector<int> out;
    const auto row = labels.row(i);
    for (std::size_t l = 0; l < row.size(); ++l) {
      if (row[l]) out.push_back(static_cast<int>(l));
    }
    return out;
  }

  Dataset select(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.feature_dim = feature_dim;
    out.label_count = label_count;
    out.ids.reserve(idx.size());
    out.features = Mat(idx.size(), feature_dim);
    out.labels = LabelMatrix(idx.size(), label_count);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const std::size_t i = idx[r];
      if (i >= size()) throw std::out_of_range("dataset: select index out of range");
      out.ids.push_back(ids[i]);
      auto dst = out.features.row(r);
      auto src = features.row(i);
      std::copy(src.begin(), src.end(), dst.begin());
      auto ldst = out.labels.row(r);
      auto lsrc = labels.row(i);
      std::copy(lsrc.begin(), lsrc.end(), ldst.begin());
    }
    return out;
  }
};

}  // namespace hidden
