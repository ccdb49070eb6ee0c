// Copyright 2026 The cryssl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cryssl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cryssl/error.hpp"

namespace cryssl {

double binary_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("auc: scores/labels length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (double s : scores)
    if (!std::isfinite(s)) throw ValidationError("auc: non-finite score");
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      const int y = labels[idx[k]];
      if (y != 0 && y != 1) throw ValidationError("auc: labels must be 0 or 1");
      if (y == 1) {
        pos_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("auc: both classes must be present");
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

std::vector<double> per_class_auc(std::span<const double> scores, std::span<const int> labels,
                                  int num_classes) {
  if (num_classes < 2) throw ValidationError("auc: need at least 2 classes");
  const std::size_t n = labels.size();
  if (scores.size() != n * static_cast<std::size_t>(num_classes))
    throw ValidationError("auc: score matrix shape mismatch");
  std::vector<double> col(n);
  std::vector<int> y(n);
  std::vector<double> out;
  for (int k = 0; k < num_classes; ++k) {
    bool present = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] < 0 || labels[i] >= num_classes) throw ValidationError("auc: label out of range");
      col[i] = scores[i * num_classes + k];
      y[i] = labels[i] == k ? 1 : 0;
      present = present || y[i] == 1;
    }
    if (!present) throw ValidationError("auc: class " + std::to_string(k) + " absent");
    out.push_back(binary_auc(col, y));
  }
  return out;
}

double macro_ovr_auc(std::span<const double> scores, std::span<const int> labels, int num_classes) {
  const auto a = per_class_auc(scores, labels, num_classes);
  return std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
}

}  // namespace cryssl
