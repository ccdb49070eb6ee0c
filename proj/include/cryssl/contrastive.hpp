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

#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace cryssl {

struct NtXentResult {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // d loss / d z, same shape as z (empty if not requested)
};

// SimCLR normalised-temperature cross entropy over 2N rows:
//   loss = 1/(2N) sum_i -log( exp(cos(z_i, z_p(i))/tau) / sum_{k != i} exp(cos(z_i, z_k)/tau) )
// Rows are L2-normalised internally. partners[i] is the index of row i's
// positive; the two-argument overload pairs row i with row i+N.
NtXentResult nt_xent_loss(const Eigen::MatrixXd& z, std::span<const int> partners, double tau,
                          bool want_grad = true);
NtXentResult nt_xent_loss(const Eigen::MatrixXd& z, double tau, bool want_grad = true);

// i <-> i+N for 2N rows.
std::vector<int> half_split_partners(int rows);

}  // namespace cryssl
