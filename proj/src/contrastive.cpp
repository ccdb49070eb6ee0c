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

#include "cryssl/contrastive.hpp"

#include <cmath>
#include <limits>

#include "cryssl/error.hpp"

namespace cryssl {

std::vector<int> half_split_partners(int rows) {
  if (rows % 2 != 0) throw ShapeError("nt_xent: row count must be even");
  const int n = rows / 2;
  std::vector<int> p(static_cast<std::size_t>(rows));
  for (int i = 0; i < n; ++i) {
    p[static_cast<std::size_t>(i)] = i + n;
    p[static_cast<std::size_t>(i + n)] = i;
  }
  return p;
}

NtXentResult nt_xent_loss(const Eigen::MatrixXd& z, double tau, bool want_grad) {
  const auto partners = half_split_partners(static_cast<int>(z.rows()));
  return nt_xent_loss(z, partners, tau, want_grad);
}

NtXentResult nt_xent_loss(const Eigen::MatrixXd& z, std::span<const int> partners, double tau,
                          bool want_grad) {
  const Eigen::Index m = z.rows();
  if (m < 4) throw ValidationError("nt_xent: need at least two pairs (N >= 2)");
  if (static_cast<Eigen::Index>(partners.size()) != m)
    throw ShapeError("nt_xent: partner map size mismatch");
  if (!(tau > 0.0)) throw ValidationError("nt_xent: temperature must be positive");
  for (Eigen::Index i = 0; i < m; ++i) {
    const int p = partners[static_cast<std::size_t>(i)];
    if (p < 0 || p >= m || p == i || partners[static_cast<std::size_t>(p)] != i)
      throw ValidationError("nt_xent: partner map is not a perfect matching");
  }

  Eigen::VectorXd norms = z.rowwise().norm();
  for (Eigen::Index i = 0; i < m; ++i)
    if (!(norms(i) > 0.0)) throw ValidationError("nt_xent: zero-norm embedding row");
  const Eigen::MatrixXd zn = norms.cwiseInverse().asDiagonal() * z;
  const Eigen::MatrixXd s = (zn * zn.transpose()) / tau;

  NtXentResult out;
  Eigen::MatrixXd g;
  if (want_grad) g = Eigen::MatrixXd::Zero(m, m);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < m; ++k)
      if (k != i) mx = std::max(mx, s(i, k));
    double denom = 0.0;
    for (Eigen::Index k = 0; k < m; ++k)
      if (k != i) denom += std::exp(s(i, k) - mx);
    const double lse = mx + std::log(denom);
    const Eigen::Index p = partners[static_cast<std::size_t>(i)];
    total += lse - s(i, p);
    if (want_grad) {
      for (Eigen::Index k = 0; k < m; ++k)
        if (k != i) g(i, k) = std::exp(s(i, k) - lse);
      g(i, p) -= 1.0;
    }
  }
  out.loss = total / static_cast<double>(m);
  if (want_grad) {
    g /= static_cast<double>(m);
    // s_ik = zn_i . zn_k / tau
    const Eigen::MatrixXd dzn = (g + g.transpose()) * zn / tau;
    out.grad.resize(m, z.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
      const double proj = zn.row(i).dot(dzn.row(i));
      out.grad.row(i) = (dzn.row(i) - proj * zn.row(i)) / norms(i);
    }
  }
  return out;
}

}  // namespace cryssl
