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

#include <span>
#include <vector>

namespace cryssl {

// Mann-Whitney AUC with midranks: P(score_pos > score_neg) + 0.5 P(tie).
// Throws ValidationError unless both classes are present.
double binary_auc(std::span<const double> scores, std::span<const int> labels);

// Row-major N x K scores. Unweighted mean over classes of the one-vs-rest
// binary AUC. Throws if any class is absent.
double macro_ovr_auc(std::span<const double> scores, std::span<const int> labels, int num_classes);

std::vector<double> per_class_auc(std::span<const double> scores, std::span<const int> labels,
                                  int num_classes);

}  // namespace cryssl
