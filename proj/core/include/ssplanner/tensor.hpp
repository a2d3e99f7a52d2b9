// Copyright 2026 The ssplanner Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <vector>

namespace ssp {

class Rng;

// Dense row-major matrix of doubles. Row vectors are 1 x n. Training math
// runs in double so finite-difference gradient checks at h=1e-5 stay clean;
// checkpoints narrow to float32 on disk.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor full(int r, int c, double v);
  static Tensor row_vector(std::initializer_list<double> values);

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }

  size_t count() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  void zero_();
  void add_(const Tensor& o);
  void scale_(double k);
  double l2_norm() const;
  bool all_finite() const;

  // Draw every entry uniformly from [lo, hi).
  void fill_uniform(Rng& rng, double lo, double hi);
  // Snap every entry to the nearest float32. Freshly initialized parameters
  // then survive a float32 checkpoint round trip bit-exactly.
  void round_to_f32();

  bool operator==(const Tensor& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }
};

// Reverse-mode autodiff over a per-example computation graph. Nodes are owned
// by the graph and created in topological order; backward replays them in
// reverse. Parameters enter as leaves whose gradients accumulate into
// caller-owned tensors.
class Graph {
 public:
  struct Node {
    Tensor owned;             // result values (leaves point at external storage)
    const Tensor* val = nullptr;
    Tensor grad;
    Tensor* grad_sink = nullptr;
    std::function<void()> back;
  };
  using Var = Node*;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Parameter leaf; grad_sink may be null for frozen parameters.
  Var leaf(const Tensor& value, Tensor* grad_sink);
  // Constant input, no gradient.
  Var input(Tensor value);

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_rowvec(Var a, Var row);  // broadcast a 1 x n row over every row of a
  Var hadamard(Var a, Var b);
  Var affine(Var a, double scale, double shift);
  Var concat_rows(const std::vector<Var>& parts);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_rows(Var a, int r0, int r1);
  Var slice_cols(Var a, int c0, int c1);
  Var gather_rows(Var a, std::vector<int> ids);
  Var gather_cols(Var a, std::vector<int> ids);
  Var mean_rows(Var a);
  Var sum_all(Var a);
  Var softmax_rows(Var a);
  Var log_floor(Var a, double eps);
  Var sigmoid(Var a);
  Var gelu(Var a);
  Var layer_norm_rows(Var a, Var gain, Var bias, double eps = 1e-5);
  Var scale_by_scalar(Var a, Var scalar);  // scalar is 1 x 1
  // Accumulate a 1 x K row onto the listed columns of a 1 x width vector.
  Var scatter_cols(Var a, const std::vector<int>& ids, int width);

  // Additive causal mask: 0 on/below the diagonal, -1e30 above.
  Var causal_mask(int n);

  // Seeds d(loss)=1 and runs the tape in reverse. loss must be 1 x 1.
  void backward(Var loss);

  size_t node_count() const { return nodes_.size(); }

 private:
  Var make(Tensor value);
  std::deque<Node> nodes_;
};

}  // namespace ssp
