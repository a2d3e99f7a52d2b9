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

#include "ssplanner/tensor.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "ssplanner/rng.hpp"

namespace ssp {

Tensor Tensor::full(int r, int c, double v) {
  Tensor t(r, c);
  for (double& x : t.data) x = v;
  return t;
}

Tensor Tensor::row_vector(std::initializer_list<double> values) {
  Tensor t(1, static_cast<int>(values.size()));
  int i = 0;
  for (double v : values) t.data[i++] = v;
  return t;
}

void Tensor::zero_() {
  for (double& x : data) x = 0.0;
}

void Tensor::add_(const Tensor& o) {
  assert(same_shape(o));
  for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
}

void Tensor::scale_(double k) {
  for (double& x : data) x *= k;
}

double Tensor::l2_norm() const {
  double s = 0.0;
  for (double x : data) s += x * x;
  return std::sqrt(s);
}

bool Tensor::all_finite() const {
  for (double x : data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void Tensor::fill_uniform(Rng& rng, double lo, double hi) {
  for (double& x : data) x = rng.next_uniform(lo, hi);
}

void Tensor::round_to_f32() {
  for (double& x : data) x = static_cast<double>(static_cast<float>(x));
}

namespace {

void matmul_into(const Tensor& a, const Tensor& b, Tensor& c) {
  assert(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols);
  const int m = a.rows, k = a.cols, n = b.cols;
  for (int i = 0; i < m; ++i) {
    double* crow = c.row(i);
    const double* arow = a.row(i);
    for (int l = 0; l < k; ++l) {
      const double ail = arow[l];
      if (ail == 0.0) continue;
      const double* brow = b.row(l);
      for (int j = 0; j < n; ++j) crow[j] += ail * brow[j];
    }
  }
}

// c += a * b^T
void matmul_nt_into(const Tensor& a, const Tensor& b, Tensor& c) {
  assert(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows);
  const int m = a.rows, k = a.cols, n = b.rows;
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int j = 0; j < n; ++j) {
      const double* brow = b.row(j);
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += arow[l] * brow[l];
      crow[j] += s;
    }
  }
}

// c += a^T * b
void matmul_tn_into(const Tensor& a, const Tensor& b, Tensor& c) {
  assert(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols);
  const int m = a.cols, n = b.cols;
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    const double* brow = b.row(i);
    for (int l = 0; l < m; ++l) {
      const double ail = arow[l];
      if (ail == 0.0) continue;
      double* crow = c.row(l);
      for (int j = 0; j < n; ++j) crow[j] += ail * brow[j];
    }
  }
}

}  // namespace

Graph::Var Graph::make(Tensor value) {
  nodes_.emplace_back();
  Node& n = nodes_.back();
  n.owned = std::move(value);
  n.val = &n.owned;
  n.grad = Tensor(n.owned.rows, n.owned.cols);
  return &n;
}

Graph::Var Graph::leaf(const Tensor& value, Tensor* grad_sink) {
  nodes_.emplace_back();
  Node& n = nodes_.back();
  n.val = &value;
  n.grad = Tensor(value.rows, value.cols);
  n.grad_sink = grad_sink;
  if (grad_sink != nullptr) {
    Node* self = &n;
    n.back = [self] { self->grad_sink->add_(self->grad); };
  }
  return &n;
}

Graph::Var Graph::input(Tensor value) {
  Var v = make(std::move(value));
  return v;
}

Graph::Var Graph::matmul(Var a, Var b) {
  Tensor out(a->val->rows, b->val->cols);
  matmul_into(*a->val, *b->val, out);
  Var c = make(std::move(out));
  c->back = [a, b, c] {
    matmul_nt_into(c->grad, *b->val, a->grad);  // dA += dC * B^T
    matmul_tn_into(*a->val, c->grad, b->grad);  // dB += A^T * dC
  };
  return c;
}

Graph::Var Graph::matmul_nt(Var a, Var b) {
  Tensor out(a->val->rows, b->val->rows);
  matmul_nt_into(*a->val, *b->val, out);
  Var c = make(std::move(out));
  c->back = [a, b, c] {
    matmul_into(c->grad, *b->val, a->grad);     // dA += dC * B
    matmul_tn_into(c->grad, *a->val, b->grad);  // dB += dC^T * A
  };
  return c;
}

Graph::Var Graph::transpose(Var a) {
  const Tensor& x = *a->val;
  Tensor out(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i) {
    for (int j = 0; j < x.cols; ++j) out.at(j, i) = x.at(i, j);
  }
  Var c = make(std::move(out));
  c->back = [a, c] {
    for (int i = 0; i < c->grad.rows; ++i) {
      for (int j = 0; j < c->grad.cols; ++j) a->grad.at(j, i) += c->grad.at(i, j);
    }
  };
  return c;
}

Graph::Var Graph::add(Var a, Var b) {
  assert(a->val->same_shape(*b->val));
  Tensor out = *a->val;
  out.add_(*b->val);
  Var c = make(std::move(out));
  c->back = [a, b, c] {
    a->grad.add_(c->grad);
    b->grad.add_(c->grad);
  };
  return c;
}

Graph::Var Graph::sub(Var a, Var b) {
  assert(a->val->same_shape(*b->val));
  Tensor out = *a->val;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->val->data[i];
  Var c = make(std::move(out));
  c->back = [a, b, c] {
    a->grad.add_(c->grad);
    for (size_t i = 0; i < c->grad.data.size(); ++i) b->grad.data[i] -= c->grad.data[i];
  };
  return c;
}

Graph::Var Graph::add_rowvec(Var a, Var row) {
  assert(row->val->rows == 1 && row->val->cols == a->val->cols);
  Tensor out = *a->val;
  for (int i = 0; i < out.rows; ++i) {
    double* r = out.row(i);
    for (int j = 0; j < out.cols; ++j) r[j] += row->val->data[j];
  }
  Var c = make(std::move(out));
  c->back = [a, row, c] {
    a->grad.add_(c->grad);
    for (int i = 0; i < c->grad.rows; ++i) {
      const double* r = c->grad.row(i);
      for (int j = 0; j < c->grad.cols; ++j) row->grad.data[j] += r[j];
    }
  };
  return c;
}

Graph::Var Graph::hadamard(Var a, Var b) {
  assert(a->val->same_shape(*b->val));
  Tensor out = *a->val;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b->val->data[i];
  Var c = make(std::move(out));
  c->back = [a, b, c] {
    for (size_t i = 0; i < c->grad.data.size(); ++i) {
      a->grad.data[i] += c->grad.data[i] * b->val->data[i];
      b->grad.data[i] += c->grad.data[i] * a->val->data[i];
    }
  };
  return c;
}

Graph::Var Graph::affine(Var a, double scale, double shift) {
  Tensor out = *a->val;
  for (double& x : out.data) x = scale * x + shift;
  Var c = make(std::move(out));
  c->back = [a, c, scale] {
    for (size_t i = 0; i < c->grad.data.size(); ++i) a->grad.data[i] += scale * c->grad.data[i];
  };
  return c;
}

Graph::Var Graph::concat_rows(const std::vector<Var>& parts) {
  assert(!parts.empty());
  int rows = 0;
  const int cols = parts[0]->val->cols;
  for (Var p : parts) {
    assert(p->val->cols == cols);
    rows += p->val->rows;
  }
  Tensor out(rows, cols);
  int r = 0;
  for (Var p : parts) {
    for (int i = 0; i < p->val->rows; ++i, ++r) {
      for (int j = 0; j < cols; ++j) out.at(r, j) = p->val->at(i, j);
    }
  }
  Var c = make(std::move(out));
  std::vector<Var> saved = parts;
  c->back = [saved, c] {
    int r = 0;
    for (Var p : saved) {
      for (int i = 0; i < p->grad.rows; ++i, ++r) {
        for (int j = 0; j < p->grad.cols; ++j) p->grad.at(i, j) += c->grad.at(r, j);
      }
    }
  };
  return c;
}

Graph::Var Graph::concat_cols(const std::vector<Var>& parts) {
  assert(!parts.empty());
  int cols = 0;
  const int rows = parts[0]->val->rows;
  for (Var p : parts) {
    assert(p->val->rows == rows);
    cols += p->val->cols;
  }
  Tensor out(rows, cols);
  int c0 = 0;
  for (Var p : parts) {
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < p->val->cols; ++j) out.at(i, c0 + j) = p->val->at(i, j);
    }
    c0 += p->val->cols;
  }
  Var c = make(std::move(out));
  std::vector<Var> saved = parts;
  c->back = [saved, c] {
    int c0 = 0;
    for (Var p : saved) {
      for (int i = 0; i < p->grad.rows; ++i) {
        for (int j = 0; j < p->grad.cols; ++j) p->grad.at(i, j) += c->grad.at(i, c0 + j);
      }
      c0 += p->grad.cols;
    }
  };
  return c;
}

Graph::Var Graph::slice_rows(Var a, int r0, int r1) {
  assert(0 <= r0 && r0 < r1 && r1 <= a->val->rows);
  Tensor out(r1 - r0, a->val->cols);
  for (int i = r0; i < r1; ++i) {
    for (int j = 0; j < out.cols; ++j) out.at(i - r0, j) = a->val->at(i, j);
  }
  Var c = make(std::move(out));
  c->back = [a, c, r0] {
    for (int i = 0; i < c->grad.rows; ++i) {
      for (int j = 0; j < c->grad.cols; ++j) a->grad.at(r0 + i, j) += c->grad.at(i, j);
    }
  };
  return c;
}

Graph::Var Graph::slice_cols(Var a, int c0, int c1) {
  assert(0 <= c0 && c0 < c1 && c1 <= a->val->cols);
  Tensor out(a->val->rows, c1 - c0);
  for (int i = 0; i < out.rows; ++i) {
    for (int j = c0; j < c1; ++j) out.at(i, j - c0) = a->val->at(i, j);
  }
  Var c = make(std::move(out));
  c->back = [a, c, c0] {
    for (int i = 0; i < c->grad.rows; ++i) {
      for (int j = 0; j < c->grad.cols; ++j) a->grad.at(i, c0 + j) += c->grad.at(i, j);
    }
  };
  return c;
}

Graph::Var Graph::gather_rows(Var a, std::vector<int> ids) {
  Tensor out(static_cast<int>(ids.size()), a->val->cols);
  for (size_t i = 0; i < ids.size(); ++i) {
    assert(ids[i] >= 0 && ids[i] < a->val->rows);
    for (int j = 0; j < out.cols; ++j) out.at(static_cast<int>(i), j) = a->val->at(ids[i], j);
  }
  Var c = make(std::move(out));
  c->back = [a, c, ids = std::move(ids)] {
    for (size_t i = 0; i < ids.size(); ++i) {
      for (int j = 0; j < c->grad.cols; ++j) {
        a->grad.at(ids[i], j) += c->grad.at(static_cast<int>(i), j);
      }
    }
  };
  return c;
}

Graph::Var Graph::gather_cols(Var a, std::vector<int> ids) {
  Tensor out(a->val->rows, static_cast<int>(ids.size()));
  for (int i = 0; i < out.rows; ++i) {
    for (size_t j = 0; j < ids.size(); ++j) {
      assert(ids[j] >= 0 && ids[j] < a->val->cols);
      out.at(i, static_cast<int>(j)) = a->val->at(i, ids[j]);
    }
  }
  Var c = make(std::move(out));
  c->back = [a, c, ids = std::move(ids)] {
    for (int i = 0; i < c->grad.rows; ++i) {
      for (size_t j = 0; j < ids.size(); ++j) {
        a->grad.at(i, ids[j]) += c->grad.at(i, static_cast<int>(j));
      }
    }
  };
  return c;
}

Graph::Var Graph::mean_rows(Var a) {
  const int rows = a->val->rows;
  Tensor out(1, a->val->cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < out.cols; ++j) out.at(0, j) += a->val->at(i, j);
  }
  out.scale_(1.0 / rows);
  Var c = make(std::move(out));
  c->back = [a, c, rows] {
    const double inv = 1.0 / rows;
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < c->grad.cols; ++j) a->grad.at(i, j) += inv * c->grad.at(0, j);
    }
  };
  return c;
}

Graph::Var Graph::sum_all(Var a) {
  Tensor out(1, 1);
  for (double x : a->val->data) out.data[0] += x;
  Var c = make(std::move(out));
  c->back = [a, c] {
    const double g = c->grad.data[0];
    for (double& x : a->grad.data) x += g;
  };
  return c;
}

Graph::Var Graph::softmax_rows(Var a) {
  Tensor out = *a->val;
  for (int i = 0; i < out.rows; ++i) {
    double* r = out.row(i);
    double mx = r[0];
    for (int j = 1; j < out.cols; ++j) mx = std::max(mx, r[j]);
    double sum = 0.0;
    for (int j = 0; j < out.cols; ++j) {
      r[j] = std::exp(r[j] - mx);
      sum += r[j];
    }
    for (int j = 0; j < out.cols; ++j) r[j] /= sum;
  }
  Var c = make(std::move(out));
  c->back = [a, c] {
    for (int i = 0; i < c->grad.rows; ++i) {
      const double* y = c->val->row(i);
      const double* dy = c->grad.row(i);
      double dot = 0.0;
      for (int j = 0; j < c->grad.cols; ++j) dot += y[j] * dy[j];
      double* dx = a->grad.row(i);
      for (int j = 0; j < c->grad.cols; ++j) dx[j] += y[j] * (dy[j] - dot);
    }
  };
  return c;
}

Graph::Var Graph::log_floor(Var a, double eps) {
  Tensor out = *a->val;
  for (double& x : out.data) x = std::log(x < eps ? eps : x);
  Var c = make(std::move(out));
  c->back = [a, c, eps] {
    for (size_t i = 0; i < c->grad.data.size(); ++i) {
      const double x = a->val->data[i];
      if (x >= eps) a->grad.data[i] += c->grad.data[i] / x;
    }
  };
  return c;
}

Graph::Var Graph::sigmoid(Var a) {
  Tensor out = *a->val;
  for (double& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
  Var c = make(std::move(out));
  c->back = [a, c] {
    for (size_t i = 0; i < c->grad.data.size(); ++i) {
      const double y = c->val->data[i];
      a->grad.data[i] += c->grad.data[i] * y * (1.0 - y);
    }
  };
  return c;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Graph::Var Graph::gelu(Var a) {
  Tensor out = *a->val;
  for (double& x : out.data) {
    const double u = kGeluC * (x + kGeluA * x * x * x);
    x = 0.5 * x * (1.0 + std::tanh(u));
  }
  Var c = make(std::move(out));
  c->back = [a, c] {
    for (size_t i = 0; i < c->grad.data.size(); ++i) {
      const double x = a->val->data[i];
      const double u = kGeluC * (x + kGeluA * x * x * x);
      const double th = std::tanh(u);
      const double sech2 = 1.0 - th * th;
      const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
      a->grad.data[i] += c->grad.data[i] * (0.5 * (1.0 + th) + 0.5 * x * sech2 * du);
    }
  };
  return c;
}

Graph::Var Graph::layer_norm_rows(Var a, Var gain, Var bias, double eps) {
  const int rows = a->val->rows, cols = a->val->cols;
  assert(gain->val->rows == 1 && gain->val->cols == cols);
  assert(bias->val->rows == 1 && bias->val->cols == cols);
  Tensor out(rows, cols);
  Tensor normed(rows, cols);   // cached x-hat for backward
  Tensor inv_sigma(rows, 1);
  for (int i = 0; i < rows; ++i) {
    const double* x = a->val->row(i);
    double mean = 0.0;
    for (int j = 0; j < cols; ++j) mean += x[j];
    mean /= cols;
    double var = 0.0;
    for (int j = 0; j < cols; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= cols;
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_sigma.at(i, 0) = inv;
    for (int j = 0; j < cols; ++j) {
      normed.at(i, j) = (x[j] - mean) * inv;
      out.at(i, j) = gain->val->data[j] * normed.at(i, j) + bias->val->data[j];
    }
  }
  Var c = make(std::move(out));
  c->back = [a, gain, bias, c, normed = std::move(normed), inv_sigma = std::move(inv_sigma)] {
    const int rows = c->grad.rows, cols = c->grad.cols;
    for (int i = 0; i < rows; ++i) {
      const double* dy = c->grad.row(i);
      const double* xh = normed.row(i);
      const double inv = inv_sigma.at(i, 0);
      double sum_g = 0.0, sum_gx = 0.0;
      for (int j = 0; j < cols; ++j) {
        const double gdy = gain->val->data[j] * dy[j];
        sum_g += gdy;
        sum_gx += gdy * xh[j];
        gain->grad.data[j] += dy[j] * xh[j];
        bias->grad.data[j] += dy[j];
      }
      double* dx = a->grad.row(i);
      for (int j = 0; j < cols; ++j) {
        const double gdy = gain->val->data[j] * dy[j];
        dx[j] += inv * (gdy - sum_g / cols - xh[j] * sum_gx / cols);
      }
    }
  };
  return c;
}

Graph::Var Graph::scale_by_scalar(Var a, Var scalar) {
  assert(scalar->val->rows == 1 && scalar->val->cols == 1);
  const double s = scalar->val->data[0];
  Tensor out = *a->val;
  out.scale_(s);
  Var c = make(std::move(out));
  c->back = [a, scalar, c, s] {
    double acc = 0.0;
    for (size_t i = 0; i < c->grad.data.size(); ++i) {
      a->grad.data[i] += s * c->grad.data[i];
      acc += c->grad.data[i] * a->val->data[i];
    }
    scalar->grad.data[0] += acc;
  };
  return c;
}

Graph::Var Graph::scatter_cols(Var a, const std::vector<int>& ids, int width) {
  assert(a->val->rows == 1 && static_cast<int>(ids.size()) == a->val->cols);
  Tensor out(1, width);
  for (size_t k = 0; k < ids.size(); ++k) {
    assert(ids[k] >= 0 && ids[k] < width);
    out.data[ids[k]] += a->val->data[k];  // repeated ids accumulate
  }
  Var c = make(std::move(out));
  c->back = [a, c, ids] {
    for (size_t k = 0; k < ids.size(); ++k) a->grad.data[k] += c->grad.data[ids[k]];
  };
  return c;
}

Graph::Var Graph::causal_mask(int n) {
  Tensor m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) m.at(i, j) = -1e30;
  }
  return input(std::move(m));
}

void Graph::backward(Var loss) {
  assert(loss->val->rows == 1 && loss->val->cols == 1);
  loss->grad.data[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->back) it->back();
  }
}

}  // namespace ssp
