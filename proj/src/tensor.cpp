#include "nrtsi/tensor.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nrtsi {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<Mat>;
using CMapM = Eigen::Map<const Mat>;

MapM map(Tensor& t) { return MapM(t.values.data(), t.n_rows, t.n_cols); }
CMapM map(const Tensor& t) { return CMapM(t.values.data(), t.n_rows, t.n_cols); }

const double kInf = std::numeric_limits<double>::infinity();

std::string shape_str(const Tensor& t) {
  return "[" + std::to_string(t.n_rows) + "x" + std::to_string(t.n_cols) + "]";
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) +
                              " and " + shape_str(b));
}

}  // namespace

std::shared_ptr<const AttnMask> make_target_mask(long n, const std::vector<int>& target_rows) {
  auto mask = std::make_shared<AttnMask>(n);
  for (int i : target_rows)
    for (int j : target_rows)
      if (i != j) mask->set(i, j);
  return mask;
}

void Tape::check_finite(const Tensor& t, const char* what) const {
  for (double v : t.values) {
    if (!std::isfinite(v))
      throw std::runtime_error(std::string("non-finite value produced by ") + what);
  }
}

Tape::ValueId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  grads_.emplace_back();
  return static_cast<ValueId>(nodes_.size() - 1);
}

Tape::ValueId Tape::constant(Tensor t) {
  Node n;
  n.out = std::move(t);
  n.out.requires_grad = false;
  n.needs_grad = false;
  return push(std::move(n));
}

Tape::ValueId Tape::param(const Tensor& t) {
  Node n;
  n.out = t;
  n.out.requires_grad = true;
  n.needs_grad = true;
  return push(std::move(n));
}

const Tensor& Tape::value(ValueId id) const { return nodes_.at(id).out; }

bool Tape::has_grad(ValueId id) const {
  return nodes_.at(id).needs_grad && grads_.at(id).size() > 0;
}

const Tensor& Tape::grad(ValueId id) const {
  if (!nodes_.at(id).needs_grad)
    throw std::invalid_argument("value does not require gradients");
  return grads_.at(id);
}

Tensor& Tape::grad_buf(ValueId id) {
  Tensor& g = grads_[id];
  if (g.size() == 0) g = Tensor(nodes_[id].out.n_rows, nodes_[id].out.n_cols);
  return g;
}

const Tensor& Tape::attention_weights(ValueId id) const {
  const Node& n = nodes_.at(id);
  if (n.op != Op::Attention) throw std::invalid_argument("not an attention node");
  return n.aux;
}

Tape::ValueId Tape::matmul(ValueId a, ValueId b) {
  const Tensor& A = nodes_[a].out;
  const Tensor& B = nodes_[b].out;
  if (A.n_cols != B.n_rows) shape_error("matmul", A, B);
  Node n;
  n.op = Op::MatMul;
  n.in = {a, b};
  n.out = Tensor(A.n_rows, B.n_cols);
  map(n.out).noalias() = map(A) * map(B);
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  check_finite(n.out, "matmul");
  return push(std::move(n));
}

Tape::ValueId Tape::add(ValueId a, ValueId b) {
  const Tensor& A = nodes_[a].out;
  const Tensor& B = nodes_[b].out;
  if (A.n_rows != B.n_rows || A.n_cols != B.n_cols) shape_error("add", A, B);
  Node n;
  n.op = Op::Add;
  n.in = {a, b};
  n.out = Tensor(A.n_rows, A.n_cols);
  map(n.out) = map(A) + map(B);
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  check_finite(n.out, "add");
  return push(std::move(n));
}

Tape::ValueId Tape::add_bias(ValueId x, ValueId b) {
  const Tensor& X = nodes_[x].out;
  const Tensor& B = nodes_[b].out;
  if (B.n_rows != 1 || B.n_cols != X.n_cols) shape_error("add_bias", X, B);
  Node n;
  n.op = Op::AddBias;
  n.in = {x, b};
  n.out = Tensor(X.n_rows, X.n_cols);
  map(n.out) = map(X).rowwise() + map(B).row(0);
  n.needs_grad = nodes_[x].needs_grad || nodes_[b].needs_grad;
  check_finite(n.out, "add_bias");
  return push(std::move(n));
}

Tape::ValueId Tape::linear(ValueId x, ValueId w, ValueId b) {
  return add_bias(matmul(x, w), b);
}

Tape::ValueId Tape::relu(ValueId x) {
  const Tensor& X = nodes_[x].out;
  Node n;
  n.op = Op::Relu;
  n.in = {x};
  n.out = Tensor(X.n_rows, X.n_cols);
  map(n.out) = map(X).cwiseMax(0.0);
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Tape::ValueId Tape::softmax_rows(ValueId x) {
  const Tensor& X = nodes_[x].out;
  Node n;
  n.op = Op::SoftmaxRows;
  n.in = {x};
  n.out = Tensor(X.n_rows, X.n_cols);
  for (long r = 0; r < X.n_rows; ++r) {
    double mx = -kInf;
    for (long c = 0; c < X.n_cols; ++c) mx = std::max(mx, X.at(r, c));
    double sum = 0.0;
    for (long c = 0; c < X.n_cols; ++c) sum += (n.out.at(r, c) = std::exp(X.at(r, c) - mx));
    for (long c = 0; c < X.n_cols; ++c) n.out.at(r, c) /= sum;
  }
  n.needs_grad = nodes_[x].needs_grad;
  check_finite(n.out, "softmax_rows");
  return push(std::move(n));
}

Tape::ValueId Tape::scaled_dot_attention(ValueId q, ValueId k, ValueId v,
                                         std::shared_ptr<const AttnMask> mask, int blocks) {
  const Tensor& Q = nodes_[q].out;
  const Tensor& K = nodes_[k].out;
  const Tensor& V = nodes_[v].out;
  if (Q.n_cols != K.n_cols) shape_error("attention q/k", Q, K);
  if (Q.n_rows != K.n_rows || Q.n_rows != V.n_rows) shape_error("attention rows", Q, V);
  if (blocks < 1 || Q.n_rows % blocks != 0)
    throw std::invalid_argument("attention: rows not divisible into blocks");
  const long nb = Q.n_rows / blocks;
  if (mask && mask->n != nb) throw std::invalid_argument("attention mask size mismatch");

  Node n;
  n.op = Op::Attention;
  n.in = {q, k, v};
  n.mask = std::move(mask);
  n.blocks = blocks;
  n.out = Tensor(Q.n_rows, V.n_cols);
  n.aux = Tensor(Q.n_rows, nb);  // post-softmax weights per block
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(Q.n_cols));

  Mat scores(nb, nb);
  for (int b = 0; b < blocks; ++b) {
    const long r0 = b * nb;
    auto Qb = map(Q).middleRows(r0, nb);
    auto Kb = map(K).middleRows(r0, nb);
    auto Vb = map(V).middleRows(r0, nb);
    scores.noalias() = Qb * Kb.transpose() * inv_sqrt;
    if (n.mask) {
      for (long i = 0; i < nb; ++i)
        for (long j = 0; j < nb; ++j)
          if (n.mask->forbidden(i, j)) scores(i, j) = -kInf;
    }
    for (long i = 0; i < nb; ++i) {
      double mx = scores.row(i).maxCoeff();
      if (mx == -kInf)
        throw std::runtime_error("attention row fully masked");
      double sum = 0.0;
      for (long j = 0; j < nb; ++j) {
        const double e = std::exp(scores(i, j) - mx);  // exp(-inf) == 0 exactly
        n.aux.at(r0 + i, j) = e;
        sum += e;
      }
      for (long j = 0; j < nb; ++j) n.aux.at(r0 + i, j) /= sum;
    }
    map(n.out).middleRows(r0, nb).noalias() = map(n.aux).middleRows(r0, nb) * Vb;
  }
  n.needs_grad = nodes_[q].needs_grad || nodes_[k].needs_grad || nodes_[v].needs_grad;
  check_finite(n.out, "scaled_dot_attention");
  return push(std::move(n));
}

Tape::ValueId Tape::concat_cols(const std::vector<ValueId>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat of nothing");
  long cols = 0;
  const long rows = nodes_[xs[0]].out.n_rows;
  for (ValueId x : xs) {
    if (nodes_[x].out.n_rows != rows) shape_error("concat_cols", nodes_[xs[0]].out, nodes_[x].out);
    cols += nodes_[x].out.n_cols;
  }
  Node n;
  n.op = Op::ConcatCols;
  n.in = xs;
  n.out = Tensor(rows, cols);
  long c0 = 0;
  for (ValueId x : xs) {
    const Tensor& X = nodes_[x].out;
    map(n.out).middleCols(c0, X.n_cols) = map(X);
    c0 += X.n_cols;
    n.needs_grad = n.needs_grad || nodes_[x].needs_grad;
  }
  return push(std::move(n));
}

Tape::ValueId Tape::slice_rows(ValueId x, std::vector<int> rows) {
  const Tensor& X = nodes_[x].out;
  for (int r : rows)
    if (r < 0 || r >= X.n_rows) throw std::invalid_argument("slice_rows: row out of range");
  Node n;
  n.op = Op::SliceRows;
  n.in = {x};
  n.rows = std::move(rows);
  n.out = Tensor(static_cast<long>(n.rows.size()), X.n_cols);
  for (std::size_t i = 0; i < n.rows.size(); ++i)
    map(n.out).row(static_cast<long>(i)) = map(X).row(n.rows[i]);
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Tape::ValueId Tape::reduce_mean(ValueId x) {
  const Tensor& X = nodes_[x].out;
  if (X.size() == 0) throw std::invalid_argument("reduce_mean of empty tensor");
  Node n;
  n.op = Op::ReduceMean;
  n.in = {x};
  n.out = Tensor::scalar(map(X).mean());
  n.needs_grad = nodes_[x].needs_grad;
  check_finite(n.out, "reduce_mean");
  return push(std::move(n));
}

Tape::ValueId Tape::scale(ValueId x, double c) {
  const Tensor& X = nodes_[x].out;
  Node n;
  n.op = Op::Scale;
  n.in = {x};
  n.c0 = c;
  n.out = Tensor(X.n_rows, X.n_cols);
  map(n.out) = map(X) * c;
  n.needs_grad = nodes_[x].needs_grad;
  check_finite(n.out, "scale");
  return push(std::move(n));
}

Tape::ValueId Tape::clamp(ValueId x, double lo, double hi) {
  const Tensor& X = nodes_[x].out;
  Node n;
  n.op = Op::Clamp;
  n.in = {x};
  n.c0 = lo;
  n.c1 = hi;
  n.out = Tensor(X.n_rows, X.n_cols);
  map(n.out) = map(X).cwiseMax(lo).cwiseMin(hi);
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Tape::ValueId Tape::square_error(ValueId h, ValueId y) {
  const Tensor& H = nodes_[h].out;
  const Tensor& Y = nodes_[y].out;
  if (H.n_rows != Y.n_rows || H.n_cols != Y.n_cols) shape_error("square_error", H, Y);
  Node n;
  n.op = Op::SquareError;
  n.in = {h, y};
  n.out = Tensor::scalar((map(H) - map(Y)).squaredNorm() / static_cast<double>(H.n_rows));
  n.needs_grad = nodes_[h].needs_grad || nodes_[y].needs_grad;
  check_finite(n.out, "square_error");
  return push(std::move(n));
}

Tape::ValueId Tape::gaussian_nll(ValueId y, ValueId mu, ValueId log_sigma) {
  const Tensor& Y = nodes_[y].out;
  const Tensor& M = nodes_[mu].out;
  const Tensor& S = nodes_[log_sigma].out;
  if (Y.n_rows != M.n_rows || Y.n_cols != M.n_cols) shape_error("gaussian_nll y/mu", Y, M);
  if (Y.n_rows != S.n_rows || Y.n_cols != S.n_cols) shape_error("gaussian_nll y/sigma", Y, S);
  static const double kHalfLog2Pi = 0.5 * std::log(2.0 * 3.14159265358979323846);
  double total = 0.0;
  for (long i = 0; i < Y.size(); ++i) {
    const double ls = S.values[i];
    const double r = Y.values[i] - M.values[i];
    total += ls + kHalfLog2Pi + 0.5 * r * r * std::exp(-2.0 * ls);
  }
  Node n;
  n.op = Op::GaussianNll;
  n.in = {y, mu, log_sigma};
  n.out = Tensor::scalar(total / static_cast<double>(Y.n_rows));
  n.needs_grad = nodes_[y].needs_grad || nodes_[mu].needs_grad || nodes_[log_sigma].needs_grad;
  check_finite(n.out, "gaussian_nll");
  return push(std::move(n));
}

void Tape::backward(ValueId loss) {
  if (backward_done_) throw std::logic_error("backward already run on this tape");
  backward_done_ = true;
  const Tensor& L = nodes_.at(loss).out;
  if (L.n_rows != 1 || L.n_cols != 1)
    throw std::invalid_argument("backward expects a scalar loss");
  grad_buf(loss).values[0] = 1.0;

  for (ValueId id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || grads_[id].size() == 0) continue;
    const Tensor& g = grads_[id];
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul: {
        const Tensor& A = nodes_[n.in[0]].out;
        const Tensor& B = nodes_[n.in[1]].out;
        if (nodes_[n.in[0]].needs_grad)
          map(grad_buf(n.in[0])).noalias() += map(g) * map(B).transpose();
        if (nodes_[n.in[1]].needs_grad)
          map(grad_buf(n.in[1])).noalias() += map(A).transpose() * map(g);
        break;
      }
      case Op::Add:
        for (int s = 0; s < 2; ++s)
          if (nodes_[n.in[s]].needs_grad) map(grad_buf(n.in[s])) += map(g);
        break;
      case Op::AddBias:
        if (nodes_[n.in[0]].needs_grad) map(grad_buf(n.in[0])) += map(g);
        if (nodes_[n.in[1]].needs_grad)
          map(grad_buf(n.in[1])).row(0) += map(g).colwise().sum();
        break;
      case Op::Relu: {
        if (!nodes_[n.in[0]].needs_grad) break;
        const Tensor& X = nodes_[n.in[0]].out;
        Tensor& gx = grad_buf(n.in[0]);
        for (long i = 0; i < X.size(); ++i)
          if (X.values[i] > 0.0) gx.values[i] += g.values[i];
        break;
      }
      case Op::SoftmaxRows: {
        if (!nodes_[n.in[0]].needs_grad) break;
        const Tensor& Y = n.out;
        Tensor& gx = grad_buf(n.in[0]);
        for (long r = 0; r < Y.n_rows; ++r) {
          double dot = 0.0;
          for (long c = 0; c < Y.n_cols; ++c) dot += g.at(r, c) * Y.at(r, c);
          for (long c = 0; c < Y.n_cols; ++c)
            gx.at(r, c) += (g.at(r, c) - dot) * Y.at(r, c);
        }
        break;
      }
      case Op::Attention: {
        const Tensor& Q = nodes_[n.in[0]].out;
        const Tensor& K = nodes_[n.in[1]].out;
        const Tensor& V = nodes_[n.in[2]].out;
        const long nb = Q.n_rows / n.blocks;
        const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(Q.n_cols));
        Mat dW(nb, nb), dS(nb, nb);
        for (int b = 0; b < n.blocks; ++b) {
          const long r0 = b * nb;
          auto W = map(n.aux).middleRows(r0, nb);
          auto gO = map(g).middleRows(r0, nb);
          auto Vb = map(V).middleRows(r0, nb);
          if (nodes_[n.in[2]].needs_grad)
            map(grad_buf(n.in[2])).middleRows(r0, nb).noalias() += W.transpose() * gO;
          dW.noalias() = gO * Vb.transpose();
          // softmax backward; masked entries have W == 0 so they vanish
          for (long i = 0; i < nb; ++i) {
            const double dot = (dW.row(i).array() * W.row(i).array()).sum();
            dS.row(i) = (dW.row(i).array() - dot) * W.row(i).array();
          }
          auto Qb = map(Q).middleRows(r0, nb);
          auto Kb = map(K).middleRows(r0, nb);
          if (nodes_[n.in[0]].needs_grad)
            map(grad_buf(n.in[0])).middleRows(r0, nb).noalias() += dS * Kb * inv_sqrt;
          if (nodes_[n.in[1]].needs_grad)
            map(grad_buf(n.in[1])).middleRows(r0, nb).noalias() += dS.transpose() * Qb * inv_sqrt;
        }
        break;
      }
      case Op::ConcatCols: {
        long c0 = 0;
        for (ValueId x : n.in) {
          const long w = nodes_[x].out.n_cols;
          if (nodes_[x].needs_grad) map(grad_buf(x)) += map(g).middleCols(c0, w);
          c0 += w;
        }
        break;
      }
      case Op::SliceRows: {
        if (!nodes_[n.in[0]].needs_grad) break;
        Tensor& gx = grad_buf(n.in[0]);
        for (std::size_t i = 0; i < n.rows.size(); ++i)
          map(gx).row(n.rows[i]) += map(g).row(static_cast<long>(i));
        break;
      }
      case Op::ReduceMean: {
        if (!nodes_[n.in[0]].needs_grad) break;
        const double s = g.values[0] / static_cast<double>(nodes_[n.in[0]].out.size());
        Tensor& gx = grad_buf(n.in[0]);
        for (double& v : gx.values) v += s;
        break;
      }
      case Op::Scale:
        if (nodes_[n.in[0]].needs_grad) map(grad_buf(n.in[0])) += map(g) * n.c0;
        break;
      case Op::Clamp: {
        if (!nodes_[n.in[0]].needs_grad) break;
        const Tensor& X = nodes_[n.in[0]].out;
        Tensor& gx = grad_buf(n.in[0]);
        for (long i = 0; i < X.size(); ++i)
          if (X.values[i] >= n.c0 && X.values[i] <= n.c1) gx.values[i] += g.values[i];
        break;
      }
      case Op::SquareError: {
        const Tensor& H = nodes_[n.in[0]].out;
        const Tensor& Y = nodes_[n.in[1]].out;
        const double s = 2.0 * g.values[0] / static_cast<double>(H.n_rows);
        if (nodes_[n.in[0]].needs_grad)
          map(grad_buf(n.in[0])) += s * (map(H) - map(Y));
        if (nodes_[n.in[1]].needs_grad)
          map(grad_buf(n.in[1])) -= s * (map(H) - map(Y));
        break;
      }
      case Op::GaussianNll: {
        const Tensor& Y = nodes_[n.in[0]].out;
        const Tensor& M = nodes_[n.in[1]].out;
        const Tensor& S = nodes_[n.in[2]].out;
        const double s = g.values[0] / static_cast<double>(Y.n_rows);
        for (long i = 0; i < Y.size(); ++i) {
          const double inv_var = std::exp(-2.0 * S.values[i]);
          const double r = Y.values[i] - M.values[i];
          if (nodes_[n.in[1]].needs_grad)
            grad_buf(n.in[1]).values[i] += s * (-r * inv_var);
          if (nodes_[n.in[2]].needs_grad)
            grad_buf(n.in[2]).values[i] += s * (1.0 - r * r * inv_var);
          if (nodes_[n.in[0]].needs_grad)
            grad_buf(n.in[0]).values[i] += s * (r * inv_var);
        }
        break;
      }
    }
  }
}

Tensor& ParamStore::add(const std::string& name, long rows, long cols) {
  if (index.count(name)) throw std::invalid_argument("duplicate parameter " + name);
  Tensor t(rows, cols);
  t.name = name;
  t.requires_grad = true;
  index[name] = static_cast<int>(tensors.size());
  tensors.push_back(std::move(t));
  return tensors.back();
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index.find(name);
  if (it == index.end()) throw std::invalid_argument("unknown parameter " + name);
  return tensors[it->second];
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index.find(name);
  if (it == index.end()) throw std::invalid_argument("unknown parameter " + name);
  return tensors[it->second];
}

GradBuffer ParamStore::zero_grads() const {
  GradBuffer g(tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i)
    g[i].assign(tensors[i].values.size(), 0.0);
  return g;
}

void AdamState::init_for(const ParamStore& params) {
  step = 0;
  m.resize(params.tensors.size());
  v.resize(params.tensors.size());
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    m[i].assign(params.tensors[i].values.size(), 0.0);
    v[i].assign(params.tensors[i].values.size(), 0.0);
  }
}

void adam_step(ParamStore& params, const GradBuffer& grads, AdamState& st) {
  if (grads.size() != params.tensors.size() || st.m.size() != params.tensors.size())
    throw std::invalid_argument("adam_step: state/gradient shape mismatch");
  st.step += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    auto& p = params.tensors[i].values;
    const auto& g = grads[i];
    if (g.size() != p.size()) throw std::invalid_argument("adam_step: gradient size mismatch");
    auto& mi = st.m[i];
    auto& vi = st.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      mi[j] = st.beta1 * mi[j] + (1.0 - st.beta1) * g[j];
      vi[j] = st.beta2 * vi[j] + (1.0 - st.beta2) * g[j] * g[j];
      const double mhat = mi[j] / bc1;
      const double vhat = vi[j] / bc2;
      p[j] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

}  // namespace nrtsi
