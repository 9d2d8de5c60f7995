#pragma once
#include <array>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace nrtsi {

// Named, shaped array of doubles, row-major. All kernel math is 2-D; scalars
// are [1,1] and biases [1,c].
struct Tensor {
  std::string name;
  long n_rows = 0;
  long n_cols = 0;
  std::vector<double> values;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(long r, long c) : n_rows(r), n_cols(c), values(static_cast<std::size_t>(r) * c, 0.0) {}

  long size() const { return n_rows * n_cols; }
  double& at(long r, long c) { return values[static_cast<std::size_t>(r) * n_cols + c]; }
  double at(long r, long c) const { return values[static_cast<std::size_t>(r) * n_cols + c]; }

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.values[0] = v;
    return t;
  }
};

// n x n attention mask shared across batch blocks; 1 = pair forbidden.
struct AttnMask {
  long n = 0;
  std::vector<uint8_t> forbid;  // row-major n*n

  AttnMask() = default;
  explicit AttnMask(long n_) : n(n_), forbid(static_cast<std::size_t>(n_) * n_, 0) {}
  bool forbidden(long i, long j) const { return forbid[static_cast<std::size_t>(i) * n + j] != 0; }
  void set(long i, long j) { forbid[static_cast<std::size_t>(i) * n + j] = 1; }
};

// Forbid target-to-target attention for distinct pairs; self stays permitted.
std::shared_ptr<const AttnMask> make_target_mask(long n, const std::vector<int>& target_rows);

// Record of differentiable operations. Build the forward pass through the op
// builders, then call backward(loss) exactly once; gradients of parameter
// leaves are then available via grad().
class Tape {
 public:
  using ValueId = int;

  ValueId constant(Tensor t);            // leaf without gradient
  ValueId param(const Tensor& t);        // leaf with gradient

  ValueId matmul(ValueId a, ValueId b);
  ValueId add(ValueId a, ValueId b);                 // same shape
  ValueId add_bias(ValueId x, ValueId b);            // b broadcast over rows
  ValueId linear(ValueId x, ValueId w, ValueId b);   // matmul + add_bias
  ValueId relu(ValueId x);
  ValueId softmax_rows(ValueId x);
  // Q,K: [B*n x dk], V: [B*n x dv]; per-block softmax(Q K^T / sqrt(dk)) V with
  // -inf at masked pairs pre-softmax (exactly zero weight after).
  ValueId scaled_dot_attention(ValueId q, ValueId k, ValueId v,
                               std::shared_ptr<const AttnMask> mask, int blocks = 1);
  ValueId concat_cols(const std::vector<ValueId>& xs);
  ValueId slice_rows(ValueId x, std::vector<int> rows);
  ValueId reduce_mean(ValueId x);
  ValueId scale(ValueId x, double c);
  ValueId clamp(ValueId x, double lo, double hi);
  // mean over rows of the squared Euclidean row error
  ValueId square_error(ValueId h, ValueId y);
  // mean over rows of -log N(y | mu, diag(exp(log_sigma)^2))
  ValueId gaussian_nll(ValueId y, ValueId mu, ValueId log_sigma);

  const Tensor& value(ValueId id) const;
  bool has_grad(ValueId id) const;
  const Tensor& grad(ValueId id) const;
  // Post-softmax weights of an attention node, [B*n x n].
  const Tensor& attention_weights(ValueId attention_id) const;

  void backward(ValueId loss);

 private:
  enum class Op {
    Leaf, MatMul, Add, AddBias, Relu, SoftmaxRows, Attention, ConcatCols,
    SliceRows, ReduceMean, Scale, Clamp, SquareError, GaussianNll
  };
  struct Node {
    Op op = Op::Leaf;
    std::vector<ValueId> in;
    Tensor out;
    Tensor aux;  // op-specific saved forward state
    std::shared_ptr<const AttnMask> mask;
    int blocks = 1;
    std::vector<int> rows;
    double c0 = 0.0, c1 = 0.0;
    bool needs_grad = false;
  };

  ValueId push(Node n);
  Tensor& grad_buf(ValueId id);
  void check_finite(const Tensor& t, const char* what) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool backward_done_ = false;
};

// Flat gradient accumulator aligned with a ParamStore.
using GradBuffer = std::vector<std::vector<double>>;

// Ordered collection of trainable tensors; order is the serialization and
// Adam-state order.
struct ParamStore {
  std::vector<Tensor> tensors;
  std::unordered_map<std::string, int> index;

  Tensor& add(const std::string& name, long rows, long cols);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return index.count(name) > 0; }
  GradBuffer zero_grads() const;
};

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<std::vector<double>> m, v;

  void init_for(const ParamStore& params);
};

// Standard bias-corrected Adam update; increments the step counter once.
void adam_step(ParamStore& params, const GradBuffer& grads, AdamState& state);

}  // namespace nrtsi
