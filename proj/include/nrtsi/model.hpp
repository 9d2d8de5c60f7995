#pragma once
#include <optional>
#include <string>
#include <vector>

#include "nrtsi/rng.hpp"
#include "nrtsi/series.hpp"
#include "nrtsi/tensor.hpp"
#include "nrtsi/time_codec.hpp"

namespace nrtsi {

struct ModelConfig {
  int data_dim = 1;
  int tau = 8;
  double nu = 100.0;
  int hidden_dim = 128;
  int blocks = 2;
  int heads = 4;
  int head_dim = 32;
  int ff_dim = 256;
  bool stochastic_head = false;
  bool partial_dims = false;
  bool residual = true;  // ablation switch; blocks keep skip connections by default

  int input_width() const { return partial_dims ? tau + 2 * data_dim : tau + data_dim + 1; }
  TimeCodecConfig codec() const { return TimeCodecConfig(tau, nu); }
};

// Appendix-scale preset: 8 blocks, 12 heads of width 128, hidden 1024, ff 2048.
ModelConfig paper_scale_config(int data_dim);

// Input rows for S union G. Fully-missing mode: [phi(t), x, 1] for observed
// and [phi(t), 0, 0] for targets. Partial mode: [phi(t), x (.) m, m].
struct EncodedBatch {
  Tensor elements;               // [n x input_width]
  std::vector<int> target_rows;  // rows awaiting imputation
};

EncodedBatch encode_inputs(const SeriesSet& observed, const std::vector<double>& target_times,
                           const ModelConfig& cfg);
// Partial mode: every point sits in one row; rows with any missing dim are targets.
EncodedBatch encode_inputs_partial(const SeriesSet& points, const std::vector<double>& target_times,
                                   const ModelConfig& cfg);

struct ModelParams {
  ParamStore store;
};

// Glorot-uniform weights, zero biases.
ModelParams init_params(const ModelConfig& cfg, uint64_t seed);

// Deterministic: predictions. Stochastic: Gaussian parameters per target.
struct ImputationResult {
  std::vector<double> target_times;
  std::vector<std::vector<double>> predictions;  // mu in stochastic mode
  std::vector<std::vector<double>> log_sigma;    // empty unless stochastic
  bool stochastic = false;
};

// One forward pass over stacked elements. `batch_blocks` > 1 runs independent
// equally-sized element sets through shared weights in one call; target_rows
// then index the stacked matrix. Loss construction happens on the same tape.
struct ForwardHandle {
  Tape::ValueId output = -1;     // [n_targets x d]; mu when stochastic
  Tape::ValueId log_sigma = -1;  // valid when stochastic
  std::vector<Tape::ValueId> param_ids;
  std::vector<Tape::ValueId> attention_ids;  // per block*head, export/order fixed
};

ForwardHandle forward_on_tape(Tape& tape, const EncodedBatch& batch, ModelParams& params,
                              const ModelConfig& cfg, int batch_blocks = 1);

// Convenience inference path (fresh tape, no gradients kept).
ImputationResult forward(const EncodedBatch& batch, const std::vector<double>& target_times,
                         ModelParams& params, const ModelConfig& cfg);

// Diagonal-Gaussian draw per target; fixed seed gives identical draws.
std::vector<std::vector<double>> sample(const ImputationResult& result, uint64_t seed);

struct AttentionMaps {
  // weights[block][head] is an n x n row-stochastic matrix
  std::vector<std::vector<Tensor>> weights;
};

AttentionMaps export_attention(const EncodedBatch& batch, ModelParams& params,
                               const ModelConfig& cfg);

std::string attention_to_csv(const AttentionMaps& maps);
AttentionMaps attention_from_csv(const std::string& csv);

}  // namespace nrtsi
