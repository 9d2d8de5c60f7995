#include "nrtsi/model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace nrtsi {

ModelConfig paper_scale_config(int data_dim) {
  ModelConfig cfg;
  cfg.data_dim = data_dim;
  cfg.hidden_dim = 1024;
  cfg.blocks = 8;
  cfg.heads = 12;
  cfg.head_dim = 128;
  cfg.ff_dim = 2048;
  return cfg;
}

EncodedBatch encode_inputs(const SeriesSet& observed, const std::vector<double>& target_times,
                           const ModelConfig& cfg) {
  if (observed.dim != cfg.data_dim)
    throw std::invalid_argument("encode_inputs: series dim does not match model data_dim");
  const TimeCodecConfig codec = cfg.codec();
  const int w = cfg.input_width();
  const long n = static_cast<long>(observed.size() + target_times.size());
  EncodedBatch batch;
  batch.elements = Tensor(n, w);
  long r = 0;
  for (const auto& p : observed.points) {
    if (static_cast<int>(p.data.size()) != cfg.data_dim)
      throw std::invalid_argument("encode_inputs: point dim mismatch");
    double* row = &batch.elements.at(r, 0);
    encode_time_into(p.time, codec, row);
    for (int d = 0; d < cfg.data_dim; ++d) row[cfg.tau + d] = p.data[d];
    row[cfg.tau + cfg.data_dim] = 1.0;
    ++r;
  }
  for (double t : target_times) {
    double* row = &batch.elements.at(r, 0);
    encode_time_into(t, codec, row);
    batch.target_rows.push_back(static_cast<int>(r));
    ++r;
  }
  return batch;
}

EncodedBatch encode_inputs_partial(const SeriesSet& points, const std::vector<double>& target_times,
                                   const ModelConfig& cfg) {
  if (!cfg.partial_dims) throw std::invalid_argument("model not configured for partial mode");
  if (points.dim != cfg.data_dim)
    throw std::invalid_argument("encode_inputs_partial: dim mismatch");
  const TimeCodecConfig codec = cfg.codec();
  const int w = cfg.input_width();
  EncodedBatch batch;
  batch.elements = Tensor(static_cast<long>(points.size()), w);
  std::vector<uint8_t> is_target(points.size(), 0);
  long r = 0;
  for (const auto& p : points.points) {
    double* row = &batch.elements.at(r, 0);
    encode_time_into(p.time, codec, row);
    for (int d = 0; d < cfg.data_dim; ++d) {
      const bool obs = p.dim_mask[d] != 0;
      row[cfg.tau + d] = obs ? p.data[d] : 0.0;
      row[cfg.tau + cfg.data_dim + d] = obs ? 1.0 : 0.0;
    }
    for (double t : target_times)
      if (t == p.time) is_target[r] = 1;
    ++r;
  }
  for (long i = 0; i < r; ++i)
    if (is_target[i]) batch.target_rows.push_back(static_cast<int>(i));
  return batch;
}

ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
  ModelParams p;
  Rng rng(seed);
  auto glorot = [&](Tensor& t) {
    const double bound = std::sqrt(6.0 / static_cast<double>(t.n_rows + t.n_cols));
    for (double& v : t.values) v = rng.uniform(-bound, bound);
  };
  auto dense = [&](const std::string& name, long in, long out) {
    glorot(p.store.add(name + ".W", in, out));
    p.store.add(name + ".b", 1, out);
  };
  dense("f_in", cfg.input_width(), cfg.hidden_dim);
  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string blk = "blk" + std::to_string(b);
    for (int h = 0; h < cfg.heads; ++h) {
      const std::string hd = blk + ".h" + std::to_string(h);
      dense(hd + ".q", cfg.hidden_dim, cfg.head_dim);
      dense(hd + ".k", cfg.hidden_dim, cfg.head_dim);
      dense(hd + ".v", cfg.hidden_dim, cfg.head_dim);
    }
    dense(blk + ".o", cfg.heads * cfg.head_dim, cfg.hidden_dim);
    dense(blk + ".ff1", cfg.hidden_dim, cfg.ff_dim);
    dense(blk + ".ff2", cfg.ff_dim, cfg.hidden_dim);
  }
  dense("f_out", cfg.hidden_dim, cfg.data_dim);
  if (cfg.stochastic_head) {
    dense("mu", cfg.data_dim, cfg.data_dim);
    dense("sigma", cfg.data_dim, cfg.data_dim);
  }
  return p;
}

ForwardHandle forward_on_tape(Tape& tape, const EncodedBatch& batch, ModelParams& params,
                              const ModelConfig& cfg, int batch_blocks) {
  if (batch.elements.n_cols != cfg.input_width())
    throw std::invalid_argument("forward: element width does not match config");
  ForwardHandle h;
  auto pid = [&](const std::string& name) {
    const Tape::ValueId id = tape.param(params.store.get(name));
    h.param_ids.push_back(id);
    return id;
  };
  auto dense = [&](Tape::ValueId x, const std::string& name) {
    return tape.linear(x, pid(name + ".W"), pid(name + ".b"));
  };

  const long n_total = batch.elements.n_rows;
  if (batch_blocks < 1 || n_total % batch_blocks != 0)
    throw std::invalid_argument("forward: elements not divisible into batch blocks");
  const long n = n_total / batch_blocks;
  std::vector<int> local_targets;
  for (int r : batch.target_rows) {
    if (r < n) local_targets.push_back(r);
  }
  auto mask = make_target_mask(n, local_targets);
  // Stacked sets must share one target pattern for the shared mask to apply.
  for (int r : batch.target_rows) {
    bool ok = false;
    for (int lt : local_targets) ok |= (r % n == lt);
    if (!ok) throw std::invalid_argument("forward: target rows differ across batch blocks");
  }

  Tape::ValueId x = tape.constant(batch.elements);
  Tape::ValueId hcur = dense(x, "f_in");
  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string blk = "blk" + std::to_string(b);
    std::vector<Tape::ValueId> heads;
    for (int hh = 0; hh < cfg.heads; ++hh) {
      const std::string hd = blk + ".h" + std::to_string(hh);
      Tape::ValueId q = dense(hcur, hd + ".q");
      Tape::ValueId k = dense(hcur, hd + ".k");
      Tape::ValueId v = dense(hcur, hd + ".v");
      Tape::ValueId att = tape.scaled_dot_attention(q, k, v, mask, batch_blocks);
      h.attention_ids.push_back(att);
      heads.push_back(att);
    }
    Tape::ValueId merged = dense(tape.concat_cols(heads), blk + ".o");
    hcur = cfg.residual ? tape.add(hcur, merged) : merged;
    Tape::ValueId ff = dense(tape.relu(dense(hcur, blk + ".ff1")), blk + ".ff2");
    hcur = cfg.residual ? tape.add(hcur, ff) : ff;
  }
  Tape::ValueId g2 = tape.slice_rows(hcur, batch.target_rows);
  Tape::ValueId out = dense(g2, "f_out");
  if (cfg.stochastic_head) {
    h.log_sigma = tape.clamp(dense(out, "sigma"), -10.0, 5.0);
    out = dense(out, "mu");
  }
  h.output = out;
  return h;
}

ImputationResult forward(const EncodedBatch& batch, const std::vector<double>& target_times,
                         ModelParams& params, const ModelConfig& cfg) {
  if (target_times.size() != batch.target_rows.size())
    throw std::invalid_argument("forward: target count mismatch");
  Tape tape;
  ForwardHandle h = forward_on_tape(tape, batch, params, cfg);
  const Tensor& out = tape.value(h.output);
  ImputationResult res;
  res.target_times = target_times;
  res.stochastic = cfg.stochastic_head;
  res.predictions.resize(out.n_rows);
  for (long r = 0; r < out.n_rows; ++r) {
    res.predictions[r].assign(&out.at(r, 0), &out.at(r, 0) + out.n_cols);
  }
  if (cfg.stochastic_head) {
    const Tensor& ls = tape.value(h.log_sigma);
    res.log_sigma.resize(ls.n_rows);
    for (long r = 0; r < ls.n_rows; ++r)
      res.log_sigma[r].assign(&ls.at(r, 0), &ls.at(r, 0) + ls.n_cols);
  }
  return res;
}

std::vector<std::vector<double>> sample(const ImputationResult& result, uint64_t seed) {
  if (!result.stochastic) throw std::invalid_argument("no distribution head");
  Rng rng(seed);
  std::vector<std::vector<double>> draws(result.predictions.size());
  for (std::size_t i = 0; i < result.predictions.size(); ++i) {
    draws[i].resize(result.predictions[i].size());
    for (std::size_t d = 0; d < draws[i].size(); ++d) {
      const double sigma = std::exp(result.log_sigma[i][d]);
      draws[i][d] = result.predictions[i][d] + sigma * rng.gauss();
    }
  }
  return draws;
}

AttentionMaps export_attention(const EncodedBatch& batch, ModelParams& params,
                               const ModelConfig& cfg) {
  Tape tape;
  ForwardHandle h = forward_on_tape(tape, batch, params, cfg);
  AttentionMaps maps;
  maps.weights.resize(cfg.blocks);
  for (int b = 0; b < cfg.blocks; ++b) {
    maps.weights[b].reserve(cfg.heads);
    for (int hh = 0; hh < cfg.heads; ++hh)
      maps.weights[b].push_back(tape.attention_weights(h.attention_ids[b * cfg.heads + hh]));
  }
  return maps;
}

std::string attention_to_csv(const AttentionMaps& maps) {
  std::ostringstream out;
  out << "block,head,from_index,to_index,weight\n";
  char buf[64];
  for (std::size_t b = 0; b < maps.weights.size(); ++b) {
    for (std::size_t h = 0; h < maps.weights[b].size(); ++h) {
      const Tensor& w = maps.weights[b][h];
      for (long i = 0; i < w.n_rows; ++i) {
        for (long j = 0; j < w.n_cols; ++j) {
          std::snprintf(buf, sizeof buf, "%.17g", w.at(i, j));
          out << b << ',' << h << ',' << i << ',' << j << ',' << buf << '\n';
        }
      }
    }
  }
  return out.str();
}

AttentionMaps attention_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  struct Cell { int b, h; long i, j; double w; };
  std::vector<Cell> cells;
  int max_b = -1, max_h = -1;
  long max_i = -1, max_j = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Cell c{};
    if (std::sscanf(line.c_str(), "%d,%d,%ld,%ld,%lg", &c.b, &c.h, &c.i, &c.j, &c.w) != 5)
      throw std::invalid_argument("bad attention csv line: " + line);
    max_b = std::max(max_b, c.b);
    max_h = std::max(max_h, c.h);
    max_i = std::max(max_i, c.i);
    max_j = std::max(max_j, c.j);
    cells.push_back(c);
  }
  AttentionMaps maps;
  maps.weights.assign(max_b + 1, std::vector<Tensor>(max_h + 1, Tensor(max_i + 1, max_j + 1)));
  for (const auto& c : cells) maps.weights[c.b][c.h].at(c.i, c.j) = c.w;
  return maps;
}

}  // namespace nrtsi
