// Copyright 2026 The LSFL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lsfl/model.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lsfl/rng.h"

namespace lsfl {
namespace {

constexpr double kNormEps = 1e-6;
constexpr double kEmbeddingStd = 0.02;

// y[n, out] = x[n, in] * w[in, out].
template <typename T>
void MatMul(const T* x, const T* w, T* y, int n, int in, int out) {
  for (int i = 0; i < n; ++i) {
    T* yi = y + static_cast<size_t>(i) * out;
    std::fill(yi, yi + out, T{0});
    const T* xi = x + static_cast<size_t>(i) * in;
    for (int k = 0; k < in; ++k) {
      const T xv = xi[k];
      const T* wk = w + static_cast<size_t>(k) * out;
      for (int j = 0; j < out; ++j) yi[j] += xv * wk[j];
    }
  }
}

// dx += dy * w^T and dw += x^T * dy. Either output may be null.
template <typename T>
void MatMulBackward(const T* x, const T* w, const T* dy, T* dx, T* dw, int n,
                    int in, int out) {
  if (dx != nullptr) {
    // Row-wise axpy over w^T keeps the inner loop free of reductions.
    thread_local std::vector<T> wt;
    wt.resize(static_cast<size_t>(in) * out);
    for (int k = 0; k < in; ++k) {
      for (int j = 0; j < out; ++j) {
        wt[static_cast<size_t>(j) * in + k] = w[static_cast<size_t>(k) * out + j];
      }
    }
    for (int i = 0; i < n; ++i) {
      const T* dyi = dy + static_cast<size_t>(i) * out;
      T* dxi = dx + static_cast<size_t>(i) * in;
      for (int j = 0; j < out; ++j) {
        const T g = dyi[j];
        const T* wj = wt.data() + static_cast<size_t>(j) * in;
        for (int k = 0; k < in; ++k) dxi[k] += g * wj[k];
      }
    }
  }
  if (dw != nullptr) {
    for (int i = 0; i < n; ++i) {
      const T* dyi = dy + static_cast<size_t>(i) * out;
      const T* xi = x + static_cast<size_t>(i) * in;
      for (int k = 0; k < in; ++k) {
        const T xv = xi[k];
        T* dwk = dw + static_cast<size_t>(k) * out;
        for (int j = 0; j < out; ++j) dwk[j] += xv * dyi[j];
      }
    }
  }
}

template <typename T>
void RmsNorm(const T* x, const T* gain, T* y, T* rinv, int n, int d) {
  for (int i = 0; i < n; ++i) {
    const T* xi = x + static_cast<size_t>(i) * d;
    T* yi = y + static_cast<size_t>(i) * d;
    T ss{0};
    for (int j = 0; j < d; ++j) ss += xi[j] * xi[j];
    const T r = T{1} / std::sqrt(ss / static_cast<T>(d) + static_cast<T>(kNormEps));
    rinv[i] = r;
    for (int j = 0; j < d; ++j) yi[j] = xi[j] * r * gain[j];
  }
}

// dx += d(norm)/dx applied to dy; dgain += dy * x * r when dgain is set.
template <typename T>
void RmsNormBackward(const T* x, const T* gain, const T* rinv, const T* dy,
                     T* dx, T* dgain, int n, int d) {
  for (int i = 0; i < n; ++i) {
    const T* xi = x + static_cast<size_t>(i) * d;
    const T* dyi = dy + static_cast<size_t>(i) * d;
    T* dxi = dx + static_cast<size_t>(i) * d;
    const T r = rinv[i];
    T dot{0};
    for (int j = 0; j < d; ++j) dot += gain[j] * dyi[j] * xi[j];
    const T coef = r * r * r * dot / static_cast<T>(d);
    for (int j = 0; j < d; ++j) {
      if (dgain != nullptr) dgain[j] += dyi[j] * xi[j] * r;
      dxi[j] += r * gain[j] * dyi[j] - coef * xi[j];
    }
  }
}

template <typename T>
T Sigmoid(T x) {
  return T{1} / (T{1} + std::exp(-x));
}

template <typename T>
struct BlockWeights {
  const T* attn_norm;
  const T* wq;
  const T* wk;
  const T* wv;
  const T* wo;
  const T* ffn_norm;
  const T* w_gate;
  const T* w_up;
  const T* w_down;
};

template <typename T>
struct BlockGrads {
  T* attn_norm = nullptr;
  T* wq = nullptr;
  T* wk = nullptr;
  T* wv = nullptr;
  T* wo = nullptr;
  T* ffn_norm = nullptr;
  T* w_gate = nullptr;
  T* w_up = nullptr;
  T* w_down = nullptr;
};

template <typename T>
BlockWeights<T> ViewBlock(const TensorGroup<T>& g) {
  return {g.at("attn_norm").data(), g.at("wq").data(),     g.at("wk").data(),
          g.at("wv").data(),        g.at("wo").data(),     g.at("ffn_norm").data(),
          g.at("w_gate").data(),    g.at("w_up").data(),   g.at("w_down").data()};
}

template <typename T>
BlockGrads<T> ViewBlockGrads(TensorGroup<T>& g) {
  return {g.at("attn_norm").data(), g.at("wq").data(),     g.at("wk").data(),
          g.at("wv").data(),        g.at("wo").data(),     g.at("ffn_norm").data(),
          g.at("w_gate").data(),    g.at("w_up").data(),   g.at("w_down").data()};
}

template <typename T>
struct BlockCache {
  std::vector<T> x_in, h1, r1, q, k, v, probs, o, x_mid, h2, r2, gate, up, act;
};

template <typename T>
struct SampleCache {
  int n = 0;
  std::vector<BlockCache<T>> blocks;
  std::vector<T> x_final, hf, rf, pooled, logits;
};

template <typename T>
void BlockForward(const ModelConfig& cfg, const BlockWeights<T>& w,
                  std::vector<T>& x, BlockCache<T>& c, int n) {
  const int d = cfg.d_model;
  const int dff = cfg.d_ff;
  const int heads = cfg.n_heads;
  const int hd = cfg.head_dim();
  const size_t nd = static_cast<size_t>(n) * d;
  const T scale = T{1} / std::sqrt(static_cast<T>(hd));

  c.x_in = x;
  c.h1.resize(nd);
  c.r1.resize(n);
  RmsNorm(x.data(), w.attn_norm, c.h1.data(), c.r1.data(), n, d);
  c.q.resize(nd);
  c.k.resize(nd);
  c.v.resize(nd);
  MatMul(c.h1.data(), w.wq, c.q.data(), n, d, d);
  MatMul(c.h1.data(), w.wk, c.k.data(), n, d, d);
  MatMul(c.h1.data(), w.wv, c.v.data(), n, d, d);

  c.probs.assign(static_cast<size_t>(heads) * n * n, T{0});
  c.o.assign(nd, T{0});
  for (int hh = 0; hh < heads; ++hh) {
    const int off = hh * hd;
    for (int i = 0; i < n; ++i) {
      T* p = c.probs.data() + (static_cast<size_t>(hh) * n + i) * n;
      const T* qi = c.q.data() + static_cast<size_t>(i) * d + off;
      T mx = -std::numeric_limits<T>::infinity();
      for (int j = 0; j < n; ++j) {
        const T* kj = c.k.data() + static_cast<size_t>(j) * d + off;
        T s{0};
        for (int e = 0; e < hd; ++e) s += qi[e] * kj[e];
        p[j] = s * scale;
        mx = std::max(mx, p[j]);
      }
      T z{0};
      for (int j = 0; j < n; ++j) {
        p[j] = std::exp(p[j] - mx);
        z += p[j];
      }
      T* oi = c.o.data() + static_cast<size_t>(i) * d + off;
      for (int j = 0; j < n; ++j) {
        p[j] /= z;
        const T* vj = c.v.data() + static_cast<size_t>(j) * d + off;
        for (int e = 0; e < hd; ++e) oi[e] += p[j] * vj[e];
      }
    }
  }

  std::vector<T> attn(nd);
  MatMul(c.o.data(), w.wo, attn.data(), n, d, d);
  c.x_mid.resize(nd);
  for (size_t i = 0; i < nd; ++i) c.x_mid[i] = x[i] + attn[i];

  c.h2.resize(nd);
  c.r2.resize(n);
  RmsNorm(c.x_mid.data(), w.ffn_norm, c.h2.data(), c.r2.data(), n, d);
  const size_t nf = static_cast<size_t>(n) * dff;
  c.gate.resize(nf);
  c.up.resize(nf);
  c.act.resize(nf);
  MatMul(c.h2.data(), w.w_gate, c.gate.data(), n, d, dff);
  MatMul(c.h2.data(), w.w_up, c.up.data(), n, d, dff);
  for (size_t i = 0; i < nf; ++i) {
    c.act[i] = c.gate[i] * Sigmoid(c.gate[i]) * c.up[i];
  }
  std::vector<T> ffn(nd);
  MatMul(c.act.data(), w.w_down, ffn.data(), n, dff, d);
  for (size_t i = 0; i < nd; ++i) x[i] = c.x_mid[i] + ffn[i];
}

// `dx` holds the gradient w.r.t. the block output on entry and the gradient
// w.r.t. the block input on exit.
template <typename T>
void BlockBackward(const ModelConfig& cfg, const BlockWeights<T>& w,
                   const BlockGrads<T>& g, const BlockCache<T>& c,
                   std::vector<T>& dx, int n) {
  const int d = cfg.d_model;
  const int dff = cfg.d_ff;
  const int heads = cfg.n_heads;
  const int hd = cfg.head_dim();
  const size_t nd = static_cast<size_t>(n) * d;
  const size_t nf = static_cast<size_t>(n) * dff;
  const T scale = T{1} / std::sqrt(static_cast<T>(hd));

  // Feed-forward branch.
  std::vector<T> d_act(nf, T{0});
  MatMulBackward(c.act.data(), w.w_down, dx.data(), d_act.data(), g.w_down, n,
                 dff, d);
  std::vector<T> d_gate(nf);
  std::vector<T> d_up(nf);
  for (size_t i = 0; i < nf; ++i) {
    const T s = Sigmoid(c.gate[i]);
    const T silu = c.gate[i] * s;
    d_up[i] = d_act[i] * silu;
    d_gate[i] = d_act[i] * c.up[i] * s * (T{1} + c.gate[i] * (T{1} - s));
  }
  std::vector<T> d_h2(nd, T{0});
  MatMulBackward(c.h2.data(), w.w_gate, d_gate.data(), d_h2.data(), g.w_gate,
                 n, d, dff);
  MatMulBackward(c.h2.data(), w.w_up, d_up.data(), d_h2.data(), g.w_up, n, d,
                 dff);
  std::vector<T> d_mid = dx;
  RmsNormBackward(c.x_mid.data(), w.ffn_norm, c.r2.data(), d_h2.data(),
                  d_mid.data(), g.ffn_norm, n, d);

  // Attention branch.
  std::vector<T> d_o(nd, T{0});
  MatMulBackward(c.o.data(), w.wo, d_mid.data(), d_o.data(), g.wo, n, d, d);
  std::vector<T> dq(nd, T{0});
  std::vector<T> dk(nd, T{0});
  std::vector<T> dv(nd, T{0});
  std::vector<T> dp(n);
  for (int hh = 0; hh < heads; ++hh) {
    const int off = hh * hd;
    for (int i = 0; i < n; ++i) {
      const T* p = c.probs.data() + (static_cast<size_t>(hh) * n + i) * n;
      const T* doi = d_o.data() + static_cast<size_t>(i) * d + off;
      T weighted{0};
      for (int j = 0; j < n; ++j) {
        const T* vj = c.v.data() + static_cast<size_t>(j) * d + off;
        T* dvj = dv.data() + static_cast<size_t>(j) * d + off;
        T acc{0};
        for (int e = 0; e < hd; ++e) {
          acc += doi[e] * vj[e];
          dvj[e] += p[j] * doi[e];
        }
        dp[j] = acc;
        weighted += p[j] * acc;
      }
      const T* qi = c.q.data() + static_cast<size_t>(i) * d + off;
      T* dqi = dq.data() + static_cast<size_t>(i) * d + off;
      for (int j = 0; j < n; ++j) {
        const T ds = p[j] * (dp[j] - weighted) * scale;
        const T* kj = c.k.data() + static_cast<size_t>(j) * d + off;
        T* dkj = dk.data() + static_cast<size_t>(j) * d + off;
        for (int e = 0; e < hd; ++e) {
          dqi[e] += ds * kj[e];
          dkj[e] += ds * qi[e];
        }
      }
    }
  }
  std::vector<T> d_h1(nd, T{0});
  MatMulBackward(c.h1.data(), w.wq, dq.data(), d_h1.data(), g.wq, n, d, d);
  MatMulBackward(c.h1.data(), w.wk, dk.data(), d_h1.data(), g.wk, n, d, d);
  MatMulBackward(c.h1.data(), w.wv, dv.data(), d_h1.data(), g.wv, n, d, d);
  dx = std::move(d_mid);
  RmsNormBackward(c.x_in.data(), w.attn_norm, c.r1.data(), d_h1.data(),
                  dx.data(), g.attn_norm, n, d);
}

template <typename T>
void ForwardWithCache(const ModelConfig& cfg, const ParamSet<T>& params,
                      const Sample& sample, SampleCache<T>& cache) {
  const int n = static_cast<int>(sample.tokens.size());
  const int d = cfg.d_model;
  cache.n = n;
  const auto& emb = params.at(0);
  const T* tok = emb.at("tok_emb").data();
  const T* pos = emb.at("pos_emb").data();
  std::vector<T> x(static_cast<size_t>(n) * d);
  for (int p = 0; p < n; ++p) {
    const T* trow = tok + static_cast<size_t>(sample.tokens[p]) * d;
    const T* prow = pos + static_cast<size_t>(p) * d;
    for (int j = 0; j < d; ++j) x[static_cast<size_t>(p) * d + j] = trow[j] + prow[j];
  }
  cache.blocks.resize(cfg.n_blocks);
  for (int b = 1; b <= cfg.n_blocks; ++b) {
    BlockForward(cfg, ViewBlock(params.at(b)), x, cache.blocks[b - 1], n);
  }
  cache.x_final = std::move(x);

  const auto& head = params.at(cfg.head_layer());
  const int out = cfg.OutputDim();
  cache.hf.resize(static_cast<size_t>(n) * d);
  cache.rf.resize(n);
  RmsNorm(cache.x_final.data(), head.at("final_norm").data(), cache.hf.data(),
          cache.rf.data(), n, d);
  const T* w_out = head.at("w_out").data();
  if (cfg.task == TaskKind::kMultilabel) {
    cache.pooled.assign(d, T{0});
    for (int p = 0; p < n; ++p) {
      for (int j = 0; j < d; ++j) cache.pooled[j] += cache.hf[static_cast<size_t>(p) * d + j];
    }
    for (int j = 0; j < d; ++j) cache.pooled[j] /= static_cast<T>(n);
    cache.logits.resize(out);
    MatMul(cache.pooled.data(), w_out, cache.logits.data(), 1, d, out);
  } else {
    cache.logits.resize(static_cast<size_t>(n) * out);
    MatMul(cache.hf.data(), w_out, cache.logits.data(), n, d, out);
  }
}

// Sample loss and, when `dlogits` is set, its gradient w.r.t. the logits.
template <typename T>
double SampleLoss(const ModelConfig& cfg, const Sample& sample,
                  const std::vector<T>& logits, std::vector<T>* dlogits) {
  const int out = cfg.OutputDim();
  if (dlogits != nullptr) dlogits->assign(logits.size(), T{0});
  if (cfg.task == TaskKind::kMultilabel) {
    double total = 0.0;
    for (int k = 0; k < out; ++k) {
      const T z = logits[k];
      const T y = static_cast<T>(sample.labels[k]);
      total += static_cast<double>(std::max(z, T{0}) - z * y +
                                   std::log1p(std::exp(-std::abs(z))));
      if (dlogits != nullptr) {
        (*dlogits)[k] = (Sigmoid(z) - y) / static_cast<T>(out);
      }
    }
    return total / out;
  }
  const int n = static_cast<int>(sample.tokens.size());
  int count = 0;
  for (int p = 0; p < n; ++p) count += sample.targets[p] >= 0 ? 1 : 0;
  if (count == 0) return 0.0;
  double total = 0.0;
  for (int p = 0; p < n; ++p) {
    const int target = sample.targets[p];
    if (target < 0) continue;
    const T* row = logits.data() + static_cast<size_t>(p) * out;
    T mx = row[0];
    for (int j = 1; j < out; ++j) mx = std::max(mx, row[j]);
    T z{0};
    for (int j = 0; j < out; ++j) z += std::exp(row[j] - mx);
    const T log_z = std::log(z) + mx;
    total += static_cast<double>(log_z - row[target]);
    if (dlogits != nullptr) {
      T* drow = dlogits->data() + static_cast<size_t>(p) * out;
      for (int j = 0; j < out; ++j) {
        drow[j] = std::exp(row[j] - log_z) / static_cast<T>(count);
      }
      drow[target] -= T{1} / static_cast<T>(count);
    }
  }
  return total / count;
}

template <typename T>
TensorGroup<T> ZeroGroup(const ModelConfig& cfg, int layer_id) {
  TensorGroup<T> group;
  for (auto& [name, shape] : GroupLayout(cfg, layer_id)) {
    group.emplace(name, Tensor<T>(shape));
  }
  return group;
}

template <typename T>
void BackwardSample(const ModelConfig& cfg, const ParamSet<T>& params,
                    const LayerPartition& partition, const Sample& sample,
                    const SampleCache<T>& cache, const std::vector<T>& dlogits,
                    GradSet<T>& grads) {
  const int n = cache.n;
  const int d = cfg.d_model;
  const int out = cfg.OutputDim();
  const int head_id = cfg.head_layer();
  const int lowest = partition.trainable.empty() ? head_id + 1
                                                 : *partition.trainable.begin();
  if (lowest > head_id) return;

  const auto& head = params.at(head_id);
  TensorGroup<T>* head_grad =
      partition.IsTrainable(head_id) ? &grads.at(head_id) : nullptr;
  const T* w_out = head.at("w_out").data();
  std::vector<T> d_hf(static_cast<size_t>(n) * d, T{0});
  if (cfg.task == TaskKind::kMultilabel) {
    std::vector<T> d_pooled(d, T{0});
    MatMulBackward(cache.pooled.data(), w_out, dlogits.data(), d_pooled.data(),
                   head_grad ? head_grad->at("w_out").data() : nullptr, 1, d,
                   out);
    for (int p = 0; p < n; ++p) {
      for (int j = 0; j < d; ++j) {
        d_hf[static_cast<size_t>(p) * d + j] = d_pooled[j] / static_cast<T>(n);
      }
    }
  } else {
    MatMulBackward(cache.hf.data(), w_out, dlogits.data(), d_hf.data(),
                   head_grad ? head_grad->at("w_out").data() : nullptr, n, d,
                   out);
  }
  if (head_grad != nullptr) {
    // Final-norm gain gradient; dx is discarded when nothing below trains.
    std::vector<T> scratch(static_cast<size_t>(n) * d, T{0});
    RmsNormBackward(cache.x_final.data(), head.at("final_norm").data(),
                    cache.rf.data(), d_hf.data(), scratch.data(),
                    head_grad->at("final_norm").data(), n, d);
    if (lowest == head_id) return;
    d_hf.swap(scratch);
  } else {
    std::vector<T> dx(static_cast<size_t>(n) * d, T{0});
    RmsNormBackward(cache.x_final.data(), head.at("final_norm").data(),
                    cache.rf.data(), d_hf.data(), dx.data(),
                    static_cast<T*>(nullptr), n, d);
    d_hf.swap(dx);
  }
  std::vector<T>& dx = d_hf;

  const int stop = std::max(lowest, 1);
  for (int b = cfg.n_blocks; b >= stop; --b) {
    BlockGrads<T> g;
    if (partition.IsTrainable(b)) g = ViewBlockGrads(grads.at(b));
    BlockBackward(cfg, ViewBlock(params.at(b)), g, cache.blocks[b - 1], dx, n);
  }
  if (lowest == 0) {
    auto& eg = grads.at(0);
    T* dtok = eg.at("tok_emb").data();
    T* dpos = eg.at("pos_emb").data();
    for (int p = 0; p < n; ++p) {
      T* trow = dtok + static_cast<size_t>(sample.tokens[p]) * d;
      T* prow = dpos + static_cast<size_t>(p) * d;
      const T* drow = dx.data() + static_cast<size_t>(p) * d;
      for (int j = 0; j < d; ++j) {
        trow[j] += drow[j];
        prow[j] += drow[j];
      }
    }
  }
}

template <typename T>
void AddInto(GradSet<T>& acc, const GradSet<T>& g) {
  for (auto& [id, group] : acc) {
    const auto& src = g.at(id);
    for (auto& [name, t] : group) {
      const auto& s = src.at(name);
      for (size_t i = 0; i < t.size(); ++i) t[i] += s[i];
    }
  }
}

}  // namespace

const char* TaskKindName(TaskKind task) {
  switch (task) {
    case TaskKind::kTagging:
      return "tagging";
    case TaskKind::kMultilabel:
      return "multilabel";
    case TaskKind::kMlm:
      return "mlm";
  }
  return "?";
}

TaskKind ParseTaskKind(const std::string& name) {
  if (name == "tagging") return TaskKind::kTagging;
  if (name == "multilabel") return TaskKind::kMultilabel;
  if (name == "mlm") return TaskKind::kMlm;
  throw ConfigError("unknown task '" + name + "'");
}

int ModelConfig::OutputDim() const {
  switch (task) {
    case TaskKind::kTagging:
      return 2 * num_types + 1;
    case TaskKind::kMultilabel:
      return num_types;
    case TaskKind::kMlm:
      return vocab_size;
  }
  return 0;
}

void ModelConfig::Validate() const {
  if (vocab_size < 1) throw ConfigError("model.vocab_size must be >= 1");
  if (d_model < 1) throw ConfigError("model.d_model must be >= 1");
  if (n_heads < 1) throw ConfigError("model.n_heads must be >= 1");
  if (d_model % n_heads != 0) {
    throw ConfigError("model.n_heads (" + std::to_string(n_heads) +
                      ") does not divide model.d_model (" +
                      std::to_string(d_model) + ")");
  }
  if (n_blocks < 1) throw ConfigError("model.n_blocks must be >= 1");
  if (d_ff < 1) throw ConfigError("model.d_ff must be >= 1");
  if (max_seq_len < 1) throw ConfigError("model.max_seq_len must be >= 1");
  if (task != TaskKind::kMlm && num_types < 1) {
    throw ConfigError("number of entity types/labels K must be >= 1");
  }
}

std::vector<std::pair<std::string, std::vector<size_t>>> GroupLayout(
    const ModelConfig& cfg, int layer_id) {
  const size_t d = cfg.d_model;
  const size_t dff = cfg.d_ff;
  if (layer_id == 0) {
    return {{"pos_emb", {static_cast<size_t>(cfg.max_seq_len), d}},
            {"tok_emb", {static_cast<size_t>(cfg.vocab_size), d}}};
  }
  if (layer_id == cfg.head_layer()) {
    return {{"final_norm", {d}},
            {"w_out", {d, static_cast<size_t>(cfg.OutputDim())}}};
  }
  if (layer_id < 0 || layer_id > cfg.head_layer()) {
    throw InternalError("layer id " + std::to_string(layer_id) +
                        " outside the model");
  }
  return {{"attn_norm", {d}}, {"ffn_norm", {d}},      {"w_down", {dff, d}},
          {"w_gate", {d, dff}}, {"w_up", {d, dff}},   {"wk", {d, d}},
          {"wo", {d, d}},       {"wq", {d, d}},       {"wv", {d, d}}};
}

std::vector<size_t> GroupParamCounts(const ModelConfig& cfg) {
  std::vector<size_t> counts;
  for (int id = 0; id <= cfg.head_layer(); ++id) {
    size_t n = 0;
    for (const auto& [name, shape] : GroupLayout(cfg, id)) n += ShapeSize(shape);
    counts.push_back(n);
  }
  return counts;
}

size_t TotalParamCount(const ModelConfig& cfg) {
  size_t n = 0;
  for (size_t c : GroupParamCounts(cfg)) n += c;
  return n;
}

bool IsDecayed(int layer_id, const std::string& name) {
  if (layer_id == 0) return false;
  return name.rfind("w", 0) == 0;
}

namespace {

template <typename T>
TensorGroup<T> InitGroup(const ModelConfig& cfg, int layer_id, uint64_t seed) {
  Rng rng(SplitMix64(seed ^ (0xD1B54A32D192ED03ULL *
                             static_cast<uint64_t>(layer_id + 1))));
  const double linear_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  TensorGroup<T> group;
  for (auto& [name, shape] : GroupLayout(cfg, layer_id)) {
    Tensor<T> t(shape);
    if (name.find("norm") != std::string::npos) {
      t.Fill(T{1});
    } else {
      const double std = layer_id == 0 ? kEmbeddingStd : linear_std;
      for (size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<T>(std * rng.Gaussian());
      }
    }
    group.emplace(name, std::move(t));
  }
  return group;
}

}  // namespace

template <typename T>
ParamSet<T> InitParams(const ModelConfig& cfg, uint64_t seed) {
  cfg.Validate();
  ParamSet<T> params;
  for (int id = 0; id <= cfg.head_layer(); ++id) {
    params.emplace(id, InitGroup<T>(cfg, id, seed));
  }
  return params;
}

template <typename T>
TensorGroup<T> InitHead(const ModelConfig& cfg, uint64_t seed) {
  cfg.Validate();
  return InitGroup<T>(cfg, cfg.head_layer(), seed);
}

void CheckBatch(const ModelConfig& cfg, std::span<const Sample> batch) {
  if (batch.empty()) throw InputError("empty batch");
  for (size_t b = 0; b < batch.size(); ++b) {
    const Sample& s = batch[b];
    if (s.tokens.empty()) {
      throw InputError("sample " + std::to_string(b) + " has no tokens");
    }
    if (static_cast<int>(s.tokens.size()) > cfg.max_seq_len) {
      throw InputError("sample " + std::to_string(b) + " length " +
                       std::to_string(s.tokens.size()) +
                       " exceeds max_seq_len " +
                       std::to_string(cfg.max_seq_len));
    }
    for (int32_t t : s.tokens) {
      if (t < 0 || t >= cfg.vocab_size) {
        throw InputError("token id " + std::to_string(t) +
                         " out of range for vocab size " +
                         std::to_string(cfg.vocab_size));
      }
    }
  }
}

namespace {

void CheckTargets(const ModelConfig& cfg, std::span<const Sample> batch) {
  for (const Sample& s : batch) {
    if (cfg.task == TaskKind::kMultilabel) {
      if (static_cast<int>(s.labels.size()) != cfg.num_types) {
        throw InputError("multilabel sample has " +
                         std::to_string(s.labels.size()) + " labels, want " +
                         std::to_string(cfg.num_types));
      }
    } else {
      if (s.targets.size() != s.tokens.size()) {
        throw InputError("targets length does not match tokens length");
      }
      for (int32_t t : s.targets) {
        if (t < -1 || t >= cfg.OutputDim()) {
          throw InputError("target id " + std::to_string(t) + " out of range");
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> ForwardSample(const ModelConfig& cfg, const ParamSet<T>& params,
                        const Sample& sample) {
  CheckBatch(cfg, std::span<const Sample>(&sample, 1));
  SampleCache<T> cache;
  ForwardWithCache(cfg, params, sample, cache);
  const size_t out = cfg.OutputDim();
  if (cfg.task == TaskKind::kMultilabel) {
    return Tensor<T>({out}, std::move(cache.logits));
  }
  return Tensor<T>({sample.tokens.size(), out}, std::move(cache.logits));
}

template <typename T>
Tensor<T> Forward(const ModelConfig& cfg, const ParamSet<T>& params,
                  std::span<const Sample> batch) {
  CheckBatch(cfg, batch);
  const size_t out = cfg.OutputDim();
  const size_t n = batch[0].tokens.size();
  const bool pooled = cfg.task == TaskKind::kMultilabel;
  if (!pooled) {
    for (const Sample& s : batch) {
      if (s.tokens.size() != n) {
        throw InputError("batched forward needs equal sequence lengths");
      }
    }
  }
  std::vector<size_t> shape = pooled ? std::vector<size_t>{batch.size(), out}
                                     : std::vector<size_t>{batch.size(), n, out};
  Tensor<T> logits(shape);
  const size_t stride = pooled ? out : n * out;
  SampleCache<T> cache;
  for (size_t b = 0; b < batch.size(); ++b) {
    ForwardWithCache(cfg, params, batch[b], cache);
    std::copy(cache.logits.begin(), cache.logits.end(),
              logits.data() + b * stride);
  }
  return logits;
}

template <typename T>
double Loss(const ModelConfig& cfg, const ParamSet<T>& params,
            std::span<const Sample> batch) {
  CheckBatch(cfg, batch);
  CheckTargets(cfg, batch);
  SampleCache<T> cache;
  double total = 0.0;
  for (const Sample& s : batch) {
    ForwardWithCache(cfg, params, s, cache);
    total += SampleLoss<T>(cfg, s, cache.logits, nullptr);
  }
  return total / static_cast<double>(batch.size());
}

template <typename T>
LossAndGradsResult<T> LossAndGrads(const ModelConfig& cfg,
                                   const ParamSet<T>& params,
                                   const LayerPartition& partition,
                                   std::span<const Sample> batch,
                                   bool per_example) {
  CheckBatch(cfg, batch);
  CheckTargets(cfg, batch);
  for (int id : partition.trainable) {
    if (id < 0 || id > cfg.head_layer()) {
      throw ConfigError("partition names layer " + std::to_string(id) +
                        " outside the model");
    }
  }
  GradSet<T> zero;
  for (int id : partition.trainable) zero.emplace(id, ZeroGroup<T>(cfg, id));

  LossAndGradsResult<T> result;
  if (!per_example) result.grads = zero;
  SampleCache<T> cache;
  std::vector<T> dlogits;
  double total = 0.0;
  for (const Sample& s : batch) {
    ForwardWithCache(cfg, params, s, cache);
    total += SampleLoss<T>(cfg, s, cache.logits, &dlogits);
    GradSet<T> g = zero;
    BackwardSample(cfg, params, partition, s, cache, dlogits, g);
    if (per_example) {
      result.per_example.push_back(std::move(g));
    } else {
      AddInto(result.grads, g);
    }
  }
  if (!per_example) {
    const T count = static_cast<T>(batch.size());
    for (auto& [id, group] : result.grads) {
      for (auto& [name, t] : group) {
        for (size_t i = 0; i < t.size(); ++i) t[i] /= count;
      }
    }
  }
  result.loss = total / static_cast<double>(batch.size());
  return result;
}

#define LSFL_INSTANTIATE_MODEL(T)                                              \
  template ParamSet<T> InitParams<T>(const ModelConfig&, uint64_t);            \
  template TensorGroup<T> InitHead<T>(const ModelConfig&, uint64_t);           \
  template Tensor<T> Forward<T>(const ModelConfig&, const ParamSet<T>&,        \
                                std::span<const Sample>);                      \
  template Tensor<T> ForwardSample<T>(const ModelConfig&, const ParamSet<T>&,  \
                                      const Sample&);                          \
  template double Loss<T>(const ModelConfig&, const ParamSet<T>&,              \
                          std::span<const Sample>);                            \
  template LossAndGradsResult<T> LossAndGrads<T>(                              \
      const ModelConfig&, const ParamSet<T>&, const LayerPartition&,           \
      std::span<const Sample>, bool);

LSFL_INSTANTIATE_MODEL(float)
LSFL_INSTANTIATE_MODEL(double)

#undef LSFL_INSTANTIATE_MODEL

}  // namespace lsfl
