#include "semalign/model.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "semalign/checksum.hpp"
#include "semalign/errors.hpp"
#include "semalign/rng.hpp"

namespace semalign {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

constexpr double kLnEps = 1e-5;

ConstMap cmap(const double* p, std::size_t r, std::size_t c) {
  return ConstMap(p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
MutMap mmap(double* p, std::size_t r, std::size_t c) {
  return MutMap(p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

// out = x * W, W given as a flat in x out tensor.
Matrix linear(const Matrix& x, std::span<const double> w, std::size_t out_dim) {
  Matrix out(x.rows(), out_dim);
  mmap(out.data(), out.rows(), out_dim).noalias() =
      cmap(x.data(), x.rows(), x.cols()) * cmap(w.data(), x.cols(), out_dim);
  return out;
}

// dW += x^T * dy
void accumulate_weight_grad(const Matrix& x, const Matrix& dy, std::span<double> dw) {
  mmap(dw.data(), x.cols(), dy.cols()).noalias() +=
      cmap(x.data(), x.rows(), x.cols()).transpose() * cmap(dy.data(), dy.rows(), dy.cols());
}

// dx (+)= dy * W^T
void input_grad(const Matrix& dy, std::span<const double> w, Matrix& dx, bool accumulate) {
  auto dst = mmap(dx.data(), dx.rows(), dx.cols());
  auto prod = cmap(dy.data(), dy.rows(), dy.cols()) *
              cmap(w.data(), dx.cols(), dy.cols()).transpose();
  if (accumulate) {
    dst.noalias() += prod;
  } else {
    dst.noalias() = prod;
  }
}

void add_bias(Matrix& x, std::span<const double> b) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) row[c] += b[c];
  }
}

void accumulate_colsum(const Matrix& dy, std::span<double> db) {
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    auto row = dy.row(r);
    for (std::size_t c = 0; c < dy.cols(); ++c) db[c] += row[c];
  }
}

void layer_norm(const Matrix& x, std::span<const double> g, std::span<const double> b,
                Matrix& xhat, Vector& rstd, Matrix& y) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  xhat = Matrix(n, d);
  y = Matrix(n, d);
  rstd.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + kLnEps);
    rstd[r] = rs;
    auto hr = xhat.row(r);
    auto yr = y.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      hr[c] = (xr[c] - mean) * rs;
      yr[c] = hr[c] * g[c] + b[c];
    }
  }
}

// dx += LN backward of dy.
void layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Vector& rstd,
                         std::span<const double> g, std::span<double> dg, std::span<double> db,
                         Matrix& dx) {
  const std::size_t n = dy.rows();
  const std::size_t d = dy.cols();
  Vector dxhat(d);
  for (std::size_t r = 0; r < n; ++r) {
    auto dyr = dy.row(r);
    auto hr = xhat.row(r);
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      dg[c] += dyr[c] * hr[c];
      db[c] += dyr[c];
      dxhat[c] = dyr[c] * g[c];
      mean_dxhat += dxhat[c];
      mean_dxhat_xhat += dxhat[c] * hr[c];
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    auto dxr = dx.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      dxr[c] += rstd[r] * (dxhat[c] - mean_dxhat - hr[c] * mean_dxhat_xhat);
    }
  }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

// Causal multi-head attention over q, k, v (tokens x D, rows grouped by
// sequence). Writes probabilities and the context.
void attention_forward(const LmConfig& cfg, std::size_t batch, std::size_t seq, LayerCache& lc) {
  const std::size_t d = cfg.hidden_dim;
  const std::size_t heads = cfg.n_heads;
  const std::size_t hd = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  lc.probs.assign(batch * heads * seq * seq, 0.0);
  lc.context = Matrix(batch * seq, d);
  Vector scores(seq);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      double* p = lc.probs.data() + ((b * heads + h) * seq) * seq;
      for (std::size_t t = 0; t < seq; ++t) {
        const double* qt = lc.q.data() + (b * seq + t) * d + h * hd;
        double mx = -INFINITY;
        for (std::size_t s = 0; s <= t; ++s) {
          const double* ks = lc.k.data() + (b * seq + s) * d + h * hd;
          double acc = 0.0;
          for (std::size_t i = 0; i < hd; ++i) acc += qt[i] * ks[i];
          scores[s] = acc * scale;
          mx = std::max(mx, scores[s]);
        }
        double sum = 0.0;
        for (std::size_t s = 0; s <= t; ++s) {
          scores[s] = std::exp(scores[s] - mx);
          sum += scores[s];
        }
        double* ct = lc.context.data() + (b * seq + t) * d + h * hd;
        for (std::size_t s = 0; s <= t; ++s) {
          const double w = scores[s] / sum;
          p[t * seq + s] = w;
          const double* vs = lc.v.data() + (b * seq + s) * d + h * hd;
          for (std::size_t i = 0; i < hd; ++i) ct[i] += w * vs[i];
        }
      }
    }
  }
}

void attention_backward(const LmConfig& cfg, std::size_t batch, std::size_t seq,
                        const LayerCache& lc, const Matrix& dcontext, Matrix& dq, Matrix& dk,
                        Matrix& dv) {
  const std::size_t d = cfg.hidden_dim;
  const std::size_t heads = cfg.n_heads;
  const std::size_t hd = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  dq = Matrix(batch * seq, d);
  dk = Matrix(batch * seq, d);
  dv = Matrix(batch * seq, d);
  Vector dp(seq);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      const double* p = lc.probs.data() + ((b * heads + h) * seq) * seq;
      for (std::size_t t = 0; t < seq; ++t) {
        const double* dct = dcontext.data() + (b * seq + t) * d + h * hd;
        double weighted = 0.0;
        for (std::size_t s = 0; s <= t; ++s) {
          const double* vs = lc.v.data() + (b * seq + s) * d + h * hd;
          double* dvs = dv.data() + (b * seq + s) * d + h * hd;
          const double w = p[t * seq + s];
          double acc = 0.0;
          for (std::size_t i = 0; i < hd; ++i) {
            acc += dct[i] * vs[i];
            dvs[i] += w * dct[i];
          }
          dp[s] = acc;
          weighted += acc * w;
        }
        const double* qt = lc.q.data() + (b * seq + t) * d + h * hd;
        double* dqt = dq.data() + (b * seq + t) * d + h * hd;
        for (std::size_t s = 0; s <= t; ++s) {
          const double ds = p[t * seq + s] * (dp[s] - weighted) * scale;
          if (ds == 0.0) continue;
          const double* ks = lc.k.data() + (b * seq + s) * d + h * hd;
          double* dks = dk.data() + (b * seq + s) * d + h * hd;
          for (std::size_t i = 0; i < hd; ++i) {
            dqt[i] += ds * ks[i];
            dks[i] += ds * qt[i];
          }
        }
      }
    }
  }
}

bool has(const Matrix& m) { return !m.empty(); }

}  // namespace

void LmConfig::validate() const {
  if (n_layers < 1) throw ConfigError("n_layers must be >= 1");
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (n_heads < 1 || hidden_dim % n_heads != 0)
    throw ConfigError("hidden_dim (" + std::to_string(hidden_dim) +
                      ") must be divisible by n_heads (" + std::to_string(n_heads) + ")");
  if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
  if (max_seq < 1) throw ConfigError("max_seq must be >= 1");
  if (ffn_mult < 1) throw ConfigError("ffn_mult must be >= 1");
}

LmParams::LmParams(const LmConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config.hidden_dim;
  const std::size_t f = config.ffn_dim();
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t r, std::size_t c, int block) {
    tensors_.push_back(TensorInfo{std::move(name), r, c, offset, block});
    offset += r * c;
    return tensors_.size() - 1;
  };
  tok_emb_ = add("tok_emb", config.vocab_size, d, -1);
  pos_emb_ = add("pos_emb", config.max_seq, d, -1);
  for (std::size_t k = 0; k < config.n_layers; ++k) {
    const std::string p = "blocks." + std::to_string(k) + ".";
    const int bk = static_cast<int>(k);
    BlockTensors bt{};
    bt.ln1_g = add(p + "ln1.g", 1, d, bk);
    bt.ln1_b = add(p + "ln1.b", 1, d, bk);
    bt.wq = add(p + "attn.wq", d, d, bk);
    bt.wk = add(p + "attn.wk", d, d, bk);
    bt.wv = add(p + "attn.wv", d, d, bk);
    bt.wo = add(p + "attn.wo", d, d, bk);
    bt.ln2_g = add(p + "ln2.g", 1, d, bk);
    bt.ln2_b = add(p + "ln2.b", 1, d, bk);
    bt.w1 = add(p + "ffn.w1", d, f, bk);
    bt.b1 = add(p + "ffn.b1", 1, f, bk);
    bt.w2 = add(p + "ffn.w2", f, d, bk);
    bt.b2 = add(p + "ffn.b2", 1, d, bk);
    blocks_.push_back(bt);
  }
  lnf_g_ = add("ln_f.g", 1, d, -1);
  lnf_b_ = add("ln_f.b", 1, d, -1);
  lm_head_ = add("lm_head", d, config.vocab_size, -1);
  values_.assign(offset, 0.0);
}

std::size_t LmParams::tensor_index(std::string_view name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    if (tensors_[i].name == name) return i;
  throw RangeError("unknown tensor: " + std::string(name));
}

std::span<double> LmParams::tensor(std::size_t index) {
  const TensorInfo& t = tensors_.at(index);
  return {values_.data() + t.offset, t.size()};
}

std::span<const double> LmParams::tensor(std::size_t index) const {
  const TensorInfo& t = tensors_.at(index);
  return {values_.data() + t.offset, t.size()};
}

Matrix LmParams::matrix(std::size_t index) const {
  const TensorInfo& t = tensors_.at(index);
  auto s = tensor(index);
  return Matrix(t.rows, t.cols, std::vector<double>(s.begin(), s.end()));
}

void LmParams::set_matrix(std::size_t index, const Matrix& m) {
  const TensorInfo& t = tensors_.at(index);
  if (m.rows() != t.rows || m.cols() != t.cols)
    throw ShapeError("set_matrix: shape mismatch for " + t.name);
  std::copy(m.values().begin(), m.values().end(), tensor(index).begin());
}

std::pair<std::size_t, std::size_t> LmParams::block_range(std::size_t k) const {
  const BlockTensors& bt = blocks_.at(k);
  const std::size_t begin = tensors_[bt.ln1_g].offset;
  const std::size_t end = tensors_[bt.b2].offset + tensors_[bt.b2].size();
  return {begin, end};
}

std::string LmParams::checksum() const { return checksum_hex(values_); }

std::size_t expected_parameter_count(const LmConfig& c) {
  const std::size_t d = c.hidden_dim;
  const std::size_t f = c.ffn_dim();
  const std::size_t per_block = 2 * d + 4 * d * d + 2 * d + d * f + f + f * d + d;
  return c.vocab_size * d + c.max_seq * d + c.n_layers * per_block + 2 * d + d * c.vocab_size;
}

LmParams init_lm(const LmConfig& config) {
  LmParams params(config);
  Rng rng(derive_seed(config.seed, 0x1a17));
  const double d = static_cast<double>(config.hidden_dim);
  const double f = static_cast<double>(config.ffn_dim());
  const double residual_scale = 1.0 / std::sqrt(2.0 * static_cast<double>(config.n_layers));
  auto fill_normal = [&](std::size_t index, double stddev) {
    for (double& x : params.tensor(index)) x = stddev * rng.normal();
  };
  auto fill_const = [&](std::size_t index, double value) {
    for (double& x : params.tensor(index)) x = value;
  };
  fill_normal(params.tok_emb_index(), 1.0);
  fill_normal(params.pos_emb_index(), 1.0);
  for (std::size_t k = 0; k < config.n_layers; ++k) {
    const BlockTensors& bt = params.block(k);
    fill_const(bt.ln1_g, 1.0);
    fill_const(bt.ln1_b, 0.0);
    fill_normal(bt.wq, 1.0 / std::sqrt(d));
    fill_normal(bt.wk, 1.0 / std::sqrt(d));
    fill_normal(bt.wv, 1.0 / std::sqrt(d));
    fill_normal(bt.wo, residual_scale / std::sqrt(d));
    fill_const(bt.ln2_g, 1.0);
    fill_const(bt.ln2_b, 0.0);
    fill_normal(bt.w1, 1.0 / std::sqrt(d));
    fill_const(bt.b1, 0.0);
    fill_normal(bt.w2, residual_scale / std::sqrt(f));
    fill_const(bt.b2, 0.0);
  }
  fill_const(params.lnf_g_index(), 1.0);
  fill_const(params.lnf_b_index(), 0.0);
  fill_normal(params.lm_head_index(), 1.0 / std::sqrt(d));
  return params;
}

std::size_t TokenBatch::supervised_count() const {
  return static_cast<std::size_t>(std::count_if(supervised_mask.begin(), supervised_mask.end(),
                                                [](std::uint8_t m) { return m != 0; }));
}

ForwardState forward(const LmParams& params, const TokenBatch& batch,
                     const Intervention* intervention) {
  const LmConfig& cfg = params.config();
  const std::size_t n = batch.tokens();
  const std::size_t d = cfg.hidden_dim;
  const std::size_t f = cfg.ffn_dim();
  if (batch.input_ids.size() != n || batch.target_ids.size() != n ||
      batch.supervised_mask.size() != n)
    throw ShapeError("forward: batch arrays do not match batch x seq");
  if (batch.seq > cfg.max_seq)
    throw ShapeError("forward: sequence length " + std::to_string(batch.seq) +
                     " exceeds max_seq " + std::to_string(cfg.max_seq));
  for (std::size_t i = 0; i < n; ++i) {
    const auto in = batch.input_ids[i];
    const auto tg = batch.target_ids[i];
    if (in < 0 || static_cast<std::size_t>(in) >= cfg.vocab_size || tg < 0 ||
        static_cast<std::size_t>(tg) >= cfg.vocab_size)
      throw TokenRangeError("forward: token id out of vocabulary range at position " +
                            std::to_string(i));
  }

  ForwardState st;
  st.batch = batch.batch;
  st.seq = batch.seq;
  st.input_ids = batch.input_ids;

  Matrix x(n, d);
  {
    auto tok = params.tensor(params.tok_emb_index());
    auto pos = params.tensor(params.pos_emb_index());
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t id = static_cast<std::size_t>(batch.input_ids[i]);
      const std::size_t t = i % batch.seq;
      auto xr = x.row(i);
      for (std::size_t c = 0; c < d; ++c) xr[c] = tok[id * d + c] + pos[t * d + c];
    }
  }

  st.layers.resize(cfg.n_layers);
  st.trace.per_layer.resize(cfg.n_layers);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const BlockTensors& bt = params.block(l);
    LayerCache& lc = st.layers[l];
    lc.x_in = x;
    layer_norm(x, params.tensor(bt.ln1_g), params.tensor(bt.ln1_b), lc.xhat1, lc.rstd1, lc.a1);
    lc.q = linear(lc.a1, params.tensor(bt.wq), d);
    lc.k = linear(lc.a1, params.tensor(bt.wk), d);
    lc.v = linear(lc.a1, params.tensor(bt.wv), d);
    attention_forward(cfg, batch.batch, batch.seq, lc);
    Matrix attn_out = linear(lc.context, params.tensor(bt.wo), d);
    lc.x_mid = x + attn_out;
    layer_norm(lc.x_mid, params.tensor(bt.ln2_g), params.tensor(bt.ln2_b), lc.xhat2, lc.rstd2,
               lc.a2);
    lc.pre_act = linear(lc.a2, params.tensor(bt.w1), f);
    add_bias(lc.pre_act, params.tensor(bt.b1));
    lc.ffn_act = lc.pre_act;
    for (double& v : lc.ffn_act.values()) v = gelu(v);
    Matrix ffn_out = linear(lc.ffn_act, params.tensor(bt.w2), d);
    add_bias(ffn_out, params.tensor(bt.b2));
    if (intervention && l < intervention->add_per_layer.size() &&
        has(intervention->add_per_layer[l])) {
      ffn_out = ffn_out + intervention->add_per_layer[l];
    }
    x = lc.x_mid + ffn_out;
    st.trace.per_layer[l] = std::move(ffn_out);
  }

  st.x_final = x;
  layer_norm(x, params.tensor(params.lnf_g_index()), params.tensor(params.lnf_b_index()),
             st.xhat_f, st.rstd_f, st.trace.final_hidden);
  st.trace.logits = linear(st.trace.final_hidden, params.tensor(params.lm_head_index()),
                           cfg.vocab_size);
  return st;
}

LayerTrace forward_with_trace(const LmParams& params, const TokenBatch& batch) {
  return forward(params, batch).trace;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto z = logits.row(r);
    auto pr = p.row(r);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      pr[c] = std::exp(z[c] - mx);
      sum += pr[c];
    }
    for (double& v : pr) v /= sum;
  }
  return p;
}

Gradients backward_from_seed(const LmParams& params, const ForwardState& st,
                             const TraceSeed& seed) {
  const LmConfig& cfg = params.config();
  const std::size_t n = st.batch * st.seq;
  const std::size_t d = cfg.hidden_dim;
  const std::size_t f = cfg.ffn_dim();
  const std::size_t v = cfg.vocab_size;

  Gradients g;
  g.params.assign(params.parameter_count(), 0.0);
  g.d_per_layer.resize(cfg.n_layers);
  g.d_ffn_act.resize(cfg.n_layers);
  g.d_context.resize(cfg.n_layers);
  auto grad_of = [&](std::size_t index) {
    const TensorInfo& t = params.tensors()[index];
    return std::span<double>(g.params.data() + t.offset, t.size());
  };

  Matrix d_final(n, d);
  if (has(seed.d_logits)) {
    if (seed.d_logits.rows() != n || seed.d_logits.cols() != v)
      throw ShapeError("backward: d_logits shape mismatch");
    accumulate_weight_grad(st.trace.final_hidden, seed.d_logits, grad_of(params.lm_head_index()));
    input_grad(seed.d_logits, params.tensor(params.lm_head_index()), d_final, false);
  }
  if (has(seed.d_final_hidden)) d_final = d_final + seed.d_final_hidden;

  Matrix dx(n, d);
  layer_norm_backward(d_final, st.xhat_f, st.rstd_f, params.tensor(params.lnf_g_index()),
                      grad_of(params.lnf_g_index()), grad_of(params.lnf_b_index()), dx);

  for (std::size_t li = cfg.n_layers; li-- > 0;) {
    const BlockTensors& bt = params.block(li);
    const LayerCache& lc = st.layers[li];

    Matrix df = dx;
    if (li < seed.d_per_layer.size() && has(seed.d_per_layer[li])) {
      if (seed.d_per_layer[li].rows() != n || seed.d_per_layer[li].cols() != d)
        throw ShapeError("backward: per-layer seed shape mismatch");
      df = df + seed.d_per_layer[li];
    }

    // feed-forward
    accumulate_weight_grad(lc.ffn_act, df, grad_of(bt.w2));
    accumulate_colsum(df, grad_of(bt.b2));
    Matrix dact(n, f);
    input_grad(df, params.tensor(bt.w2), dact, false);
    Matrix dpre = dact;
    for (std::size_t i = 0; i < dpre.size(); ++i)
      dpre.data()[i] *= gelu_grad(lc.pre_act.data()[i]);
    accumulate_weight_grad(lc.a2, dpre, grad_of(bt.w1));
    accumulate_colsum(dpre, grad_of(bt.b1));
    Matrix da2(n, d);
    input_grad(dpre, params.tensor(bt.w1), da2, false);
    Matrix dx_mid = dx;
    layer_norm_backward(da2, lc.xhat2, lc.rstd2, params.tensor(bt.ln2_g), grad_of(bt.ln2_g),
                        grad_of(bt.ln2_b), dx_mid);

    // attention
    accumulate_weight_grad(lc.context, dx_mid, grad_of(bt.wo));
    Matrix dctx(n, d);
    input_grad(dx_mid, params.tensor(bt.wo), dctx, false);
    Matrix dq, dk, dvv;
    attention_backward(cfg, st.batch, st.seq, lc, dctx, dq, dk, dvv);
    accumulate_weight_grad(lc.a1, dq, grad_of(bt.wq));
    accumulate_weight_grad(lc.a1, dk, grad_of(bt.wk));
    accumulate_weight_grad(lc.a1, dvv, grad_of(bt.wv));
    Matrix da1(n, d);
    input_grad(dq, params.tensor(bt.wq), da1, false);
    input_grad(dk, params.tensor(bt.wk), da1, true);
    input_grad(dvv, params.tensor(bt.wv), da1, true);
    Matrix dx_in = dx_mid;
    layer_norm_backward(da1, lc.xhat1, lc.rstd1, params.tensor(bt.ln1_g), grad_of(bt.ln1_g),
                        grad_of(bt.ln1_b), dx_in);

    g.d_per_layer[li] = std::move(df);
    g.d_ffn_act[li] = std::move(dact);
    g.d_context[li] = std::move(dctx);
    dx = std::move(dx_in);
  }

  auto dtok = grad_of(params.tok_emb_index());
  auto dpos = grad_of(params.pos_emb_index());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t id = static_cast<std::size_t>(st.input_ids[i]);
    const std::size_t t = i % st.seq;
    auto r = dx.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      dtok[id * d + c] += r[c];
      dpos[t * d + c] += r[c];
    }
  }
  return g;
}

BackwardResult backward(const LmParams& params, const TokenBatch& batch, const LossFn& loss) {
  BackwardResult out;
  out.state = forward(params, batch);
  LossValue lv = loss(out.state.trace, batch);
  if (!std::isfinite(lv.value)) throw NumericalError("backward: non-finite loss");
  out.loss = lv.value;
  out.grads = backward_from_seed(params, out.state, lv.seed);
  return out;
}

LossValue cross_entropy_loss(const LayerTrace& trace, const TokenBatch& batch) {
  const std::size_t count = batch.supervised_count();
  if (count == 0) throw EmptyMask("cross_entropy_loss: no supervised positions");
  const Matrix& z = trace.logits;
  LossValue out;
  out.seed.d_logits = Matrix(z.rows(), z.cols());
  const double inv = 1.0 / static_cast<double>(count);
  double total = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    if (!batch.supervised_mask[r]) continue;
    auto zr = z.row(r);
    const double mx = *std::max_element(zr.begin(), zr.end());
    double sum = 0.0;
    for (double x : zr) sum += std::exp(x - mx);
    const double log_sum = mx + std::log(sum);
    const auto target = static_cast<std::size_t>(batch.target_ids[r]);
    total += log_sum - zr[target];
    auto dr = out.seed.d_logits.row(r);
    for (std::size_t c = 0; c < zr.size(); ++c) dr[c] = std::exp(zr[c] - log_sum) * inv;
    dr[target] -= inv;
  }
  out.value = total * inv;
  return out;
}

double lm_loss(const LayerTrace& trace, const TokenBatch& batch) {
  return cross_entropy_loss(trace, batch).value;
}

TrainableMask TrainableMask::all(const LmParams& params) {
  TrainableMask m;
  m.tensors_.assign(params.tensors().size(), 1);
  return m;
}

TrainableMask TrainableMask::none(const LmParams& params) {
  TrainableMask m;
  m.tensors_.assign(params.tensors().size(), 0);
  return m;
}

TrainableMask TrainableMask::blocks(const LmParams& params, std::span<const std::size_t> ks) {
  TrainableMask m = none(params);
  for (std::size_t k : ks) {
    if (k >= params.config().n_layers) throw RangeError("TrainableMask: block out of range");
    for (std::size_t i = 0; i < params.tensors().size(); ++i)
      if (params.tensors()[i].block == static_cast<int>(k)) m.tensors_[i] = 1;
  }
  return m;
}

std::vector<std::uint8_t> TrainableMask::expand(const LmParams& params) const {
  std::vector<std::uint8_t> flat(params.parameter_count(), 0);
  for (std::size_t i = 0; i < params.tensors().size(); ++i) {
    if (!tensors_[i]) continue;
    const TensorInfo& t = params.tensors()[i];
    std::fill_n(flat.begin() + static_cast<std::ptrdiff_t>(t.offset), t.size(), 1);
  }
  return flat;
}

void Adam::step(std::span<double> params, std::span<const double> grads,
                std::span<const std::uint8_t> mask) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ShapeError("Adam::step: size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i] * grads[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    double update = mhat / (std::sqrt(vhat) + config_.eps);
    if (config_.weight_decay != 0.0) update += config_.weight_decay * params[i];
    params[i] -= config_.lr * update;
  }
}

TokenBatch make_batch(std::span<const Example> examples) {
  if (examples.empty()) throw ShapeError("make_batch: no examples");
  TokenBatch b;
  b.batch = examples.size();
  b.seq = examples.front().input_ids.size();
  for (const Example& e : examples) {
    if (e.input_ids.size() != b.seq || e.target_ids.size() != b.seq ||
        e.supervised_mask.size() != b.seq)
      throw ShapeError("make_batch: ragged examples");
    b.input_ids.insert(b.input_ids.end(), e.input_ids.begin(), e.input_ids.end());
    b.target_ids.insert(b.target_ids.end(), e.target_ids.begin(), e.target_ids.end());
    b.supervised_mask.insert(b.supervised_mask.end(), e.supervised_mask.begin(),
                             e.supervised_mask.end());
  }
  return b;
}

BatchSampler::BatchSampler(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed)
    : size_(dataset_size), batch_(std::min(batch_size, dataset_size)), seed_(seed) {
  if (dataset_size == 0) throw ConfigError("BatchSampler: empty dataset");
  if (batch_size == 0) throw ConfigError("BatchSampler: batch_size must be >= 1");
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> out;
  out.reserve(batch_);
  while (out.size() < batch_) {
    if (cursor_ == order_.size()) {
      order_.resize(size_);
      for (std::size_t i = 0; i < size_; ++i) order_[i] = i;
      Rng rng(derive_seed(seed_, epoch_++));
      rng.shuffle(std::span<std::size_t>(order_));
      cursor_ = 0;
    }
    out.push_back(order_[cursor_++]);
  }
  return out;
}

TrainReport train(LmParams& params, const Dataset& dataset, const TrainConfig& config,
                  const TrainableMask& mask) {
  if (dataset.empty()) throw ConfigError("train: empty dataset");
  const LossFn loss = config.loss ? config.loss : LossFn(cross_entropy_loss);
  const std::vector<std::uint8_t> flat_mask = mask.expand(params);
  Adam adam(params.parameter_count(), config.adam);
  BatchSampler sampler(dataset.size(), config.batch_size, config.seed);
  TrainReport report;
  std::vector<Example> picked;
  for (std::size_t step = 0; step < config.steps; ++step) {
    picked.clear();
    for (std::size_t i : sampler.next()) picked.push_back(dataset[i]);
    const TokenBatch batch = make_batch(picked);
    const std::vector<double> last_good(params.values().begin(), params.values().end());
    BackwardResult br = [&] {
      try {
        return backward(params, batch, loss);
      } catch (const NumericalError&) {
        throw NumericalError("train: non-finite loss at step " + std::to_string(step));
      }
    }();
    if (!all_finite(br.grads.params)) {
      throw NumericalError("train: non-finite gradient at step " + std::to_string(step));
    }
    report.losses.push_back(br.loss);
    adam.step(params.values(), br.grads.params, flat_mask);
    if (!all_finite(params.values())) {
      std::copy(last_good.begin(), last_good.end(), params.values().begin());
      throw NumericalError("train: parameters diverged at step " + std::to_string(step));
    }
    report.steps_completed = step + 1;
  }
  return report;
}

}  // namespace semalign
