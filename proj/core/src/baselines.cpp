#include "semalign/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semalign/attribution.hpp"
#include "semalign/errors.hpp"
#include "semalign/rng.hpp"

namespace semalign {

namespace {

// Indices of the `count` largest values, lowest index first on ties,
// returned ascending.
std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t count) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

Dataset head(const Dataset& data, std::size_t n) {
  n = std::min(n, data.size());
  return Dataset(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n));
}

std::vector<std::size_t> last_supervised_rows(const TokenBatch& batch) {
  std::vector<std::size_t> rows(batch.batch);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    bool found = false;
    for (std::size_t t = batch.seq; t-- > 0;) {
      if (batch.supervised_mask[b * batch.seq + t]) {
        rows[b] = b * batch.seq + t;
        found = true;
        break;
      }
    }
    if (!found) throw EmptyMask("example without supervised positions");
  }
  return rows;
}

}  // namespace

Matrix SensitivityMap::tensor_scores(const LmParams& layout, std::size_t tensor) const {
  const TensorInfo& info = layout.tensors().at(tensor);
  return Matrix(info.rows, info.cols,
                std::vector<double>(scores.begin() + static_cast<std::ptrdiff_t>(info.offset),
                                    scores.begin() + static_cast<std::ptrdiff_t>(info.offset + info.size())));
}

void accumulate_sensitivity(std::span<const double> theta, std::span<const double> grad,
                            std::span<double> scores) {
  if (theta.size() != grad.size() || theta.size() != scores.size())
    throw ShapeError("accumulate_sensitivity: length mismatch");
  if (!all_finite(grad)) throw NumericalError("seeking_sensitivity: non-finite gradient");
  for (std::size_t i = 0; i < theta.size(); ++i) scores[i] += std::abs(theta[i] * grad[i]);
}

SensitivityMap seeking_sensitivity(const LmParams& teacher, const Dataset& seed_set) {
  if (seed_set.empty()) throw ConfigError("seeking_sensitivity: empty seed set");
  SensitivityMap map;
  map.scores.assign(teacher.parameter_count(), 0.0);
  map.seed_set_size = seed_set.size();
  for (const Example& ex : seed_set) {
    const TokenBatch one = make_batch(std::span<const Example>(&ex, 1));
    const BackwardResult br = backward(teacher, one, cross_entropy_loss);
    accumulate_sensitivity(teacher.values(), br.grads.params, map.scores);
  }
  map.layer_scores.assign(teacher.config().n_layers, 0.0);
  for (std::size_t k = 0; k < teacher.config().n_layers; ++k) {
    const auto [b, e] = teacher.block_range(k);
    for (std::size_t i = b; i < e; ++i) map.layer_scores[k] += map.scores[i];
  }
  return map;
}

ExtractedBlock seeking_extract(const Matrix& w, const Matrix& scores, std::size_t n_s,
                               std::size_t m_s) {
  if (w.rows() != scores.rows() || w.cols() != scores.cols())
    throw ShapeError("seeking_extract: scores shape differs from weights");
  if (n_s == 0 || m_s == 0 || n_s > w.rows() || m_s > w.cols())
    throw RangeError("seeking_extract: block " + std::to_string(n_s) + "x" + std::to_string(m_s) +
                     " does not fit in " + std::to_string(w.rows()) + "x" +
                     std::to_string(w.cols()));
  Vector row_sum(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (double x : scores.row(r)) row_sum[r] += x;
  ExtractedBlock out;
  out.row_indices = top_indices(row_sum, n_s);
  Vector col_sum(w.cols(), 0.0);
  for (std::size_t r : out.row_indices)
    for (std::size_t c = 0; c < w.cols(); ++c) col_sum[c] += scores(r, c);
  out.col_indices = top_indices(col_sum, m_s);
  out.block = Matrix(n_s, m_s);
  for (std::size_t i = 0; i < n_s; ++i) {
    for (std::size_t j = 0; j < m_s; ++j) {
      out.block(i, j) = w(out.row_indices[i], out.col_indices[j]);
      out.cumulative_score += scores(out.row_indices[i], out.col_indices[j]);
    }
  }
  return out;
}

LoraPair seeking_lora_init(const ExtractedBlock& block, std::size_t r) {
  if (r == 0) throw RangeError("seeking_lora_init: rank must be positive");
  const std::size_t n = block.block.rows();
  const std::size_t m = block.block.cols();
  LoraPair out;
  out.rank = std::min({r, n, m});
  out.clamped = out.rank < r;
  out.b = Matrix(n, out.rank);
  out.a = Matrix(out.rank, m);
  const SvdResult f = svd(block.block);
  const std::size_t keep = std::min(out.rank, f.rank());
  for (std::size_t k = 0; k < keep; ++k) {
    for (std::size_t i = 0; i < n; ++i) out.b(i, k) = f.u(i, k) * f.sigma[k];
    for (std::size_t j = 0; j < m; ++j) out.a(k, j) = f.vt(k, j);
  }
  return out;
}

LmParams apply_adapters(const LmParams& base, const std::vector<Adapter>& adapters) {
  LmParams out = base;
  for (const Adapter& ad : adapters) {
    const TensorInfo& info = base.tensors().at(ad.tensor);
    if (ad.pair.b.rows() != info.rows || ad.pair.a.cols() != info.cols)
      throw ShapeError("apply_adapters: adapter shape does not match " + info.name);
    const Matrix prod = matmul(ad.pair.b, ad.pair.a);
    auto dst = out.tensor(ad.tensor);
    auto src = prod.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  return out;
}

namespace {

std::size_t adapter_param_count(const std::vector<Adapter>& adapters) {
  std::size_t n = 0;
  for (const Adapter& a : adapters) n += a.pair.b.size() + a.pair.a.size();
  return n;
}

void read_adapters(const std::vector<Adapter>& adapters, std::span<double> flat) {
  std::size_t o = 0;
  for (const Adapter& a : adapters) {
    for (double x : a.pair.b.values()) flat[o++] = x;
    for (double x : a.pair.a.values()) flat[o++] = x;
  }
}

void write_adapters(std::vector<Adapter>& adapters, std::span<const double> flat) {
  std::size_t o = 0;
  for (Adapter& a : adapters) {
    for (double& x : a.pair.b.values()) x = flat[o++];
    for (double& x : a.pair.a.values()) x = flat[o++];
  }
}

}  // namespace

TransferResult seeking_transfer(const LmParams& teacher, const LmParams& student,
                                const Dataset& train_set, const SeekingConfig& config,
                                std::vector<Adapter>* adapters_out) {
  if (teacher.config().vocab_size != student.config().vocab_size)
    throw VocabMismatch("seeking_transfer: teacher and student vocabularies differ");
  if (train_set.empty()) throw ConfigError("seeking_transfer: empty training set");
  const std::size_t l_t = teacher.config().n_layers;
  const std::size_t l_s = student.config().n_layers;
  if (l_s > l_t) throw ConfigError("seeking_transfer: student deeper than teacher");

  const SensitivityMap sens = seeking_sensitivity(teacher, head(train_set, config.seed_set_size));
  std::vector<std::size_t> source = top_indices(sens.layer_scores, l_s);

  std::vector<Adapter> adapters;
  for (std::size_t k = 0; k < l_s; ++k) {
    const BlockTensors& tb = teacher.block(source[k]);
    const BlockTensors& sb = student.block(k);
    const std::pair<std::size_t, std::size_t> kinds[] = {
        {tb.wv, sb.wv}, {tb.wo, sb.wo}, {tb.w1, sb.w1}, {tb.w2, sb.w2}};
    for (const auto& [ti, si] : kinds) {
      const TensorInfo& s_info = student.tensors()[si];
      ExtractedBlock blk = seeking_extract(teacher.matrix(ti), sens.tensor_scores(teacher, ti),
                                           s_info.rows, s_info.cols);
      blk.source_layer = source[k] + 1;
      adapters.push_back({si, blk.source_layer, seeking_lora_init(blk, config.rank)});
    }
  }

  TransferResult result;
  result.method = "seeking";
  result.before = student;
  result.config.steps = config.steps;
  result.config.batch_size = config.batch_size;
  result.config.learning_rate = config.learning_rate;
  result.config.seed = config.seed;
  result.config.use_layer_loss = false;
  for (std::size_t k = 0; k < l_s; ++k) result.trained_blocks.push_back(k + 1);
  const std::string base_checksum = student.checksum();

  std::vector<double> flat(adapter_param_count(adapters));
  read_adapters(adapters, flat);
  Adam adam(flat.size(), AdamConfig{.lr = config.learning_rate});
  BatchSampler sampler(train_set.size(), config.batch_size, derive_seed(config.seed, 0x5eec));
  std::vector<double> grad(flat.size());
  std::vector<Example> picked;
  for (std::size_t step = 0; step < config.steps; ++step) {
    picked.clear();
    for (std::size_t i : sampler.next()) picked.push_back(train_set[i]);
    const TokenBatch batch = make_batch(picked);
    const LmParams effective = apply_adapters(student, adapters);
    const std::vector<double> last_good = flat;
    try {
      const BackwardResult br = backward(effective, batch, cross_entropy_loss);
      result.out_loss.push_back(br.loss);
      result.total_loss.push_back(br.loss);
      std::size_t o = 0;
      for (const Adapter& ad : adapters) {
        const TensorInfo& info = student.tensors()[ad.tensor];
        const Matrix dw(info.rows, info.cols,
                        std::vector<double>(br.grads.params.begin() + static_cast<std::ptrdiff_t>(info.offset),
                                            br.grads.params.begin() + static_cast<std::ptrdiff_t>(info.offset + info.size())));
        const Matrix db = matmul_nt(dw, ad.pair.a);
        const Matrix da = matmul_tn(ad.pair.b, dw);
        for (double x : db.values()) grad[o++] = x;
        for (double x : da.values()) grad[o++] = x;
      }
      if (!all_finite(grad)) throw NumericalError("non-finite adapter gradient");
      adam.step(flat, grad);
      if (!all_finite(flat)) throw NumericalError("non-finite adapter parameters");
    } catch (const NumericalError& e) {
      flat = last_good;
      result.status = "diverged";
      result.message = "step " + std::to_string(step) + ": " + e.what();
      write_adapters(adapters, flat);
      break;
    }
    write_adapters(adapters, flat);
    result.steps_completed = step + 1;
  }

  result.after = apply_adapters(student, adapters);
  result.census = parameter_census(student, *result.after);
  std::string src;
  for (std::size_t s : source) src += (src.empty() ? "" : ",") + std::to_string(s + 1);
  result.notes = {{"source_layers", src},
                  {"adapter_rank", std::to_string(adapters.empty() ? 0 : adapters[0].pair.rank)},
                  {"base_checksum_before", base_checksum},
                  {"base_checksum_after", student.checksum()}};
  if (adapters_out) *adapters_out = std::move(adapters);
  return result;
}

Vector gather_slice(const LmParams& layout, std::span<const double> flat, const NeuronSlice& s) {
  if (s.layer == 0 || s.layer > layout.config().n_layers)
    throw ShapeError("gather_slice: layer outside the model");
  const std::size_t d = layout.config().hidden_dim;
  const std::size_t f = layout.config().ffn_dim();
  if (s.hidden_dim != d) throw ShapeError("gather_slice: slice width does not match the model");
  const BlockTensors& bt = layout.block(s.layer - 1);
  const std::size_t w1 = layout.tensors()[bt.w1].offset;
  const std::size_t w2 = layout.tensors()[bt.w2].offset;
  const std::size_t wv = layout.tensors()[bt.wv].offset;
  const std::size_t wo = layout.tensors()[bt.wo].offset;
  Vector out;
  out.reserve(s.width());
  for (std::size_t i : s.ffn_neurons) {
    if (i >= f) throw ShapeError("gather_slice: neuron index outside the FFN");
    for (std::size_t r = 0; r < d; ++r) out.push_back(flat[w1 + r * f + i]);
    for (std::size_t c = 0; c < d; ++c) out.push_back(flat[w2 + i * d + c]);
  }
  for (std::size_t ch : s.attn_channels) {
    if (ch >= d) throw ShapeError("gather_slice: channel index outside the model");
    for (std::size_t r = 0; r < d; ++r) out.push_back(flat[wv + r * d + ch]);
    for (std::size_t c = 0; c < d; ++c) out.push_back(flat[wo + ch * d + c]);
  }
  return out;
}

NeuronDelta laten_locate(const LmParams& model, const Dataset& extract_set, std::size_t top_k) {
  if (extract_set.empty()) throw ConfigError("laten_locate: empty extract set");
  const std::size_t d = model.config().hidden_dim;
  const std::size_t f = model.config().ffn_dim();
  if (top_k == 0 || top_k > f)
    throw RangeError("laten_locate: top_k " + std::to_string(top_k) + " outside [1, " +
                     std::to_string(f) + "]");
  const std::size_t attn_k = std::min(d, (top_k * d + f - 1) / f);

  const TokenBatch batch = make_batch(extract_set);
  const std::vector<std::size_t> rows = last_supervised_rows(batch);
  const BackwardResult br = backward(model, batch, cross_entropy_loss);
  const double inv = 1.0 / static_cast<double>(rows.size());

  NeuronDelta out;
  for (std::size_t l = 0; l < model.config().n_layers; ++l) {
    const LayerCache& lc = br.state.layers[l];
    Vector fs(f, 0.0);
    Vector as(d, 0.0);
    for (std::size_t r : rows) {
      auto a = lc.ffn_act.row(r);
      auto g = br.grads.d_ffn_act[l].row(r);
      for (std::size_t i = 0; i < f; ++i) fs[i] += std::abs(a[i] * g[i]) * inv;
      auto c = lc.context.row(r);
      auto gc = br.grads.d_context[l].row(r);
      for (std::size_t i = 0; i < d; ++i) as[i] += std::abs(c[i] * gc[i]) * inv;
    }
    NeuronSlice s;
    s.layer = l + 1;
    s.hidden_dim = d;
    s.ffn_neurons = top_indices(fs, top_k);
    s.attn_channels = top_indices(as, attn_k);
    out.values.push_back(gather_slice(model, model.values(), s));
    out.slices.push_back(std::move(s));
    out.ffn_scores.push_back(std::move(fs));
    out.attn_scores.push_back(std::move(as));
  }
  return out;
}

HyperNet::HyperNet(std::size_t in_dim, std::size_t hidden, std::size_t out_dim,
                   std::uint64_t seed, bool zero_output)
    : in_(in_dim), hidden_(hidden), out_(out_dim), params_(in_dim * hidden + hidden * out_dim) {
  if (in_dim == 0 || hidden == 0 || out_dim == 0)
    throw ConfigError("HyperNet: dimensions must be positive");
  Rng rng(derive_seed(seed, 0x4e7));
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
  const double s2 = 0.1 / std::sqrt(static_cast<double>(hidden));
  for (std::size_t i = 0; i < in_dim * hidden; ++i) params_[i] = s1 * rng.normal();
  for (std::size_t i = in_dim * hidden; i < params_.size(); ++i)
    params_[i] = zero_output ? 0.0 : s2 * rng.normal();
}

Vector HyperNet::forward(std::span<const double> x) const {
  if (x.size() != in_) throw ShapeError("HyperNet: input width mismatch");
  const Matrix w1(in_, hidden_, std::vector<double>(params_.begin(), params_.begin() + static_cast<std::ptrdiff_t>(in_ * hidden_)));
  const Matrix w2(hidden_, out_, std::vector<double>(params_.begin() + static_cast<std::ptrdiff_t>(in_ * hidden_), params_.end()));
  Vector h = matvec_t(w1, x);
  for (double& v : h) v = std::max(0.0, v);
  return matvec_t(w2, h);
}

void HyperNet::backward(std::span<const double> x, std::span<const double> dy,
                        std::span<double> grad) const {
  if (x.size() != in_ || dy.size() != out_ || grad.size() != params_.size())
    throw ShapeError("HyperNet::backward: size mismatch");
  const double* w1 = params_.data();
  const double* w2 = params_.data() + in_ * hidden_;
  Vector pre(hidden_, 0.0);
  for (std::size_t i = 0; i < in_; ++i) {
    if (x[i] == 0.0) continue;
    const double* row = w1 + i * hidden_;
    for (std::size_t j = 0; j < hidden_; ++j) pre[j] += x[i] * row[j];
  }
  Vector dh(hidden_, 0.0);
  double* g2 = grad.data() + in_ * hidden_;
  for (std::size_t j = 0; j < hidden_; ++j) {
    const double h = std::max(0.0, pre[j]);
    const double* w2r = w2 + j * out_;
    double* g2r = g2 + j * out_;
    double acc = 0.0;
    for (std::size_t o = 0; o < out_; ++o) {
      g2r[o] += h * dy[o];
      acc += w2r[o] * dy[o];
    }
    dh[j] = pre[j] > 0.0 ? acc : 0.0;
  }
  for (std::size_t i = 0; i < in_; ++i) {
    if (x[i] == 0.0) continue;
    double* g1r = grad.data() + i * hidden_;
    for (std::size_t j = 0; j < hidden_; ++j) g1r[j] += x[i] * dh[j];
  }
}

LmParams laten_inject(const LmParams& student, const NeuronDelta& deltas, double sign) {
  if (deltas.values.size() != deltas.slices.size())
    throw ShapeError("laten_inject: slice and value counts differ");
  LmParams out = student;
  const std::size_t d = student.config().hidden_dim;
  const std::size_t f = student.config().ffn_dim();
  for (std::size_t s = 0; s < deltas.slices.size(); ++s) {
    const NeuronSlice& sl = deltas.slices[s];
    const Vector& v = deltas.values[s];
    if (sl.layer == 0 || sl.layer > student.config().n_layers || sl.hidden_dim != d ||
        v.size() != sl.width())
      throw ShapeError("laten_inject: delta " + std::to_string(s) +
                       " does not match the student's targeted slice");
    const BlockTensors& bt = student.block(sl.layer - 1);
    auto w1 = out.tensor(bt.w1);
    auto w2 = out.tensor(bt.w2);
    auto wv = out.tensor(bt.wv);
    auto wo = out.tensor(bt.wo);
    std::size_t o = 0;
    for (std::size_t i : sl.ffn_neurons) {
      if (i >= f) throw ShapeError("laten_inject: neuron index outside the FFN");
      for (std::size_t r = 0; r < d; ++r) w1[r * f + i] += sign * v[o++];
      for (std::size_t c = 0; c < d; ++c) w2[i * d + c] += sign * v[o++];
    }
    for (std::size_t ch : sl.attn_channels) {
      if (ch >= d) throw ShapeError("laten_inject: channel index outside the model");
      for (std::size_t r = 0; r < d; ++r) wv[r * d + ch] += sign * v[o++];
      for (std::size_t c = 0; c < d; ++c) wo[ch * d + c] += sign * v[o++];
    }
  }
  return out;
}

LatenAlignResult laten_align(HyperNet& hypernet, const NeuronDelta& teacher_deltas,
                             const LmParams& student, const NeuronDelta& student_slices,
                             const Dataset& align_set, std::size_t steps, double lr,
                             double weight_decay) {
  if (align_set.empty()) throw ConfigError("laten_align: empty alignment set");
  if (teacher_deltas.values.size() != student_slices.slices.size())
    throw ShapeError("laten_align: teacher and student slice counts differ");
  for (std::size_t s = 0; s < student_slices.slices.size(); ++s) {
    if (teacher_deltas.values[s].size() != hypernet.in_dim() ||
        student_slices.slices[s].width() != hypernet.out_dim())
      throw ShapeError("laten_align: hypernetwork widths do not match the slices");
  }
  const TokenBatch batch = make_batch(align_set);
  LatenAlignResult out;
  out.student_deltas.slices = student_slices.slices;
  out.student_deltas.values.resize(student_slices.slices.size());

  auto compute_deltas = [&](NeuronDelta& dst) {
    for (std::size_t s = 0; s < dst.slices.size(); ++s)
      dst.values[s] = hypernet.forward(teacher_deltas.values[s]);
  };

  Adam adam(hypernet.params().size(), AdamConfig{.lr = lr, .weight_decay = weight_decay});
  std::vector<double> best(hypernet.params().begin(), hypernet.params().end());
  std::vector<double> grad(hypernet.params().size());
  NeuronDelta current = out.student_deltas;
  for (std::size_t step = 0; step <= steps; ++step) {
    compute_deltas(current);
    BackwardResult br;
    try {
      br = backward(laten_inject(student, current), batch, cross_entropy_loss);
    } catch (const NumericalError&) {
      out.diverged = true;
      break;
    }
    out.losses.push_back(br.loss);
    if (step == 0 || br.loss < out.best_loss) {
      out.best_loss = br.loss;
      out.best_step = step;
      std::copy(hypernet.params().begin(), hypernet.params().end(), best.begin());
    }
    if (step == steps) break;
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t s = 0; s < current.slices.size(); ++s) {
      const Vector dy = gather_slice(student, br.grads.params, current.slices[s]);
      hypernet.backward(teacher_deltas.values[s], dy, grad);
    }
    if (!all_finite(grad)) {
      out.diverged = true;
      break;
    }
    adam.step(hypernet.params(), grad);
    if (!all_finite(hypernet.params())) {
      out.diverged = true;
      break;
    }
  }
  out.first_loss = out.losses.empty() ? 0.0 : out.losses.front();
  std::copy(best.begin(), best.end(), hypernet.params().begin());
  compute_deltas(out.student_deltas);
  return out;
}

TransferResult laten_transfer(const LmParams& teacher, const LmParams& student,
                              const Dataset& train_set, const LatenConfig& config,
                              LatenAlignResult* align_out) {
  if (teacher.config().vocab_size != student.config().vocab_size)
    throw VocabMismatch("laten_transfer: teacher and student vocabularies differ");
  if (!(config.neuron_fraction > 0.0 && config.neuron_fraction <= 1.0))
    throw ConfigError("laten_transfer: neuron_fraction must lie in (0, 1]");
  const Dataset extract = head(train_set, config.samples);
  if (extract.empty()) throw ConfigError("laten_transfer: empty training set");
  auto count = [&](std::size_t f) {
    return std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.neuron_fraction * static_cast<double>(f))), 1,
        f);
  };
  const NeuronDelta t_all = laten_locate(teacher, extract, count(teacher.config().ffn_dim()));
  const NeuronDelta s_all = laten_locate(student, extract, count(student.config().ffn_dim()));

  const std::vector<std::size_t> mapping =
      pair_layers(teacher.config().n_layers, student.config().n_layers);
  NeuronDelta t_paired;
  for (std::size_t k = 0; k < mapping.size(); ++k) {
    t_paired.slices.push_back(t_all.slices[mapping[k] - 1]);
    t_paired.values.push_back(t_all.values[mapping[k] - 1]);
  }
  HyperNet net(t_paired.values.front().size(), config.hidden, s_all.slices.front().width(),
               config.seed);
  LatenAlignResult ar = laten_align(net, t_paired, student, s_all, extract, config.steps,
                                    config.learning_rate, config.weight_decay);

  TransferResult result;
  result.method = "laten";
  result.status = ar.diverged ? "diverged" : "ok";
  result.before = student;
  result.after = laten_inject(student, ar.student_deltas);
  result.census = parameter_census(student, *result.after);
  result.out_loss = ar.losses;
  result.total_loss = ar.losses;
  result.steps_completed = ar.losses.empty() ? 0 : ar.losses.size() - 1;
  result.config.steps = config.steps;
  result.config.align_size = extract.size();
  result.config.train_size = extract.size();
  result.config.learning_rate = config.learning_rate;
  result.config.seed = config.seed;
  result.config.use_layer_loss = false;
  for (std::size_t k = 1; k <= mapping.size(); ++k) result.trained_blocks.push_back(k);
  result.notes = {{"first_loss", std::to_string(ar.first_loss)},
                  {"best_loss", std::to_string(ar.best_loss)},
                  {"best_step", std::to_string(ar.best_step)}};
  if (align_out) *align_out = std::move(ar);
  return result;
}

}  // namespace semalign
