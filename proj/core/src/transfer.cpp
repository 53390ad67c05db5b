#include "semalign/transfer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "json.hpp"
#include "semalign/checksum.hpp"
#include "semalign/errors.hpp"
#include "semalign/rng.hpp"

namespace semalign {

using nlohmann::json;

namespace {

struct CosineTerms {
  double cos = 0.0;
  double nu = 0.0;
  double nv = 0.0;
};

// Accumulates -(1/n) d cos(u, v) / du into g.
void add_cosine_grad(std::span<const double> u, std::span<const double> v, const CosineTerms& c,
                     double scale, std::span<double> g) {
  const double a = scale / (c.nu * c.nv);
  const double b = scale * c.cos / (c.nu * c.nu);
  for (std::size_t i = 0; i < u.size(); ++i) g[i] -= a * v[i] - b * u[i];
}

CosineTerms cosine_terms(std::span<const double> u, std::span<const double> v) {
  CosineTerms c;
  c.nu = norm(u);
  c.nv = norm(v);
  if (c.nu == 0.0 || c.nv == 0.0) return c;
  c.cos = std::clamp(dot(u, v) / (c.nu * c.nv), -1.0, 1.0);
  return c;
}

}  // namespace

std::string SupervisoryTarget::checksum() const {
  Fnv1a h;
  h.update(std::to_string(student_layer_k));
  h.update(targets.values());
  for (std::size_t p : positions) h.update(std::to_string(p) + ",");
  return h.hex();
}

SupervisoryTarget build_targets(const LmParams& teacher, const SemanticBasisSet& teacher_bases,
                                const SemanticBasisSet& student_bases, const PairingEntry& entry,
                                const TokenBatch& batch) {
  const std::size_t l_t = teacher.config().n_layers;
  if (entry.lo == 0 || entry.lo > l_t || (entry.lambda > 0.0 && entry.hi > l_t))
    throw RangeError("build_targets: teacher layer outside the model");
  if (teacher_bases.dim() != teacher.config().hidden_dim)
    throw ShapeError("build_targets: teacher bases do not match teacher width");
  if (teacher_bases.count() != student_bases.count())
    throw VocabMismatch("build_targets: basis counts differ");

  const LayerTrace trace = forward_with_trace(teacher, batch);
  SupervisoryTarget out;
  out.student_layer_k = entry.student_k;
  out.record = {entry.lo, entry.hi, entry.lambda, teacher_bases.checksum(),
                student_bases.checksum()};
  for (std::size_t t = 0; t < batch.tokens(); ++t)
    if (batch.supervised_mask[t]) out.positions.push_back(t);

  const std::size_t d_t = teacher.config().hidden_dim;
  auto gather = [&](const Matrix& h) {
    Matrix g(out.positions.size(), d_t);
    for (std::size_t i = 0; i < out.positions.size(); ++i) {
      auto src = h.row(out.positions[i]);
      std::copy(src.begin(), src.end(), g.row(i).begin());
    }
    return g;
  };
  const Matrix h_lo = gather(trace.per_layer[entry.lo - 1]);
  const Matrix h_tilde = entry.lambda > 0.0
                             ? interpolated_hidden(h_lo, gather(trace.per_layer[entry.hi - 1]),
                                                   entry.lambda)
                             : h_lo;
  for (std::size_t i = 0; i < h_tilde.rows(); ++i)
    if (norm(h_tilde.row(i)) == 0.0) ++out.excluded;
  out.targets = cross_space_rows(h_tilde, teacher_bases, student_bases);
  return out;
}

SupervisoryTarget stack_targets(const std::vector<const SupervisoryTarget*>& parts,
                                std::size_t seq) {
  SupervisoryTarget out;
  std::size_t rows = 0;
  std::size_t cols = 0;
  for (const auto* p : parts) {
    if (!p) continue;
    if (out.student_layer_k == 0) {
      out.student_layer_k = p->student_layer_k;
      out.record = p->record;
    } else if (p->student_layer_k != out.student_layer_k) {
      throw ShapeError("stack_targets: parts target different layers");
    }
    rows += p->targets.rows();
    cols = std::max(cols, p->targets.cols());
  }
  out.targets = Matrix(rows, cols);
  std::size_t r = 0;
  for (std::size_t e = 0; e < parts.size(); ++e) {
    const auto* p = parts[e];
    if (!p) continue;
    out.excluded += p->excluded;
    for (std::size_t i = 0; i < p->targets.rows(); ++i, ++r) {
      auto src = p->targets.row(i);
      std::copy(src.begin(), src.end(), out.targets.row(r).begin());
      out.positions.push_back(e * seq + p->positions[i]);
    }
  }
  return out;
}

CosineLoss cosine_layer_loss_grad(const Matrix& h, const SupervisoryTarget& target) {
  if (target.targets.cols() != h.cols())
    throw ShapeError("cosine_layer_loss: target width " + std::to_string(target.targets.cols()) +
                     " != hidden width " + std::to_string(h.cols()));
  CosineLoss out;
  out.grad = Matrix(h.rows(), h.cols());
  std::vector<CosineTerms> terms(target.positions.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < target.positions.size(); ++i) {
    const std::size_t t = target.positions[i];
    if (t >= h.rows()) throw ShapeError("cosine_layer_loss: target position outside batch");
    terms[i] = cosine_terms(h.row(t), target.targets.row(i));
    if (terms[i].nu == 0.0 || terms[i].nv == 0.0) {
      ++out.excluded;
      continue;
    }
    ++out.used;
    sum += terms[i].cos;
  }
  if (out.used == 0) throw EmptyMask("cosine_layer_loss: no usable supervised positions");
  const double inv = 1.0 / static_cast<double>(out.used);
  out.value = 1.0 - sum * inv;
  for (std::size_t i = 0; i < target.positions.size(); ++i) {
    if (terms[i].nu == 0.0 || terms[i].nv == 0.0) continue;
    const std::size_t t = target.positions[i];
    add_cosine_grad(h.row(t), target.targets.row(i), terms[i], inv, out.grad.row(t));
  }
  return out;
}

double cosine_layer_loss(const Matrix& h, const SupervisoryTarget& target) {
  return cosine_layer_loss_grad(h, target).value;
}

CosineLoss cosine_output_loss_grad(const Matrix& z, const TokenBatch& batch,
                                   double label_smoothing) {
  if (z.rows() != batch.tokens()) throw ShapeError("cosine_output_loss: logits/batch mismatch");
  if (batch.supervised_count() == 0) throw EmptyMask("cosine_output_loss: no supervised positions");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0))
    throw RangeError("cosine_output_loss: label smoothing outside [0,1)");
  const std::size_t v = z.cols();
  CosineLoss out;
  out.grad = Matrix(z.rows(), v);
  Vector y(v);
  const double off = label_smoothing / static_cast<double>(v);
  std::vector<std::pair<std::size_t, CosineTerms>> live;
  double sum = 0.0;
  for (std::size_t t = 0; t < z.rows(); ++t) {
    if (!batch.supervised_mask[t]) continue;
    const auto target = static_cast<std::size_t>(batch.target_ids[t]);
    if (target >= v) throw TokenRangeError("cosine_output_loss: target id outside vocabulary");
    CosineTerms c;
    c.nu = norm(z.row(t));
    if (c.nu == 0.0) {
      ++out.excluded;
      continue;
    }
    if (label_smoothing == 0.0) {
      c.nv = 1.0;
      c.cos = std::clamp(z(t, target) / c.nu, -1.0, 1.0);
    } else {
      std::fill(y.begin(), y.end(), off);
      y[target] += 1.0 - label_smoothing;
      c = cosine_terms(z.row(t), y);
    }
    ++out.used;
    sum += c.cos;
    live.emplace_back(t, c);
  }
  if (out.used == 0) throw EmptyMask("cosine_output_loss: all supervised logits are zero");
  const double inv = 1.0 / static_cast<double>(out.used);
  out.value = 1.0 - sum * inv;
  for (const auto& [t, c] : live) {
    const auto target = static_cast<std::size_t>(batch.target_ids[t]);
    std::fill(y.begin(), y.end(), off);
    y[target] += 1.0 - label_smoothing;
    add_cosine_grad(z.row(t), y, c, inv, out.grad.row(t));
  }
  return out;
}

double cosine_output_loss(const Matrix& z, const TokenBatch& batch, double label_smoothing) {
  return cosine_output_loss_grad(z, batch, label_smoothing).value;
}

LossBreakdown semalign_total_loss(const LmParams& student, const TokenBatch& batch,
                                  const SupervisoryTarget& target) {
  const std::size_t k = target.student_layer_k;
  if (k == 0 || k > student.config().n_layers)
    throw RangeError("semalign_total_loss: student layer " + std::to_string(k) + " out of range");
  const LayerTrace trace = forward_with_trace(student, batch);
  LossBreakdown b;
  b.layer_loss = cosine_layer_loss(trace.per_layer[k - 1], target);
  b.out_loss = cosine_output_loss(trace.logits, batch);
  b.total = b.layer_loss + b.out_loss;
  return b;
}

LossFn semalign_loss_fn(std::vector<SupervisoryTarget> targets, bool use_layer_loss,
                        double label_smoothing, LossBreakdown* last) {
  return [targets = std::move(targets), use_layer_loss, label_smoothing, last](
             const LayerTrace& trace, const TokenBatch& batch) {
    LossValue lv;
    LossBreakdown b;
    CosineLoss out = cosine_output_loss_grad(trace.logits, batch, label_smoothing);
    b.out_loss = out.value;
    lv.seed.d_logits = std::move(out.grad);
    std::size_t live = 0;
    if (use_layer_loss) {
      for (const auto& t : targets) live += t.positions.empty() ? 0 : 1;
    }
    if (live > 0) {
      lv.seed.d_per_layer.resize(trace.per_layer.size());
      const double w = 1.0 / static_cast<double>(live);
      for (const auto& t : targets) {
        if (t.positions.empty()) continue;
        const std::size_t k = t.student_layer_k;
        if (k == 0 || k > trace.per_layer.size())
          throw RangeError("semalign loss: student layer out of range");
        CosineLoss layer = cosine_layer_loss_grad(trace.per_layer[k - 1], t);
        b.layer_loss += w * layer.value;
        Matrix& seed = lv.seed.d_per_layer[k - 1];
        if (seed.empty()) seed = Matrix(layer.grad.rows(), layer.grad.cols());
        auto sv = seed.values();
        auto gv = layer.grad.values();
        for (std::size_t i = 0; i < sv.size(); ++i) sv[i] += w * gv[i];
      }
    }
    b.total = b.layer_loss + b.out_loss;
    lv.value = b.total;
    if (last) *last = b;
    return lv;
  };
}

void TransferConfig::validate() const {
  if (steps == 0 || align_size == 0 || train_size == 0 || batch_size == 0)
    throw ConfigError("transfer: steps, align_size, train_size and batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("transfer: learning_rate must be positive");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0))
    throw ConfigError("transfer: label_smoothing must lie in [0, 1)");
}

ParameterCensus parameter_census(const LmParams& before, const LmParams& after) {
  if (before.config() != after.config()) throw ShapeError("parameter_census: configs differ");
  ParameterCensus c;
  for (std::size_t i = 0; i < before.tensors().size(); ++i) {
    auto a = before.tensor(i);
    auto b = after.tensor(i);
    std::size_t changed = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (std::bit_cast<std::uint64_t>(a[j]) != std::bit_cast<std::uint64_t>(b[j])) ++changed;
    }
    if (changed > 0) {
      c.changed_tensors.push_back(before.tensors()[i].name);
      c.changed_values += changed;
    }
  }
  return c;
}

namespace {

std::string targets_checksum(const std::vector<std::vector<SupervisoryTarget>>& per_example) {
  Fnv1a h;
  for (const auto& ex : per_example)
    for (const auto& t : ex) h.update(t.checksum());
  return h.hex();
}

// Token-weighted layer loss over the alignment set, averaged over pairs.
double alignment_layer_loss(const LmParams& student, const Dataset& align,
                            const std::vector<std::vector<SupervisoryTarget>>& per_example) {
  constexpr std::size_t kChunk = 32;
  const std::size_t pairs = per_example.empty() ? 0 : per_example.front().size();
  if (pairs == 0) return 0.0;
  std::vector<double> cos_sum(pairs, 0.0);
  std::vector<std::size_t> used(pairs, 0);
  for (std::size_t begin = 0; begin < align.size(); begin += kChunk) {
    const std::size_t end = std::min(align.size(), begin + kChunk);
    const TokenBatch batch = make_batch(std::span<const Example>(align.data() + begin, end - begin));
    const LayerTrace trace = forward_with_trace(student, batch);
    for (std::size_t p = 0; p < pairs; ++p) {
      std::vector<const SupervisoryTarget*> parts;
      for (std::size_t e = begin; e < end; ++e) parts.push_back(&per_example[e][p]);
      const SupervisoryTarget st = stack_targets(parts, batch.seq);
      try {
        const CosineLoss l = cosine_layer_loss_grad(trace.per_layer[st.student_layer_k - 1], st);
        cos_sum[p] += (1.0 - l.value) * static_cast<double>(l.used);
        used[p] += l.used;
      } catch (const EmptyMask&) {
      }
    }
  }
  double total = 0.0;
  for (std::size_t p = 0; p < pairs; ++p)
    total += used[p] == 0 ? 0.0 : 1.0 - cos_sum[p] / static_cast<double>(used[p]);
  return total / static_cast<double>(pairs);
}

}  // namespace

TransferResult run_transfer(const LmParams& teacher, const LmParams& student,
                            const PairingPlan& pairing, const BasisPair& bases,
                            const Dataset& dataset, const TransferConfig& config) {
  config.validate();
  if (teacher.config().vocab_size != student.config().vocab_size)
    throw VocabMismatch("run_transfer: teacher and student vocabularies differ");
  if (dataset.empty()) throw ConfigError("run_transfer: empty dataset");
  if (pairing.l_t != teacher.config().n_layers || pairing.l_s != student.config().n_layers)
    throw ConfigError("run_transfer: pairing plan does not match the model depths");

  std::vector<std::size_t> ks;
  if (config.student_layer_k > 0) {
    ks.push_back(config.student_layer_k);
  } else {
    for (const auto& c : pairing.critical) ks.push_back(c.student_k);
  }
  if (ks.empty()) throw ConfigError("run_transfer: no student layer selected");
  for (std::size_t k : ks)
    if (k > pairing.l_s) throw RangeError("run_transfer: student layer out of range");

  const std::size_t n_train = std::min(config.train_size, dataset.size());
  const std::size_t n_align = std::min(config.align_size, n_train);
  const Dataset align(dataset.begin(), dataset.begin() + static_cast<std::ptrdiff_t>(n_align));

  TransferResult result;
  result.method = config.use_layer_loss ? "semalign" : "output_only";
  result.config = config;
  result.trained_blocks = ks;
  result.before = student;
  LmParams current = student;

  std::vector<std::vector<SupervisoryTarget>> per_example(n_align);
  if (config.use_layer_loss) {
    for (std::size_t e = 0; e < n_align; ++e) {
      const TokenBatch one = make_batch(std::span<const Example>(&dataset[e], 1));
      for (std::size_t k : ks)
        per_example[e].push_back(
            build_targets(teacher, bases.teacher, bases.student, pairing.entry(k), one));
    }
    result.targets_checksum_before = targets_checksum(per_example);
    result.align_layer_loss_start = alignment_layer_loss(current, align, per_example);
  }

  std::vector<std::size_t> zero_based;
  for (std::size_t k : ks) zero_based.push_back(k - 1);
  const std::vector<std::uint8_t> mask =
      TrainableMask::blocks(current, zero_based).expand(current);
  Adam adam(current.parameter_count(), AdamConfig{.lr = config.learning_rate});
  BatchSampler sampler(n_train, config.batch_size, derive_seed(config.seed, 0x7a11));

  std::vector<Example> picked;
  for (std::size_t step = 0; step < config.steps; ++step) {
    picked.clear();
    std::vector<std::vector<const SupervisoryTarget*>> parts(ks.size());
    for (std::size_t i : sampler.next()) {
      picked.push_back(dataset[i]);
      for (std::size_t p = 0; p < ks.size(); ++p)
        parts[p].push_back(i < n_align && config.use_layer_loss ? &per_example[i][p] : nullptr);
    }
    const TokenBatch batch = make_batch(picked);
    std::vector<SupervisoryTarget> targets;
    if (config.use_layer_loss) {
      for (auto& pp : parts) {
        SupervisoryTarget st = stack_targets(pp, batch.seq);
        if (!st.positions.empty()) targets.push_back(std::move(st));
      }
    }
    LossBreakdown last;
    const LossFn loss =
        semalign_loss_fn(std::move(targets), config.use_layer_loss, config.label_smoothing, &last);
    const std::vector<double> last_good(current.values().begin(), current.values().end());
    try {
      const BackwardResult br = backward(current, batch, loss);
      if (!all_finite(br.grads.params)) throw NumericalError("non-finite gradient");
      result.layer_loss.push_back(last.layer_loss);
      result.out_loss.push_back(last.out_loss);
      result.total_loss.push_back(last.total);
      adam.step(current.values(), br.grads.params, mask);
      if (!all_finite(current.values())) throw NumericalError("non-finite parameters");
    } catch (const NumericalError& e) {
      std::copy(last_good.begin(), last_good.end(), current.values().begin());
      result.status = "diverged";
      result.message = "step " + std::to_string(step) + ": " + e.what();
      break;
    }
    result.steps_completed = step + 1;
  }

  if (config.use_layer_loss) {
    result.align_layer_loss_end = alignment_layer_loss(current, align, per_example);
    result.targets_checksum_after = targets_checksum(per_example);
  }
  result.census = parameter_census(student, current);
  result.after = std::move(current);
  return result;
}

std::string transfer_result_to_json(const TransferResult& r) {
  json j;
  j["method"] = r.method;
  j["status"] = r.status;
  j["message"] = r.message;
  j["trained_blocks"] = r.trained_blocks;
  j["steps_completed"] = r.steps_completed;
  j["loss_curves"] = {{"layer", r.layer_loss}, {"out", r.out_loss}, {"total", r.total_loss}};
  j["align_layer_loss"] = {{"start", r.align_layer_loss_start}, {"end", r.align_layer_loss_end}};
  j["census"] = {{"changed_tensors", r.census.changed_tensors},
                 {"changed_values", r.census.changed_values}};
  j["checksums"] = {{"before", r.before ? r.before->checksum() : ""},
                    {"after", r.after ? r.after->checksum() : ""},
                    {"targets_before", r.targets_checksum_before},
                    {"targets_after", r.targets_checksum_after}};
  const TransferConfig& c = r.config;
  j["config"] = {{"student_layer_k", c.student_layer_k}, {"steps", c.steps},
                 {"align_size", c.align_size},           {"train_size", c.train_size},
                 {"batch_size", c.batch_size},           {"learning_rate", c.learning_rate},
                 {"label_smoothing", c.label_smoothing}, {"use_layer_loss", c.use_layer_loss},
                 {"seed", c.seed}};
  json notes = json::object();
  for (const auto& [k, v] : r.notes) notes[k] = v;
  j["notes"] = notes;
  return j.dump(2);
}

}  // namespace semalign
