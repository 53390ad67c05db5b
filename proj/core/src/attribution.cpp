#include "semalign/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "semalign/errors.hpp"

namespace semalign {

using nlohmann::json;

std::vector<LayerScore> layer_grad_x_activation(const LmParams& teacher, const TokenBatch& batch,
                                                double loss_scale) {
  if (batch.supervised_count() == 0) throw EmptyMask("layer_grad_x_activation: empty mask");
  const LossFn loss = [loss_scale](const LayerTrace& trace, const TokenBatch& b) {
    LossValue lv = cross_entropy_loss(trace, b);
    lv.value *= loss_scale;
    for (double& x : lv.seed.d_logits.values()) x *= loss_scale;
    return lv;
  };
  const BackwardResult br = backward(teacher, batch, loss);
  const std::size_t layers = teacher.config().n_layers;
  const double n = static_cast<double>(batch.supervised_count());
  std::vector<LayerScore> out(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& h = br.state.trace.per_layer[l];
    const Matrix& g = br.grads.d_per_layer[l];
    double acc = 0.0;
    for (std::size_t t = 0; t < h.rows(); ++t) {
      if (!batch.supervised_mask[t]) continue;
      acc += std::abs(dot(h.row(t), g.row(t)));
    }
    out[l] = {l + 1, acc / n};
  }
  return out;
}

std::vector<std::size_t> select_critical_layers(const std::vector<LayerScore>& scores,
                                                std::size_t top_n) {
  if (top_n == 0 || top_n > scores.size())
    throw RangeError("select_critical_layers: top_n " + std::to_string(top_n) + " outside [1, " +
                     std::to_string(scores.size()) + "]");
  std::vector<LayerScore> sorted = scores;
  std::stable_sort(sorted.begin(), sorted.end(), [](const LayerScore& a, const LayerScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.layer_index < b.layer_index;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < top_n; ++i) out.push_back(sorted[i].layer_index);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> pair_layers(std::size_t l_t, std::size_t l_s) {
  if (l_t == 0 || l_s == 0) throw RangeError("pair_layers: layer counts must be positive");
  std::vector<std::size_t> mapping(l_s);
  for (std::size_t k = 1; k <= l_s; ++k) mapping[k - 1] = std::max<std::size_t>(1, l_t * k / l_s);
  return mapping;
}

std::size_t locate_student_partner(std::size_t critical_teacher_layer,
                                   const std::vector<std::size_t>& mapping) {
  for (std::size_t k = 1; k <= mapping.size(); ++k)
    if (mapping[k - 1] >= critical_teacher_layer) return k;
  return mapping.size();
}

InterpolationWeights interpolation_weights(std::size_t k_dagger, std::size_t l_t, std::size_t l_s) {
  if (l_t == 0 || l_s == 0 || k_dagger == 0 || k_dagger > l_s)
    throw RangeError("interpolation_weights: k outside [1, l_s]");
  const double u = static_cast<double>(l_t * k_dagger) / static_cast<double>(l_s);
  const std::size_t fl = l_t * k_dagger / l_s;
  InterpolationWeights w;
  w.lo = std::max<std::size_t>(1, std::min(fl, l_t - 1));
  w.hi = w.lo + 1;
  w.lambda = std::clamp(u - static_cast<double>(w.lo), 0.0, 1.0);
  return w;
}

Matrix interpolated_hidden(const Matrix& h_lo, const Matrix& h_hi, double lambda) {
  if (h_lo.rows() != h_hi.rows() || h_lo.cols() != h_hi.cols())
    throw ShapeError("interpolated_hidden: shapes differ");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw RangeError("interpolated_hidden: lambda outside [0,1]");
  if (lambda == 0.0) return h_lo;
  if (lambda == 1.0) return h_hi;
  Matrix out(h_lo.rows(), h_lo.cols());
  auto a = h_lo.values();
  auto b = h_hi.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (1.0 - lambda) * a[i] + lambda * b[i];
  return out;
}

PairingPlan build_pairing_plan(std::size_t l_t, std::size_t l_s,
                               const std::vector<std::size_t>& critical_teacher_layers) {
  PairingPlan plan;
  plan.l_t = l_t;
  plan.l_s = l_s;
  const std::vector<std::size_t> mapping = pair_layers(l_t, l_s);
  for (std::size_t k = 1; k <= l_s; ++k) {
    const InterpolationWeights w = interpolation_weights(k, l_t, l_s);
    plan.entries.push_back({k, mapping[k - 1], w.lo, w.hi, w.lambda});
  }
  for (std::size_t c : critical_teacher_layers) {
    if (c == 0 || c > l_t) throw RangeError("build_pairing_plan: critical layer out of range");
    const std::size_t k = locate_student_partner(c, mapping);
    auto it = std::find_if(plan.critical.begin(), plan.critical.end(),
                           [k](const CriticalPair& p) { return p.student_k == k; });
    if (it == plan.critical.end()) {
      plan.critical.push_back({c, k});
    } else {
      it->teacher_layer = std::max(it->teacher_layer, c);
    }
  }
  std::sort(plan.critical.begin(), plan.critical.end(),
            [](const CriticalPair& a, const CriticalPair& b) { return a.student_k < b.student_k; });
  return plan;
}

std::string pairing_plan_to_json(const PairingPlan& plan) {
  json j;
  j["l_t"] = plan.l_t;
  j["l_s"] = plan.l_s;
  j["entries"] = json::array();
  for (const auto& e : plan.entries) {
    j["entries"].push_back({{"student_k", e.student_k},
                            {"teacher_base", e.teacher_base},
                            {"lo", e.lo},
                            {"hi", e.hi},
                            {"lambda", e.lambda}});
  }
  j["critical"] = json::array();
  for (const auto& c : plan.critical)
    j["critical"].push_back({{"teacher_layer", c.teacher_layer}, {"student_k", c.student_k}});
  return j.dump(2);
}

PairingPlan pairing_plan_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    PairingPlan plan;
    plan.l_t = j.at("l_t").get<std::size_t>();
    plan.l_s = j.at("l_s").get<std::size_t>();
    for (const auto& e : j.at("entries")) {
      plan.entries.push_back({e.at("student_k").get<std::size_t>(),
                              e.at("teacher_base").get<std::size_t>(), e.at("lo").get<std::size_t>(),
                              e.at("hi").get<std::size_t>(), e.at("lambda").get<double>()});
    }
    for (const auto& c : j.at("critical"))
      plan.critical.push_back(
          {c.at("teacher_layer").get<std::size_t>(), c.at("student_k").get<std::size_t>()});
    return plan;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pairing plan: ") + e.what());
  }
}

}  // namespace semalign
