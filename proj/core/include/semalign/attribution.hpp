#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "semalign/linalg.hpp"
#include "semalign/model.hpp"

namespace semalign {

// Layer indices in this header are 1-based, matching depth counting.
struct LayerScore {
  std::size_t layer_index = 0;
  double score = 0.0;
};

// Per layer: sum over channels of dCE/dh * h at the supervision interface,
// absolute value per token, mean over supervised tokens. `loss_scale`
// multiplies the objective. Throws EmptyMask.
std::vector<LayerScore> layer_grad_x_activation(const LmParams& teacher, const TokenBatch& batch,
                                                double loss_scale = 1.0);

// Top `top_n` layers by score, returned in depth order; ties go to the
// shallower layer. Throws RangeError.
std::vector<std::size_t> select_critical_layers(const std::vector<LayerScore>& scores,
                                                std::size_t top_n);

// mapping[k-1] = max(1, floor(l_t * k / l_s)) for k = 1..l_s.
std::vector<std::size_t> pair_layers(std::size_t l_t, std::size_t l_s);

// Smallest k with mapping[k-1] >= critical, else l_s.
std::size_t locate_student_partner(std::size_t critical_teacher_layer,
                                   const std::vector<std::size_t>& mapping);

struct InterpolationWeights {
  std::size_t lo = 1;
  std::size_t hi = 2;
  double lambda = 0.0;
};

// u = l_t * k / l_s; lo = max(1, min(floor(u), l_t - 1)); hi = lo + 1;
// lambda = clip(u - lo, 0, 1). With l_t = 1, lo = hi - 1 = 1 and lambda = 0.
InterpolationWeights interpolation_weights(std::size_t k_dagger, std::size_t l_t, std::size_t l_s);

// (1 - lambda) h_lo + lambda h_hi. lambda = 0 or 1 returns an exact copy.
Matrix interpolated_hidden(const Matrix& h_lo, const Matrix& h_hi, double lambda);

struct PairingEntry {
  std::size_t student_k = 0;
  std::size_t teacher_base = 0;
  std::size_t lo = 0;
  std::size_t hi = 0;
  double lambda = 0.0;
  bool operator==(const PairingEntry&) const = default;
};

struct CriticalPair {
  std::size_t teacher_layer = 0;
  std::size_t student_k = 0;
  bool operator==(const CriticalPair&) const = default;
};

struct PairingPlan {
  std::size_t l_t = 0;
  std::size_t l_s = 0;
  std::vector<PairingEntry> entries;   // one per student layer, k ascending
  std::vector<CriticalPair> critical;  // pairs selected for training

  const PairingEntry& entry(std::size_t k) const { return entries.at(k - 1); }
  bool operator==(const PairingPlan&) const = default;
};

// Full plan; critical teacher layers mapping to the same student layer
// collapse to the deepest one.
PairingPlan build_pairing_plan(std::size_t l_t, std::size_t l_s,
                               const std::vector<std::size_t>& critical_teacher_layers);

std::string pairing_plan_to_json(const PairingPlan& plan);
// Throws ConfigError on malformed input.
PairingPlan pairing_plan_from_json(const std::string& text);

}  // namespace semalign
