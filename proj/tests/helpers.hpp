#pragma once

#include <cstdint>
#include <vector>

#include "semalign/linalg.hpp"
#include "semalign/model.hpp"
#include "semalign/rng.hpp"

namespace semalign::testing {

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.values()) v = scale * rng.normal();
  return m;
}

inline LmConfig tiny_config(std::size_t layers, std::size_t dim, std::size_t heads,
                            std::size_t vocab, std::uint64_t seed = 7) {
  LmConfig c;
  c.n_layers = layers;
  c.hidden_dim = dim;
  c.n_heads = heads;
  c.vocab_size = vocab;
  c.max_seq = 8;
  c.ffn_mult = 2;
  c.seed = seed;
  return c;
}

// Random batch with every position supervised except the first.
inline TokenBatch random_batch(std::size_t batch, std::size_t seq, std::size_t vocab, Rng& rng) {
  TokenBatch b;
  b.batch = batch;
  b.seq = seq;
  for (std::size_t i = 0; i < batch * seq; ++i) {
    b.input_ids.push_back(static_cast<std::int32_t>(rng.index(vocab)));
    b.target_ids.push_back(static_cast<std::int32_t>(rng.index(vocab)));
    b.supervised_mask.push_back(i % seq == 0 ? 0 : 1);
  }
  return b;
}

inline Dataset random_dataset(std::size_t n, std::size_t seq, std::size_t vocab, Rng& rng) {
  Dataset d;
  for (std::size_t e = 0; e < n; ++e) {
    Example ex;
    for (std::size_t t = 0; t < seq; ++t) {
      ex.input_ids.push_back(static_cast<std::int32_t>(rng.index(vocab)));
      ex.target_ids.push_back(static_cast<std::int32_t>(rng.index(vocab)));
      ex.supervised_mask.push_back(t + 2 >= seq ? 1 : 0);
    }
    d.push_back(std::move(ex));
  }
  return d;
}

}  // namespace semalign::testing
