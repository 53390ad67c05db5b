#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "semalign/baselines.hpp"
#include "semalign/errors.hpp"

namespace semalign {
namespace {

using testing::random_matrix;
using testing::tiny_config;

TEST(Sensitivity, ThetaSquaredAdditiveAndHomogeneous) {
  std::vector<double> theta{1.5, -2.0, 0.0, 3.0};
  std::vector<double> s(4, 0.0);
  accumulate_sensitivity(theta, theta, s);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(s[i], theta[i] * theta[i]);
  std::vector<double> g1{1, 2, 3, 4}, g2{-1, 0.5, 2, -3};
  std::vector<double> sep(4, 0.0), twice(4, 0.0);
  accumulate_sensitivity(theta, g1, sep);
  accumulate_sensitivity(theta, g2, sep);
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_DOUBLE_EQ(sep[i], std::abs(theta[i] * g1[i]) + std::abs(theta[i] * g2[i]));
  std::vector<double> doubled(theta);
  for (auto& v : doubled) v *= 2;
  accumulate_sensitivity(doubled, g1, twice);
  std::vector<double> once(4, 0.0);
  accumulate_sensitivity(theta, g1, once);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(twice[i], 2 * once[i]);
  g1[1] = std::nan("");
  EXPECT_THROW(accumulate_sensitivity(theta, g1, s), NumericalError);
}

TEST(Sensitivity, SumsPerExampleGradients) {
  LmParams m = init_lm(tiny_config(2, 8, 2, 10));
  Rng rng(1);
  Dataset seed = testing::random_dataset(3, 4, 10, rng);
  SensitivityMap map = seeking_sensitivity(m, seed);
  std::vector<double> expect(m.parameter_count(), 0.0);
  for (const Example& e : seed) {
    TokenBatch b = make_batch(std::span<const Example>(&e, 1));
    auto g = backward(m, b, cross_entropy_loss).grads.params;
    for (std::size_t i = 0; i < g.size(); ++i) expect[i] += std::abs(m.values()[i] * g[i]);
  }
  for (std::size_t i = 0; i < expect.size(); ++i)
    ASSERT_NEAR(map.scores[i], expect[i], 1e-12 * std::max(1.0, expect[i]));
  ASSERT_EQ(map.layer_scores.size(), 2u);
  auto [lo, hi] = m.block_range(1);
  double block = std::accumulate(expect.begin() + lo, expect.begin() + hi, 0.0);
  EXPECT_NEAR(map.layer_scores[1], block, 1e-9 * block);
  EXPECT_THROW(seeking_sensitivity(m, Dataset{}), ConfigError);
}

TEST(SeekingExtract, GreedyRowsThenColumnsOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix w = random_matrix(7, 6, rng);
    Matrix s(7, 6);
    for (auto& v : s.values()) v = std::floor(rng.uniform() * 4);  // frequent ties
    ExtractedBlock b = seeking_extract(w, s, 3, 2);
    std::vector<std::size_t> rows(7);
    std::iota(rows.begin(), rows.end(), 0);
    std::stable_sort(rows.begin(), rows.end(), [&](auto x, auto y) {
      double sx = 0, sy = 0;
      for (std::size_t c = 0; c < 6; ++c) sx += s(x, c), sy += s(y, c);
      return sx > sy;
    });
    rows.resize(3);
    std::sort(rows.begin(), rows.end());
    std::vector<std::size_t> cols(6);
    std::iota(cols.begin(), cols.end(), 0);
    auto colsum = [&](std::size_t c) {
      double t = 0;
      for (auto r : rows) t += s(r, c);
      return t;
    };
    std::stable_sort(cols.begin(), cols.end(),
                     [&](auto x, auto y) { return colsum(x) > colsum(y); });
    cols.resize(2);
    std::sort(cols.begin(), cols.end());
    ASSERT_EQ(b.row_indices, rows);
    ASSERT_EQ(b.col_indices, cols);
    double total = 0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        ASSERT_EQ(b.block(i, j), w(rows[i], cols[j]));
        total += s(rows[i], cols[j]);
      }
    EXPECT_DOUBLE_EQ(b.cumulative_score, total);
  }
  Matrix w(3, 3), s(3, 3);
  EXPECT_THROW(seeking_extract(w, s, 4, 1), RangeError);
  EXPECT_THROW(seeking_extract(w, Matrix(2, 3), 1, 1), ShapeError);
}

TEST(SeekingLora, EckartYoungOptimal) {
  Rng rng(3);
  ExtractedBlock blk;
  blk.block = random_matrix(9, 6, rng);
  SvdResult full = svd(blk.block);
  for (std::size_t r : {1u, 3u, 6u}) {
    LoraPair p = seeking_lora_init(blk, r);
    EXPECT_EQ(p.b.rows(), 9u);
    EXPECT_EQ(p.b.cols(), r);
    EXPECT_EQ(p.a.rows(), r);
    double tail = 0;
    for (std::size_t i = r; i < full.rank(); ++i) tail += full.sigma[i] * full.sigma[i];
    double err = frobenius_norm(blk.block - matmul(p.b, p.a));
    EXPECT_NEAR(err * err, tail, 1e-8);
    // A has orthonormal rows; B columns carry the singular values.
    EXPECT_NEAR(frobenius_norm(matmul_nt(p.a, p.a) - Matrix::identity(r)), 0.0, 1e-10);
    for (std::size_t i = 0; i < r; ++i) EXPECT_NEAR(norm(p.b.col(i)), full.sigma[i], 1e-10);
    // No random rank-r factorization does better.
    for (int t = 0; t < 20; ++t) {
      Matrix x = random_matrix(9, r, rng), y = random_matrix(r, 6, rng);
      EXPECT_GE(frobenius_norm(blk.block - matmul(x, y)) + 1e-12, err);
    }
  }
  LoraPair big = seeking_lora_init(blk, 8);
  EXPECT_TRUE(big.clamped);
  EXPECT_NEAR(frobenius_norm(matmul(big.b, big.a) - blk.block), 0.0, 1e-10);
}

TEST(SeekingTransfer, BaseFrozenAndMergedEqualsAdapters) {
  LmParams teacher = init_lm(tiny_config(4, 8, 2, 12, 1));
  LmParams student = init_lm(tiny_config(2, 4, 1, 12, 2));
  Rng rng(4);
  Dataset d = testing::random_dataset(16, 4, 12, rng);
  SeekingConfig cfg;
  cfg.seed_set_size = 4;
  cfg.rank = 2;
  cfg.steps = 5;
  cfg.batch_size = 4;
  cfg.learning_rate = 1e-2;
  std::vector<Adapter> adapters;
  TransferResult r = seeking_transfer(teacher, student, d, cfg, &adapters);
  ASSERT_EQ(adapters.size(), 8u);
  EXPECT_EQ(r.before->checksum(), student.checksum());
  EXPECT_EQ(apply_adapters(student, adapters).checksum(), r.after->checksum());
  for (const auto& name : r.census.changed_tensors) {
    bool adapted = name.find("attn.wv") != std::string::npos ||
                   name.find("attn.wo") != std::string::npos ||
                   name.find("ffn.w1") != std::string::npos ||
                   name.find("ffn.w2") != std::string::npos;
    EXPECT_TRUE(adapted) << name;
  }
  std::vector<Adapter> again;
  seeking_transfer(teacher, student, d, cfg, &again);
  EXPECT_EQ(apply_adapters(student, again).checksum(), r.after->checksum());
}

TEST(LatenSlices, GatherOrderAndInjectionLocality) {
  LmParams m = init_lm(tiny_config(2, 4, 1, 8));
  NeuronSlice s{.layer = 2, .ffn_neurons = {1, 5}, .attn_channels = {3}, .hidden_dim = 4};
  Vector v = gather_slice(m, m.values(), s);
  ASSERT_EQ(v.size(), s.width());
  Matrix w1 = m.matrix(m.block(1).w1), w2 = m.matrix(m.block(1).w2);
  Matrix wv = m.matrix(m.block(1).wv), wo = m.matrix(m.block(1).wo);
  EXPECT_EQ(v[0], w1(0, 1));
  EXPECT_EQ(v[3], w1(3, 1));
  EXPECT_EQ(v[4], w2(1, 0));
  EXPECT_EQ(v[8], w1(0, 5));
  EXPECT_EQ(v[16], wv(0, 3));
  EXPECT_EQ(v[20], wo(3, 0));

  NeuronDelta d;
  d.slices = {s};
  Rng rng(5);
  Vector delta(s.width());
  for (auto& x : delta) x = rng.normal();
  d.values = {delta};
  LmParams in = laten_inject(m, d);
  Vector moved = gather_slice(in, in.values(), s);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(moved[i], v[i] + delta[i], 1e-15);
  // Every changed value lies inside the slice.
  std::vector<double> marker(m.parameter_count(), 0.0);
  NeuronDelta ones = d;
  std::fill(ones.values[0].begin(), ones.values[0].end(), 1.0);
  LmParams probe = laten_inject(init_lm(tiny_config(2, 4, 1, 8)), ones);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < m.parameter_count(); ++i) changed += probe.values()[i] != m.values()[i];
  EXPECT_EQ(changed, s.width());
  LmParams back = laten_inject(in, d, -1.0);
  for (std::size_t i = 0; i < m.parameter_count(); ++i)
    ASSERT_NEAR(back.values()[i], m.values()[i], 1e-12);
  d.values[0].pop_back();
  EXPECT_THROW(laten_inject(m, d), ShapeError);
}

TEST(LatenLocate, CountsAndRange) {
  LmParams m = init_lm(tiny_config(2, 8, 2, 10));
  Rng rng(6);
  Dataset d = testing::random_dataset(4, 4, 10, rng);
  NeuronDelta nd = laten_locate(m, d, 3);
  ASSERT_EQ(nd.slices.size(), 2u);
  for (const auto& s : nd.slices) {
    EXPECT_EQ(s.ffn_neurons.size(), 3u);
    EXPECT_EQ(s.attn_channels.size(), 2u);  // ceil(3 * 8 / 16)
    EXPECT_TRUE(std::is_sorted(s.ffn_neurons.begin(), s.ffn_neurons.end()));
  }
  // The kept FFN neurons carry the largest scores.
  const Vector& sc = nd.ffn_scores[0];
  double kept_min = 1e300, dropped_max = -1;
  for (std::size_t i = 0; i < sc.size(); ++i) {
    bool kept = std::count(nd.slices[0].ffn_neurons.begin(), nd.slices[0].ffn_neurons.end(), i);
    if (kept) kept_min = std::min(kept_min, sc[i]);
    else dropped_max = std::max(dropped_max, sc[i]);
  }
  EXPECT_GE(kept_min, dropped_max);
  EXPECT_THROW(laten_locate(m, d, 17), RangeError);
}

TEST(HyperNet, ZeroMapAndGradient) {
  HyperNet zero(5, 4, 3, 1, true);
  Vector x{1, -2, 0.5, 3, 0};
  for (double y : zero.forward(x)) EXPECT_EQ(y, 0.0);

  HyperNet net(5, 4, 3, 2);
  Vector dy{0.3, -1.0, 2.0};
  std::vector<double> grad(net.params().size(), 0.0);
  net.backward(x, dy, grad);
  const double h = 1e-6;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    HyperNet p = net, m = net;
    p.params()[i] += h;
    m.params()[i] -= h;
    Vector yp = p.forward(x), ym = m.forward(x);
    double fd = 0;
    for (std::size_t j = 0; j < 3; ++j) fd += dy[j] * (yp[j] - ym[j]) / (2 * h);
    EXPECT_NEAR(grad[i], fd, 1e-7);
  }
  // Positive homogeneity: no biases, ReLU.
  Vector x2(x);
  for (auto& v : x2) v *= 2.5;
  Vector y1 = net.forward(x), y2 = net.forward(x2);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(y2[j], 2.5 * y1[j], 1e-12);
}

TEST(LatenAlign, ReportsCheckpointsAndNeverModifiesStudent) {
  LmParams teacher = init_lm(tiny_config(4, 8, 2, 12, 1));
  LmParams student = init_lm(tiny_config(2, 4, 1, 12, 2));
  Rng rng(7);
  Dataset d = testing::random_dataset(8, 4, 12, rng);
  LatenConfig cfg;
  cfg.samples = 8;
  cfg.steps = 10;
  cfg.learning_rate = 1e-3;
  cfg.hidden = 8;
  LatenAlignResult ar;
  TransferResult r = laten_transfer(teacher, student, d, cfg, &ar);
  ASSERT_EQ(ar.losses.size(), 11u);
  EXPECT_DOUBLE_EQ(ar.first_loss, ar.losses.front());
  EXPECT_DOUBLE_EQ(ar.best_loss, *std::min_element(ar.losses.begin(), ar.losses.end()));
  EXPECT_DOUBLE_EQ(ar.losses[ar.best_step], ar.best_loss);
  EXPECT_EQ(r.before->checksum(), student.checksum());
  EXPECT_EQ(laten_inject(student, ar.student_deltas).checksum(), r.after->checksum());
  for (const auto& name : r.census.changed_tensors) {
    bool allowed = name.find("attn.wv") != std::string::npos ||
                   name.find("attn.wo") != std::string::npos ||
                   name.find("ffn.w1") != std::string::npos ||
                   name.find("ffn.w2") != std::string::npos;
    EXPECT_TRUE(allowed) << name;
  }
}

}  // namespace
}  // namespace semalign
