// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "semalign/analysis.hpp"
#include "semalign/attribution.hpp"
#include "semalign/baselines.hpp"
#include "semalign/checkpoint.hpp"
#include "semalign/config.hpp"
#include "semalign/errors.hpp"
#include "semalign/linalg.hpp"
#include "semalign/pipeline.hpp"
#include "semalign/rng.hpp"
#include "semalign/semantics.hpp"
#include "semalign/transfer.hpp"

namespace fs = std::filesystem;
using namespace semalign;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Outcome> g_outcomes;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  g_outcomes.push_back({id, name, pass, detail});
  std::printf("[%s] criterion %d: %s | %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& v : m.values()) v = rng.normal();
  return m;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- 1

void criterion_pseudoinverse() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::size_t r = 1 + rng.index(64), c = 1 + rng.index(256);
    if (i % 2) std::swap(r, c);
    if (i == 0) r = 64, c = 256;
    Matrix a = random_matrix(r, c, rng);
    if (i % 5 == 0) {
      // Rank deficient.
      std::size_t k = 1 + rng.index(std::min(r, c));
      a = matmul(random_matrix(r, k, rng), random_matrix(k, c, rng));
    }
    Matrix p = pseudoinverse(a);
    Matrix ap = matmul(a, p), pa = matmul(p, a);
    worst = std::max({worst, frobenius_norm(matmul(ap, a) - a), frobenius_norm(matmul(pa, p) - p),
                      frobenius_norm(ap - transpose(ap)), frobenius_norm(pa - transpose(pa))});
  }
  const double secs = seconds_since(t0);
  report(1, "pseudoinverse Moore-Penrose conditions", worst <= 1e-6 && secs < 5.0,
         fmt("max residual %.3g", worst) + fmt(" (tol 1e-6), %.2f s (< 5 s)", secs));
}

// ---- 3

void criterion_pairing() {
  const auto t0 = Clock::now();
  bool ok = true;
  auto m = pair_layers(20, 10);
  for (std::size_t k = 1; k <= 10; ++k) ok = ok && m[k - 1] == 2 * k;
  // Hand-evaluated: 20 -> 10, k = 3: u = 6, lo = 6, hi = 7, lambda = 0;
  // k = 10: u = 20, lo = 19, hi = 20, lambda = 1; critical 13 -> k = 7.
  auto w3 = interpolation_weights(3, 20, 10), w10 = interpolation_weights(10, 20, 10);
  ok = ok && w3.lo == 6 && w3.hi == 7 && w3.lambda == 0.0;
  ok = ok && w10.lo == 19 && w10.hi == 20 && w10.lambda == 1.0;
  ok = ok && locate_student_partner(13, m) == 7;
  // 8 -> 4 with critical 5 -> k = 3 (l_T = 6); 7 -> 3: u(2) = 14/3.
  ok = ok && locate_student_partner(5, pair_layers(8, 4)) == 3;
  auto w73 = interpolation_weights(2, 7, 3);
  ok = ok && w73.lo == 4 && w73.hi == 5 && std::abs(w73.lambda - 2.0 / 3.0) < 1e-15;
  const bool example_ok = ok;

  std::size_t cases = 0;
  for (std::size_t lt = 1; lt <= 32; ++lt) {
    for (std::size_t ls = 1; ls <= lt; ++ls) {
      auto map = pair_layers(lt, ls);
      for (std::size_t k = 1; k <= ls; ++k) {
        const double u = double(lt) * double(k) / double(ls);
        ok = ok && map[k - 1] == std::max<std::size_t>(1, std::size_t(std::floor(u)));
        auto w = interpolation_weights(k, lt, ls);
        if (lt > 1) {
          std::size_t lo = std::max<std::size_t>(1, std::min<std::size_t>(std::floor(u), lt - 1));
          ok = ok && w.lo == lo && w.hi == lo + 1 &&
               std::abs(w.lambda - std::clamp(u - double(lo), 0.0, 1.0)) < 1e-12;
        }
        ++cases;
      }
      for (std::size_t c = 1; c <= lt; ++c) {
        std::size_t kd = ls;
        for (std::size_t k = ls; k >= 1; --k)
          if (map[k - 1] >= c) kd = k;
        ok = ok && locate_student_partner(c, map) == kd;
      }
    }
  }
  const double secs = seconds_since(t0);
  report(3, "pairing formulas", ok && secs < 5.0,
         std::string("20/10 example ") + (example_ok ? "exact" : "MISMATCH") + ", " +
             std::to_string(cases) + " sweep cases" + fmt(", %.2f s (< 5 s)", secs));
}

// ---- 4

void criterion_gradients() {
  const auto t0 = Clock::now();
  LmConfig tc{.n_layers = 3, .hidden_dim = 16, .n_heads = 2, .vocab_size = 40, .max_seq = 8,
              .ffn_mult = 2, .seed = 41};
  LmConfig sc{.n_layers = 2, .hidden_dim = 8, .n_heads = 2, .vocab_size = 40, .max_seq = 8,
              .ffn_mult = 2, .seed = 42};
  LmParams teacher = init_lm(tc), student = init_lm(sc);
  SemanticBasisSet tb = compute_bases(teacher, BasisSide::kOutput);
  SemanticBasisSet sb = compute_bases(student, BasisSide::kOutput);
  PairingPlan plan = build_pairing_plan(3, 2, {2});
  Rng rng(43);
  TokenBatch b;
  b.batch = 2;
  b.seq = 6;
  for (std::size_t i = 0; i < 12; ++i) {
    b.input_ids.push_back(std::int32_t(rng.index(40)));
    b.target_ids.push_back(std::int32_t(rng.index(40)));
    b.supervised_mask.push_back(i % 6 >= 3);
  }
  SupervisoryTarget target = build_targets(teacher, tb, sb, plan.entry(1), b);
  LossFn fn = semalign_loss_fn({target}, true, 0.0);
  BackwardResult r = backward(student, b, fn);
  const double h = 1e-5;
  double diff2 = 0, ref2 = 0, worst_entry = 0;
  for (std::size_t i = 0; i < student.parameter_count(); ++i) {
    LmParams p = student, m = student;
    p.values()[i] += h;
    m.values()[i] -= h;
    const double fd =
        (fn(forward_with_trace(p, b), b).value - fn(forward_with_trace(m, b), b).value) / (2 * h);
    const double g = r.grads.params[i];
    diff2 += (g - fd) * (g - fd);
    ref2 += fd * fd;
    worst_entry = std::max(worst_entry, std::abs(g - fd) / std::max({std::abs(fd), std::abs(g), 1e-4}));
  }
  const double rel = std::sqrt(diff2 / ref2);
  const double secs = seconds_since(t0);
  report(4, "composite objective gradient vs central differences",
         rel <= 1e-4 && worst_entry <= 1e-4 && secs < 30.0,
         fmt("relative error %.3g", rel) + fmt(", worst entry %.3g (tol 1e-4)", worst_entry) +
             ", " + std::to_string(student.parameter_count()) + " parameters" +
             fmt(", %.1f s (< 30 s)", secs));
}

// ---- 6

void criterion_loss_invariances() {
  Rng rng(61);
  double worst_scale = 0.0;
  bool bounded = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t v = 2 + rng.index(30), d = 1 + rng.index(16);
    TokenBatch b;
    b.batch = 1;
    b.seq = 1 + rng.index(6);
    for (std::size_t t = 0; t < b.seq; ++t) {
      b.input_ids.push_back(0);
      b.target_ids.push_back(std::int32_t(rng.index(v)));
      b.supervised_mask.push_back(1);
    }
    const double mag = std::exp(rng.uniform(-8.0, 8.0));
    Matrix z = random_matrix(b.seq, v, rng);
    for (auto& x : z.values()) x *= mag;
    const double smooth = trial % 3 == 0 ? rng.uniform(0.0, 0.3) : 0.0;
    const double out = cosine_output_loss(z, b, smooth);
    const double s = std::exp(rng.uniform(-6.0, 6.0));
    worst_scale = std::max(worst_scale, std::abs(cosine_output_loss(s * z, b, smooth) - out));
    SupervisoryTarget t;
    t.student_layer_k = 1;
    for (std::size_t i = 0; i < b.seq; ++i) t.positions.push_back(i);
    t.targets = random_matrix(b.seq, d, rng);
    Matrix h = random_matrix(b.seq, d, rng);
    const double layer = cosine_layer_loss(h, t);
    bounded = bounded && out >= 0.0 && out <= 2.0 && layer >= 0.0 && layer <= 2.0;
  }
  report(6, "loss surrogate invariances", worst_scale <= 1e-9 && bounded,
         fmt("max change under positive logit scaling %.3g (tol 1e-9)", worst_scale) +
             ", 1000 fuzzed inputs " + (bounded ? "all in [0,2]" : "OUT OF RANGE"));
}

// ---- pipelines shared by 2, 5, 7, 8, 9, 11

struct RunRecord {
  std::string task;
  std::uint64_t seed = 0;
  fs::path dir;
  RunManifest manifest;
  double seconds = 0.0;
};

ExperimentConfig task_config(const std::string& task, const fs::path& source) {
  ExperimentConfig c = task == "copy" ? default_config()
                                      : load_config(source / "configs" / (task + ".json"));
  return c;
}

RunRecord run_one(const std::string& task, std::uint64_t seed, const fs::path& work,
                  const fs::path& source, const std::string& suffix = "") {
  RunRecord r;
  r.task = task;
  r.seed = seed;
  ExperimentConfig c = task_config(task, source);
  c.seed = seed;
  c.resolve_seeds();
  r.dir = work / (task + "_seed" + std::to_string(seed) + suffix);
  fs::remove_all(r.dir);
  const auto t0 = Clock::now();
  r.manifest = run_pipeline(c, r.dir);
  r.seconds = seconds_since(t0);
  std::printf("  run %s seed %llu%s: %s in %.1f s", task.c_str(), (unsigned long long)seed,
              suffix.c_str(), r.manifest.ok() ? "ok" : "FAILED", r.seconds);
  if (!r.manifest.ok())
    std::printf(" (%s: %s)", r.manifest.failed_stage.c_str(), r.manifest.error.c_str());
  else
    std::printf(" teacher %.4f base %.4f semalign %.4f control %.4f",
                r.manifest.metrics["teacher_acc"], r.manifest.metrics["student_before_acc"],
                r.manifest.metrics["student_after_acc"], r.manifest.metrics["control_after_acc"]);
  std::printf("\n");
  std::fflush(stdout);
  return r;
}

Dataset probe_set(const ExperimentConfig& c) {
  TaskData data = generate_dataset(c.task);
  const std::size_t n = std::min(c.analysis_examples, data.eval.size());
  return Dataset(data.eval.begin(), data.eval.begin() + long(n));
}

// ---- 2

void criterion_resolution(const RunRecord& run, const ExperimentConfig& c) {
  if (!run.manifest.ok()) {
    report(2, "output-side recomposition cosine on trained teacher", false, "pipeline failed");
    return;
  }
  const auto t0 = Clock::now();
  LmParams teacher = load_checkpoint(run.dir / "teacher");
  std::map<BasisSide, SemanticBasisSet> sides;
  for (BasisSide s : {BasisSide::kOutput, BasisSide::kInput, BasisSide::kRandom})
    sides[s] = compute_bases(teacher, s, c.rcond, derive_seed(c.seed, 13));
  ValidationCurve curve = validate_resolution(teacher, probe_set(c), sides, "teacher", "eval");
  const double secs = seconds_since(t0);
  auto line = [&](BasisSide s) {
    std::string out = to_string(s) + " [";
    for (std::size_t i = 0; i < curve.per_side.at(s).size(); ++i)
      out += (i ? " " : "") + fmt("%.3f", curve.per_side.at(s)[i]);
    return out + "]";
  };
  const auto& o = curve.per_side.at(BasisSide::kOutput);
  const double mn = *std::min_element(o.begin(), o.end());
  report(2, "output-side recomposition cosine on trained teacher", mn >= 0.8 && secs < 120.0,
         fmt("min %.4f (>= 0.8); ", mn) + line(BasisSide::kOutput) + "; reported " +
             line(BasisSide::kInput) + " " + line(BasisSide::kRandom) +
             fmt("; %.1f s (< 120 s)", secs));
}

// ---- 5

void criterion_layer_restriction(const std::vector<RunRecord>& runs) {
  bool ok = !runs.empty();
  std::size_t checked = 0;
  std::string bad;
  for (const RunRecord& r : runs) {
    if (!r.manifest.ok()) {
      ok = false;
      bad += " " + r.dir.filename().string() + "(failed)";
      continue;
    }
    std::ifstream in(r.dir / "pairing.json");
    std::stringstream ss;
    ss << in.rdbuf();
    PairingPlan plan = pairing_plan_from_json(ss.str());
    LmParams before = load_checkpoint(r.dir / "student_before");
    for (const char* name : {"student_after", "student_control"}) {
      if (!fs::exists(r.dir / (std::string(name) + ".json"))) continue;
      LmParams after = load_checkpoint(r.dir / name);
      std::vector<std::pair<std::size_t, std::size_t>> allowed;
      for (const auto& cp : plan.critical) allowed.push_back(before.block_range(cp.student_k - 1));
      for (std::size_t i = 0; i < before.parameter_count(); ++i) {
        if (std::bit_cast<std::uint64_t>(before.values()[i]) ==
            std::bit_cast<std::uint64_t>(after.values()[i]))
          continue;
        bool inside = false;
        for (auto [lo, hi] : allowed) inside = inside || (i >= lo && i < hi);
        if (!inside) {
          ok = false;
          bad += " " + r.dir.filename().string() + "/" + name;
          break;
        }
      }
      ++checked;
    }
  }
  report(5, "layer-restriction invariant", ok,
         std::to_string(checked) + " transferred students checked bitwise against block k" +
             (bad.empty() ? "" : "; violations:" + bad));
}

// ---- 7, 8

void criterion_cka(const RunRecord& run, const ExperimentConfig& c) {
  const auto t0 = Clock::now();
  Rng rng(71);
  Matrix x = random_matrix(200, 24, rng), y = random_matrix(200, 12, rng);
  double self_err = std::abs(linear_cka(x, x) - 1.0);
  const double base = linear_cka(x, y);
  Matrix q = svd(random_matrix(12, 12, rng)).u;
  const double orth_err = std::abs(linear_cka(x, matmul(y, q)) - base);
  const double scale_err = std::abs(linear_cka(x, 7.25 * y) - base);

  double stat_before = 0, stat_after = 0, frob = 0, max_abs = 0;
  bool pipeline_ok = run.manifest.ok();
  double grid_secs = 0;
  if (pipeline_ok) {
    const auto g0 = Clock::now();
    LmParams teacher = load_checkpoint(run.dir / "teacher");
    LmParams before = load_checkpoint(run.dir / "student_before");
    LmParams after = load_checkpoint(run.dir / "student_after");
    Dataset probe = probe_set(c);
    auto tt = collect_traces(teacher, probe), tb = collect_traces(before, probe),
         ta = collect_traces(after, probe);
    CkaGrid self = cka_grid(tb, tb, "student", "student");
    for (std::size_t i = 0; i < self.rows; ++i)
      self_err = std::max(self_err, std::abs(self.at(i, i) - 1.0));
    CkaGrid gb = cka_grid(tt, tb, "teacher", "student", "before");
    CkaGrid ga = cka_grid(tt, ta, "teacher", "student", "before");
    stat_before = diagonal_statistic(gb);
    stat_after = diagonal_statistic(ga);
    DeltaReport d = compare_grids(gb, ga);
    frob = d.frobenius;
    max_abs = d.max_abs;
    grid_secs = seconds_since(g0);
  }
  const double secs = seconds_since(t0);
  report(7, "CKA suite",
         pipeline_ok && self_err <= 1e-9 && orth_err <= 1e-6 && scale_err <= 1e-6 &&
             stat_before >= 0.8 && secs < 120.0,
         fmt("self diagonal err %.2g (1e-9)", self_err) +
             fmt(", orthogonal %.2g", orth_err) + fmt(", scale %.2g (1e-6)", scale_err) +
             fmt(", teacher-student diagonal statistic %.3f (>= 0.8)", stat_before) +
             fmt(", %.1f s (< 120 s)", secs));
  report(8, "CKA stability after alignment",
         pipeline_ok && stat_after >= 0.8 && grid_secs < 120.0,
         fmt("after-grid statistic %.3f (>= 0.8)", stat_after) +
             fmt(", Frobenius delta %.4f", frob) + fmt(", max |delta| %.4f", max_abs));
}

// ---- 9

void criterion_directional(const std::vector<RunRecord>& runs, double total_secs) {
  bool ok = total_secs < 900.0;
  std::string detail;
  for (const std::string task : {"copy", "modular_sum"}) {
    std::vector<double> teacher, sem, ctrl;
    bool all_ok = true;
    for (const RunRecord& r : runs) {
      if (r.task != task) continue;
      if (!r.manifest.ok()) {
        all_ok = false;
        continue;
      }
      auto m = r.manifest.metrics;
      teacher.push_back(m["teacher_acc"]);
      sem.push_back(m["student_after_acc"]);
      ctrl.push_back(m["control_after_acc"]);
    }
    if (!all_ok || sem.size() != 3) {
      ok = false;
      detail += task + ": runs failed; ";
      continue;
    }
    const double mt = median(teacher), ms = median(sem), mc = median(ctrl);
    const bool task_ok = ms >= mc && mt >= ms && mt >= mc;
    ok = ok && task_ok;
    detail += task + fmt(": median teacher %.4f", mt) + fmt(", semalign %.4f", ms) +
              fmt(", output-only baseline %.4f", mc) + (task_ok ? " ok; " : " VIOLATED; ");
  }
  report(9, "end-to-end directional transfer", ok,
         detail + fmt("%.0f s (< 900 s)", total_secs));
}

// ---- 10

void criterion_baselines(const RunRecord& run, const ExperimentConfig& c) {
  if (!run.manifest.ok()) {
    report(10, "baseline fidelity", false, "pipeline failed");
    return;
  }
  const auto t0 = Clock::now();
  LmParams teacher = load_checkpoint(run.dir / "teacher");
  LmParams student = load_checkpoint(run.dir / "student_before");
  TaskData data = generate_dataset(c.task);

  // Eckart-Young on blocks extracted from the trained teacher.
  Dataset seed(data.train.begin(), data.train.begin() + long(c.seeking.seed_set_size));
  SensitivityMap sens = seeking_sensitivity(teacher, seed);
  double ey_err = 0.0;
  for (std::size_t l = 0; l < teacher.config().n_layers; ++l) {
    for (std::size_t tensor : {teacher.block(l).wv, teacher.block(l).w1}) {
      const auto& info = teacher.tensors()[tensor];
      const std::size_t n_s = std::min<std::size_t>(info.rows, student.config().hidden_dim);
      const std::size_t m_s = std::min<std::size_t>(info.cols, student.config().hidden_dim);
      ExtractedBlock blk =
          seeking_extract(teacher.matrix(tensor), sens.tensor_scores(teacher, tensor), n_s, m_s);
      LoraPair p = seeking_lora_init(blk, c.seeking.rank);
      SvdResult full = svd(blk.block);
      double tail = 0;
      for (std::size_t i = p.rank; i < full.rank(); ++i) tail += full.sigma[i] * full.sigma[i];
      const double err = frobenius_norm(blk.block - matmul(p.b, p.a));
      ey_err = std::max(ey_err, std::abs(err * err - tail) / std::max(1.0, tail));
    }
  }

  // Seeking: base student frozen, merged model equals base plus adapters.
  std::vector<Adapter> adapters;
  TransferResult seek = seeking_transfer(teacher, student, data.train, c.seeking, &adapters);
  bool seek_ok = seek.before->checksum() == student.checksum() &&
                 apply_adapters(student, adapters).checksum() == seek.after->checksum();
  for (const Adapter& a : adapters) {
    const std::string& name = student.tensors()[a.tensor].name;
    seek_ok = seek_ok && (name.ends_with("attn.wv") || name.ends_with("attn.wo") ||
                          name.ends_with("ffn.w1") || name.ends_with("ffn.w2"));
  }
  for (const auto& name : seek.census.changed_tensors)
    seek_ok = seek_ok && (name.ends_with("attn.wv") || name.ends_with("attn.wo") ||
                          name.ends_with("ffn.w1") || name.ends_with("ffn.w2"));

  // LaTen: injection touches only the located slices.
  LatenAlignResult ar;
  TransferResult lt = laten_transfer(teacher, student, data.train, c.laten, &ar);
  std::vector<std::uint8_t> inside(student.parameter_count(), 0);
  {
    std::vector<double> index(student.parameter_count());
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = double(i);
    for (const NeuronSlice& s : ar.student_deltas.slices)
      for (double v : gather_slice(student, index, s)) inside[std::size_t(v)] = 1;
  }
  bool laten_local = lt.before->checksum() == student.checksum();
  std::size_t laten_changed = 0;
  for (std::size_t i = 0; i < student.parameter_count(); ++i) {
    if (std::bit_cast<std::uint64_t>(student.values()[i]) ==
        std::bit_cast<std::uint64_t>(lt.after->values()[i]))
      continue;
    ++laten_changed;
    laten_local = laten_local && inside[i];
  }
  const bool reduced = ar.best_loss < ar.first_loss;
  const double secs = seconds_since(t0);
  report(10, "baseline fidelity",
         ey_err <= 1e-8 && seek_ok && laten_local && reduced && secs < 600.0,
         fmt("Eckart-Young rel err %.2g (1e-8)", ey_err) + ", Seeking freeze " +
             (seek_ok ? "holds" : "BROKEN") + ", LaTen locality " +
             (laten_local ? "holds" : "BROKEN") + " (" + std::to_string(laten_changed) +
             " values)" + fmt(", LaTen align loss first %.6f", ar.first_loss) +
             fmt(" best %.6f", ar.best_loss) + " at step " + std::to_string(ar.best_step) +
             fmt(", %.1f s (< 600 s)", secs));
}

// ---- 11

void criterion_determinism(const RunRecord& first, const fs::path& work, const fs::path& source) {
  RunRecord again = run_one(first.task, first.seed, work, source, "_rerun");
  const bool ok = first.manifest.ok() && again.manifest.ok() &&
                  first.manifest.checksum == again.manifest.checksum;
  report(11, "determinism", ok,
         "manifest checksum " + first.manifest.checksum + " vs rerun " + again.manifest.checksum);
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "semalign_acceptance";
  fs::path source = SEMALIGN_SOURCE_DIR;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--work") work = argv[i + 1];
    else if (flag == "--source") source = argv[i + 1];
    else {
      std::fprintf(stderr, "usage: %s [--work DIR] [--source DIR]\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(work);

  try {
    criterion_pseudoinverse();
    criterion_pairing();
    criterion_gradients();
    criterion_loss_invariances();

    std::vector<RunRecord> runs;
    const auto t9 = Clock::now();
    for (const std::string task : {"copy", "modular_sum"})
      for (std::uint64_t seed : {0u, 1u, 2u}) runs.push_back(run_one(task, seed, work, source));
    const double pipeline_secs = seconds_since(t9);

    ExperimentConfig copy = default_config();
    copy.seed = 0;
    copy.resolve_seeds();
    criterion_resolution(runs.front(), copy);
    criterion_layer_restriction(runs);
    criterion_cka(runs.front(), copy);
    criterion_directional(runs, pipeline_secs);
    criterion_baselines(runs.front(), copy);
    criterion_determinism(runs.front(), work, source);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
  }

  std::sort(g_outcomes.begin(), g_outcomes.end(),
            [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
  std::size_t passed = 0;
  std::printf("\nsummary\n");
  for (const Outcome& o : g_outcomes) {
    std::printf("%s %2d %s\n", o.pass ? "PASS" : "FAIL", o.id, o.name.c_str());
    passed += o.pass;
  }
  std::printf("%zu/11 criteria passed\n", passed);
  return passed == 11 && g_outcomes.size() == 11 ? 0 : 1;
}
