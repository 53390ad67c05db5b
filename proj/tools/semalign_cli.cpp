#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semalign/analysis.hpp"
#include "semalign/attribution.hpp"
#include "semalign/baselines.hpp"
#include "semalign/checkpoint.hpp"
#include "semalign/config.hpp"
#include "semalign/errors.hpp"
#include "semalign/pipeline.hpp"
#include "semalign/rng.hpp"
#include "semalign/semantics.hpp"
#include "semalign/tasks.hpp"

namespace fs = std::filesystem;
using namespace semalign;

namespace {

constexpr int kUsage = 2;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig load(const Globals& g) {
  ExperimentConfig c = g.config_path.empty() ? default_config() : load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  c.resolve_seeds();
  c.validate();
  return c;
}

fs::path out_dir(const Globals& g, const ExperimentConfig& c) {
  const fs::path dir = resolve_output_dir(c, g.out);
  fs::create_directories(dir);
  return dir;
}

void log_line(const std::string& msg) { std::cerr << "[semalign] " << msg << "\n"; }

void print_curve(const ValidationCurve& curve) {
  std::cout << curve_to_csv(curve);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-scale knowledge transfer through vocabulary-defined semantic bases"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Base seed; overrides the config");
  app.add_option("--out", g.out, "Output directory (default: $SEMALIGN_OUT or ./runs)");
  app.fallthrough();

  auto* train_teacher_cmd = app.add_subcommand("train-teacher", "Train the teacher model");
  auto* train_student_cmd = app.add_subcommand("train-student", "Train the student baseline");

  auto* bases_cmd = app.add_subcommand("compute-bases", "Semantic bases of a checkpoint");
  std::string model_path;
  std::string side_name = "output";
  double rcond = -1.0;
  bases_cmd->add_option("--model", model_path, "Model checkpoint")->required();
  bases_cmd->add_option("--side", side_name, "output | input | random");
  bases_cmd->add_option("--rcond", rcond, "Relative singular-value cutoff");

  auto* validate_cmd = app.add_subcommand("validate-semantics", "Recomposition cosine per layer");
  validate_cmd->add_option("--model", model_path, "Model checkpoint")->required();

  auto* attribute_cmd = app.add_subcommand("attribute", "Teacher layer attribution and pairing");
  std::string teacher_path, student_path, after_path;
  attribute_cmd->add_option("--teacher", teacher_path, "Teacher checkpoint")->required();

  auto* pair_cmd = app.add_subcommand("pair", "Print the teacher/student layer pairing");
  std::size_t lt = 0, ls = 0;
  std::vector<std::size_t> critical;
  pair_cmd->add_option("--lt", lt, "Teacher depth")->required()->check(CLI::PositiveNumber);
  pair_cmd->add_option("--ls", ls, "Student depth")->required()->check(CLI::PositiveNumber);
  pair_cmd->add_option("--critical", critical, "Critical teacher layers (1-based)");

  auto* transfer_cmd = app.add_subcommand("transfer", "Run the semantic-alignment transfer");
  transfer_cmd->add_option("--teacher", teacher_path, "Teacher checkpoint")->required();
  transfer_cmd->add_option("--student", student_path, "Student checkpoint")->required();

  auto* baseline_cmd = app.add_subcommand("baseline", "Run a baseline transfer method");
  std::string baseline_name;
  baseline_cmd->add_option("--method", baseline_name, "seeking | laten")
      ->required()
      ->check(CLI::IsMember({"seeking", "laten"}));
  baseline_cmd->add_option("--teacher", teacher_path, "Teacher checkpoint")->required();
  baseline_cmd->add_option("--student", student_path, "Student checkpoint")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Exact-match accuracy on the eval split");
  evaluate_cmd->add_option("--model", model_path, "Model checkpoint")->required();

  auto* analyze_cmd = app.add_subcommand("analyze", "CKA grids between checkpoints");
  analyze_cmd->add_option("--teacher", teacher_path, "Teacher checkpoint")->required();
  analyze_cmd->add_option("--student", student_path, "Student checkpoint (before)")->required();
  analyze_cmd->add_option("--after", after_path, "Student checkpoint (after)");

  auto* run_cmd = app.add_subcommand("run", "Full pipeline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*pair_cmd) {
      if (ls > lt) {
        std::cerr << "error: --ls (" << ls << ") must not exceed --lt (" << lt << ")\n";
        return kUsage;
      }
      const PairingPlan plan = build_pairing_plan(lt, ls, critical);
      for (const PairingEntry& e : plan.entries) {
        std::printf("k=%zu l_T=%zu lo=%zu hi=%zu lambda=%.17g\n", e.student_k, e.teacher_base,
                    e.lo, e.hi, e.lambda);
      }
      for (const CriticalPair& c : plan.critical)
        std::printf("critical=%zu k_dagger=%zu\n", c.teacher_layer, c.student_k);
      return 0;
    }

    const ExperimentConfig config = load(g);

    if (*run_cmd) {
      const fs::path dir = out_dir(g, config);
      const RunManifest m = run_pipeline(config, dir, log_line);
      std::cout << "manifest: " << (dir / "manifest.json").string() << "\n";
      for (const auto& [k, v] : m.metrics) std::cout << k << " = " << v << "\n";
      std::cout << "checksum = " << m.checksum << "\n";
      if (!m.ok()) {
        std::cerr << "error: stage " << m.failed_stage << " failed: " << m.error << "\n";
        return 1;
      }
      return 0;
    }

    const TaskData data = generate_dataset(config.task);

    if (*train_teacher_cmd || *train_student_cmd) {
      const bool teacher = train_teacher_cmd->parsed();
      TrainReport report;
      const LmParams model = teacher ? train_teacher(config, data, &report)
                                     : train_student(config, data, &report);
      const std::string name = teacher ? "teacher" : "student_before";
      const fs::path path = save_checkpoint(out_dir(g, config) / name, model, {{"role", name}});
      std::cout << "checkpoint: " << path.string() << "\n"
                << "final_loss = " << (report.losses.empty() ? 0.0 : report.losses.back()) << "\n"
                << "eval_acc = " << evaluate_accuracy(model, data.eval) << "\n";
      return 0;
    }

    if (*bases_cmd) {
      const LmParams model = load_checkpoint(model_path);
      const BasisSide side = parse_basis_side(side_name);
      const SemanticBasisSet b = compute_bases(model, side, rcond, derive_seed(config.seed, 13));
      const fs::path path = save_bases(out_dir(g, config) / ("bases_" + side_name), b);
      std::cout << "bases: " << path.string() << "\n"
                << "effective_rank = " << b.effective_rank << "\n"
                << "checksum = " << b.checksum() << "\n";
      return 0;
    }

    if (*validate_cmd) {
      const LmParams model = load_checkpoint(model_path);
      std::map<BasisSide, SemanticBasisSet> sides;
      for (BasisSide s : {BasisSide::kOutput, BasisSide::kInput, BasisSide::kRandom})
        sides[s] = compute_bases(model, s, config.rcond, derive_seed(config.seed, 13));
      print_curve(validate_resolution(model, data.eval, sides, model_path, "eval"));
      return 0;
    }

    if (*attribute_cmd) {
      const LmParams teacher = load_checkpoint(teacher_path);
      const AttributionOutcome a = attribute_and_pair(config, teacher, config.student.n_layers, data);
      for (const LayerScore& s : a.scores)
        std::printf("layer=%zu score=%.17g\n", s.layer_index, s.score);
      const fs::path path = out_dir(g, config) / "pairing.json";
      std::ofstream(path) << pairing_plan_to_json(a.plan) << "\n";
      std::cout << "pairing: " << path.string() << "\n";
      return 0;
    }

    if (*transfer_cmd || *baseline_cmd) {
      const LmParams teacher = load_checkpoint(teacher_path);
      const LmParams student = load_checkpoint(student_path);
      ExperimentConfig c = config;
      if (*baseline_cmd) c.method = parse_method(baseline_name);
      else c.method = Method::kSemalign;
      const AttributionOutcome a = attribute_and_pair(c, teacher, student.config().n_layers, data);
      const BasisPair bases{compute_bases(teacher, c.target_side, c.rcond),
                            compute_bases(student, c.target_side, c.rcond)};
      const TransferResult r = run_method(c, teacher, student, data, a.plan, bases);
      const fs::path dir = out_dir(g, c);
      std::ofstream(dir / "transfer.json") << transfer_result_to_json(r) << "\n";
      LmParams after = *r.after;
      round_to_f32(after);
      save_checkpoint(dir / "student_after", after, {{"role", "student_after"}});
      std::cout << "status = " << r.status << "\n"
                << "before_acc = " << evaluate_accuracy(student, data.eval) << "\n"
                << "after_acc = " << evaluate_accuracy(after, data.eval) << "\n";
      return r.status == "ok" ? 0 : 1;
    }

    if (*evaluate_cmd) {
      const LmParams model = load_checkpoint(model_path);
      std::cout << "eval_acc = " << evaluate_accuracy(model, data.eval) << "\n";
      return 0;
    }

    if (*analyze_cmd) {
      const LmParams teacher = load_checkpoint(teacher_path);
      const LmParams before = load_checkpoint(student_path);
      Dataset probe(data.eval.begin(),
                    data.eval.begin() + static_cast<std::ptrdiff_t>(
                                            std::min(config.analysis_examples, data.eval.size())));
      const auto tt = collect_traces(teacher, probe);
      const auto tb = collect_traces(before, probe);
      ReportBundle bundle;
      bundle.grids["teacher_student_before"] = cka_grid(tt, tb, "teacher", "student", "before");
      bundle.grids["student_self_before"] = cka_grid(tb, tb, "student", "student", "before");
      if (!after_path.empty()) {
        const auto ta = collect_traces(load_checkpoint(after_path), probe);
        bundle.grids["teacher_student_after"] = cka_grid(tt, ta, "teacher", "student", "after");
        bundle.grids["student_self_after"] = cka_grid(ta, ta, "student", "student", "after");
        const DeltaReport d = compare_grids(bundle.grids["teacher_student_before"],
                                            bundle.grids["teacher_student_after"]);
        bundle.summary["cka_frobenius_delta"] = d.frobenius;
      }
      for (const auto& [name, grid] : bundle.grids)
        bundle.summary["diag_" + name] = diagonal_statistic(grid);
      const fs::path dir = out_dir(g, config) / "report";
      emit_report(bundle, dir);
      for (const auto& [k, v] : bundle.summary) std::cout << k << " = " << v << "\n";
      std::cout << "report: " << dir.string() << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
