#include "semalign/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "semalign/baselines.hpp"
#include "semalign/checkpoint.hpp"
#include "semalign/checksum.hpp"
#include "semalign/errors.hpp"
#include "semalign/rng.hpp"

namespace semalign {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path resolve_output_dir(const ExperimentConfig& config, const fs::path& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("SEMALIGN_OUT"); env && *env) return env;
  return "runs";
}

namespace {

Dataset head(const Dataset& data, std::size_t n) {
  n = std::min(n, data.size());
  return Dataset(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n));
}

LmParams train_model(const LmConfig& model, const StageTrainConfig& stage, std::uint64_t seed,
                     const TaskData& data, TrainReport* report) {
  LmParams params = init_lm(model);
  TrainConfig tc;
  tc.steps = stage.steps;
  tc.batch_size = stage.batch_size;
  tc.adam.lr = stage.learning_rate;
  tc.adam.weight_decay = stage.weight_decay;
  tc.seed = seed;
  TrainReport r = train(params, data.train, tc, TrainableMask::all(params));
  round_to_f32(params);
  if (report) *report = std::move(r);
  return params;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

LmParams train_teacher(const ExperimentConfig& config, const TaskData& data, TrainReport* report) {
  return train_model(config.teacher, config.teacher_train, derive_seed(config.seed, 11), data,
                     report);
}

LmParams train_student(const ExperimentConfig& config, const TaskData& data, TrainReport* report) {
  return train_model(config.student, config.student_train, derive_seed(config.seed, 12), data,
                     report);
}

AttributionOutcome attribute_and_pair(const ExperimentConfig& config, const LmParams& teacher,
                                      std::size_t student_layers, const TaskData& data) {
  AttributionOutcome out;
  const Dataset batch_set = head(data.train, config.attribution_examples);
  out.scores = layer_grad_x_activation(teacher, make_batch(batch_set));
  out.critical = select_critical_layers(out.scores, config.top_n);
  out.plan = build_pairing_plan(teacher.config().n_layers, student_layers, out.critical);
  return out;
}

TransferResult run_method(const ExperimentConfig& config, const LmParams& teacher,
                          const LmParams& student, const TaskData& data, const PairingPlan& plan,
                          const BasisPair& bases) {
  switch (config.method) {
    case Method::kSemalign:
      return run_transfer(teacher, student, plan, bases, data.train, config.transfer);
    case Method::kSeeking:
      return seeking_transfer(teacher, student, data.train, config.seeking);
    case Method::kLaten:
      return laten_transfer(teacher, student, data.train, config.laten);
    case Method::kNone: {
      TransferResult r;
      r.method = "none";
      r.before = student;
      r.after = student;
      return r;
    }
  }
  throw ConfigError("run_method: unknown method");
}

std::string RunManifest::to_json() const {
  json j;
  j["config"] = json::parse(config_json.empty() ? "{}" : config_json);
  j["artifacts"] = json::array();
  for (const auto& a : artifacts)
    j["artifacts"].push_back({{"name", a.name}, {"path", a.path}, {"checksum", a.checksum}});
  json m = json::object();
  for (const auto& [k, v] : metrics) m[k] = v;
  j["metrics"] = m;
  json s = json::object();
  for (const auto& [k, v] : seeds) s[k] = v;
  j["seeds"] = s;
  j["completed_stages"] = completed_stages;
  j["failed_stage"] = failed_stage;
  j["error"] = error;
  j["checksum"] = checksum;
  j["wall_clock_seconds"] = wall_clock_seconds;
  return j.dump(2) + "\n";
}

namespace {

std::string manifest_checksum(const RunManifest& m) {
  RunManifest copy = m;
  copy.wall_clock_seconds = 0.0;
  copy.checksum.clear();
  return checksum_hex(std::string_view(copy.to_json()));
}

}  // namespace

RunManifest run_pipeline(const ExperimentConfig& config_in, const fs::path& run_dir,
                         const Logger& log) {
  const auto t0 = std::chrono::steady_clock::now();
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };
  ExperimentConfig config = config_in;
  config.resolve_seeds();
  RunManifest manifest;
  manifest.config_json = config_to_json(config);
  manifest.seeds = {{"base", config.seed},          {"teacher_init", config.teacher.seed},
                    {"student_init", config.student.seed}, {"task", config.task.seed},
                    {"transfer", config.transfer.seed},    {"seeking", config.seeking.seed},
                    {"laten", config.laten.seed}};

  std::string stage = "validate_config";
  auto done = [&](const std::string& s) {
    manifest.completed_stages.push_back(s);
    say("stage " + s + " done");
  };
  auto artifact = [&](const std::string& name, const fs::path& path) {
    manifest.artifacts.push_back(
        {name, fs::relative(path, run_dir).generic_string(), file_checksum(path)});
  };

  try {
    config.validate();
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (ec) throw IoError("cannot create " + run_dir.string() + ": " + ec.message());
    const fs::path cache = run_dir / "cache";
    done(stage);

    stage = "generate_dataset";
    const TaskData data = generate_dataset(config.task);
    done(stage);

    stage = "train_teacher";
    TrainReport teacher_report;
    const LmParams teacher = train_teacher(config, data, &teacher_report);
    artifact("teacher", save_checkpoint(run_dir / "teacher", teacher, {{"role", "teacher"}}));
    manifest.metrics["teacher_final_loss"] =
        teacher_report.losses.empty() ? 0.0 : teacher_report.losses.back();
    done(stage);

    stage = "train_student";
    TrainReport student_report;
    const LmParams student = train_student(config, data, &student_report);
    artifact("student_before",
             save_checkpoint(run_dir / "student_before", student, {{"role", "student_before"}}));
    manifest.metrics["student_final_loss"] =
        student_report.losses.empty() ? 0.0 : student_report.losses.back();
    done(stage);

    stage = "compute_bases";
    const std::uint64_t basis_seed = derive_seed(config.seed, 13);
    std::map<BasisSide, SemanticBasisSet> teacher_sides, student_sides;
    for (BasisSide side : {BasisSide::kOutput, BasisSide::kInput, BasisSide::kRandom}) {
      teacher_sides[side] = load_or_compute_bases(cache, teacher, side, config.rcond, basis_seed);
      student_sides[side] = load_or_compute_bases(cache, student, side, config.rcond, basis_seed);
    }
    const BasisPair bases{teacher_sides.at(config.target_side),
                          student_sides.at(config.target_side)};
    done(stage);

    stage = "validate_semantics";
    const ValidationCurve teacher_curve =
        validate_resolution(teacher, data.eval, teacher_sides, "teacher", "eval");
    const ValidationCurve student_curve =
        validate_resolution(student, data.eval, student_sides, "student_before", "eval");
    auto curve_min = [](const Vector& v) { return *std::min_element(v.begin(), v.end()); };
    manifest.metrics["teacher_output_cosine_min"] =
        curve_min(teacher_curve.per_side.at(BasisSide::kOutput));
    manifest.metrics["student_output_cosine_min"] =
        curve_min(student_curve.per_side.at(BasisSide::kOutput));
    done(stage);

    stage = "attribute";
    const AttributionOutcome attr =
        attribute_and_pair(config, teacher, config.student.n_layers, data);
    write_text(run_dir / "pairing.json", pairing_plan_to_json(attr.plan) + "\n");
    artifact("pairing", run_dir / "pairing.json");
    if (!attr.plan.critical.empty()) {
      manifest.metrics["critical_teacher_layer"] =
          static_cast<double>(attr.plan.critical.front().teacher_layer);
      manifest.metrics["student_partner_layer"] =
          static_cast<double>(attr.plan.critical.front().student_k);
    }
    done(stage);

    stage = "transfer";
    TransferResult result = run_method(config, teacher, student, data, attr.plan, bases);
    LmParams after = *result.after;
    round_to_f32(after);
    if (result.status != "ok")
      throw NumericalError("transfer " + result.status + ": " + result.message);
    write_text(run_dir / "transfer.json", transfer_result_to_json(result) + "\n");
    artifact("transfer_report", run_dir / "transfer.json");
    artifact("student_after",
             save_checkpoint(run_dir / "student_after", after, {{"role", "student_after"}}));
    if (config.method == Method::kSemalign) {
      manifest.metrics["align_layer_loss_start"] = result.align_layer_loss_start;
      manifest.metrics["align_layer_loss_end"] = result.align_layer_loss_end;
    }
    std::optional<LmParams> control;
    if (config.method == Method::kSemalign && config.control_run) {
      TransferConfig tc = config.transfer;
      tc.use_layer_loss = false;
      TransferResult cr = run_transfer(teacher, student, attr.plan, bases, data.train, tc);
      if (cr.status != "ok") throw NumericalError("control transfer: " + cr.message);
      control = *cr.after;
      round_to_f32(*control);
      artifact("student_control",
               save_checkpoint(run_dir / "student_control", *control, {{"role", "student_control"}}));
    }
    done(stage);

    stage = "evaluate";
    manifest.metrics["teacher_acc"] = evaluate_accuracy(teacher, data.eval);
    manifest.metrics["student_before_acc"] = evaluate_accuracy(student, data.eval);
    manifest.metrics["student_after_acc"] = evaluate_accuracy(after, data.eval);
    if (control) manifest.metrics["control_after_acc"] = evaluate_accuracy(*control, data.eval);
    done(stage);

    stage = "analyze";
    const Dataset probe = head(data.eval, config.analysis_examples);
    const auto tr_teacher = collect_traces(teacher, probe);
    const auto tr_before = collect_traces(student, probe);
    const auto tr_after = collect_traces(after, probe);
    ReportBundle bundle;
    bundle.grids["teacher_student_before"] =
        cka_grid(tr_teacher, tr_before, "teacher", "student", "before");
    bundle.grids["teacher_student_after"] =
        cka_grid(tr_teacher, tr_after, "teacher", "student", "after");
    bundle.grids["student_self_before"] =
        cka_grid(tr_before, tr_before, "student", "student", "before");
    bundle.grids["student_self_after"] =
        cka_grid(tr_after, tr_after, "student", "student", "after");
    bundle.grids["student_before_after"] =
        cka_grid(tr_before, tr_after, "student_before", "student_after", "cross");
    bundle.curves["teacher_resolution"] = teacher_curve;
    bundle.curves["student_resolution"] = student_curve;
    const DeltaReport delta = compare_grids(bundle.grids.at("teacher_student_before"),
                                            bundle.grids.at("teacher_student_after"));
    manifest.metrics["cka_diag_before"] = diagonal_statistic(bundle.grids.at("teacher_student_before"));
    manifest.metrics["cka_diag_after"] = diagonal_statistic(bundle.grids.at("teacher_student_after"));
    manifest.metrics["cka_frobenius_delta"] = delta.frobenius;
    manifest.metrics["cka_max_abs_delta"] = delta.max_abs;
    bundle.summary = manifest.metrics;
    bundle.info = {{"method", to_string(config.method)}, {"task", to_string(config.task.kind)}};
    for (const EmittedFile& f : emit_report(bundle, run_dir / "report"))
      manifest.artifacts.push_back({"report:" + f.name, "report/" + f.name, f.checksum});
    done(stage);
  } catch (const std::exception& e) {
    manifest.failed_stage = stage;
    manifest.error = e.what();
    say("stage " + stage + " failed: " + e.what());
  }

  manifest.checksum = manifest_checksum(manifest);
  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    write_text(run_dir / "manifest.json", manifest.to_json());
  } catch (const std::exception& e) {
    if (manifest.failed_stage.empty()) {
      manifest.failed_stage = "manifest";
      manifest.error = e.what();
    }
  }
  return manifest;
}

}  // namespace semalign
