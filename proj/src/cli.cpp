#include "dhpm/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dhpm/config.hpp"
#include "dhpm/dataset.hpp"
#include "dhpm/errors.hpp"
#include "dhpm/evaluation.hpp"
#include "dhpm/io.hpp"
#include "dhpm/model.hpp"
#include "dhpm/parallel.hpp"
#include "dhpm/trainer.hpp"

namespace dhpm {

using nlohmann::json;

namespace {

fs::path default_output_dir() {
  if (const char* env = std::getenv("DHPM_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "dhpm-out";
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

/// Reproducibility record for one invocation, written before any work.
struct RunManifest {
  fs::path path;
  json doc;

  RunManifest(const fs::path& dir, const std::string& command, const std::vector<std::string>& args) {
    path = dir / ("run_" + command + ".json");
    doc = {{"command", command}, {"args", args}, {"started_at", timestamp()}};
  }
  void write() const { write_json(path, doc); }
  void finish() {
    doc["finished_at"] = timestamp();
    write();
  }
};

struct ConfigFlags {
  std::string config_path;
  std::string preset_name;
  std::string scenario;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--preset", preset_name, "Bundled preset (" + [] {
      std::string s;
      for (const auto& n : preset_names()) s += (s.empty() ? "" : ", ") + n;
      return s;
    }() + ")");
    cmd->add_option("--scenario", scenario, "inputgen | paramgen | domaingen");
    cmd->add_option("--seed", seed, "Master seed");
  }
  bool given() const { return !config_path.empty() || !preset_name.empty() || !scenario.empty() || seed; }

  TrainConfig resolve() const {
    std::optional<ScenarioTag> tag;
    if (!scenario.empty()) tag = scenario_from_string(scenario);
    TrainConfig c;
    if (!config_path.empty()) {
      c = parse_config(config_path);
      if (tag) c.scenario.tag = *tag;
    } else {
      c = preset(preset_name.empty() ? "desk-small" : preset_name, tag);
    }
    if (seed) c.seed = *seed;
    c.validate();
    return c;
  }
};

struct FunctionFlags {
  std::string kind = "periodic";
  std::vector<double> coeffs;
  std::optional<double> length;
  std::optional<double> diffusion;
  std::optional<double> reaction;

  void add(CLI::App* cmd) {
    cmd->add_option("--function", kind, "periodic | quadratic | cubic | trigonometric");
    cmd->add_option("--coeffs", coeffs, "Five periodic amplitudes")->delimiter(',');
    cmd->add_option("--L", length, "Domain length");
    cmd->add_option("--D", diffusion, "Diffusion coefficient");
    cmd->add_option("--K", reaction, "Reaction rate");
  }
};

/// Default evaluation setting for a training config.
TrainConfig::Setting default_setting(const TrainConfig& c, const FunctionFlags& f) {
  TrainConfig::Setting s{c.pde, c.length};
  if (c.scenario.tag == ScenarioTag::ParamGen) {
    auto [dmin, dmax] = std::minmax_element(c.param_grid.begin(), c.param_grid.end(),
                                            [](auto& a, auto& b) { return a.diffusion < b.diffusion; });
    auto [kmin, kmax] = std::minmax_element(c.param_grid.begin(), c.param_grid.end(),
                                            [](auto& a, auto& b) { return a.reaction < b.reaction; });
    s.params = {0.5 * (dmin->diffusion + dmax->diffusion), 0.5 * (kmin->reaction + kmax->reaction)};
  }
  if (c.scenario.tag == ScenarioTag::DomainGen) {
    auto [lo, hi] = std::minmax_element(c.lengths.begin(), c.lengths.end());
    s.length = 0.5 * (*lo + *hi);
  }
  if (f.diffusion) s.params.diffusion = *f.diffusion;
  if (f.reaction) s.params.reaction = *f.reaction;
  if (f.length) s.length = *f.length;
  s.params.validate();
  return s;
}

InputFunctionSpec explicit_function(const FunctionFlags& f, double length) {
  const FunctionKind kind = function_kind_from_string(f.kind);
  if (kind == FunctionKind::Periodic) {
    if (f.coeffs.size() != 5) throw ValidationError("--coeffs needs exactly five amplitudes for a periodic function");
    std::array<double, 5> a{};
    std::copy(f.coeffs.begin(), f.coeffs.end(), a.begin());
    return InputFunctionSpec::periodic(a, length);
  }
  if (!f.coeffs.empty()) throw ValidationError("--coeffs only applies to periodic functions");
  switch (kind) {
    case FunctionKind::Quadratic: return InputFunctionSpec::quadratic(length);
    case FunctionKind::Cubic: return InputFunctionSpec::cubic(length);
    default: return InputFunctionSpec::trigonometric(length);
  }
}

void refuse_existing(bool no_clobber, const std::vector<fs::path>& outputs) {
  if (!no_clobber) return;
  for (const auto& p : outputs) {
    if (fs::exists(p)) throw ValidationError("output " + p.string() + " exists and --no-clobber is set");
  }
}

int cmd_generate(const ConfigFlags& cf, const fs::path& out, int threads, bool no_clobber,
                 const std::vector<std::string>& args, std::ostream& log) {
  const TrainConfig config = cf.resolve();
  refuse_existing(no_clobber, {out / "manifest.json"});
  fs::create_directories(out);
  RunManifest run(out, "generate", args);
  run.doc["config"] = to_json(config);
  run.doc["config_hash"] = config_hash(config);
  run.doc["seed"] = config.seed;
  run.doc["config_path"] = cf.config_path;
  run.doc["outputs"] = {(out / "manifest.json").string()};
  run.write();
  const auto records = build_dataset(config, threads);
  write_dataset(out, config, records);
  run.finish();
  log << "wrote " << records.size() << " records to " << out.string() << " (config "
      << config_hash(config) << ")\n";
  return kExitOk;
}

int cmd_train(const ConfigFlags& cf, const fs::path& data, const fs::path& out,
              const std::string& resume_from, std::optional<int> checkpoint_every, int threads,
              bool no_clobber, const std::vector<std::string>& args, std::ostream& log) {
  LoadedDataset ds = read_dataset(data);
  TrainConfig config = cf.given() ? cf.resolve() : ds.config;
  if (checkpoint_every) config.checkpoint_every = *checkpoint_every;

  std::optional<LoadedCheckpoint> ckpt;
  if (!resume_from.empty()) {
    ckpt = load_checkpoint(resume_from);
    if (ckpt->state.config_hash != config_hash(config)) {
      throw ValidationError("checkpoint " + resume_from + " was written for config " +
                            ckpt->state.config_hash + ", current config hashes to " +
                            config_hash(config));
    }
  }
  if (config_hash(ds.config) != config_hash(config)) {
    throw ValidationError("dataset " + data.string() + " was generated for config " +
                          config_hash(ds.config) + ", training config hashes to " + config_hash(config));
  }

  const fs::path model_path = out / "model.json";
  const fs::path log_path = out / "train_log.csv";
  refuse_existing(no_clobber, {model_path, log_path});
  fs::create_directories(out);
  RunManifest run(out, "train", args);
  run.doc["config"] = to_json(config);
  run.doc["config_hash"] = config_hash(config);
  run.doc["seed"] = config.seed;
  run.doc["inputs"] = {data.string()};
  if (ckpt) run.doc["resume_from"] = resume_from;
  run.doc["outputs"] = {model_path.string(), log_path.string()};
  run.write();

  TrainOptions opts;
  opts.threads = threads;
  opts.on_checkpoint = [&](const TrainState& s) {
    std::ostringstream name;
    name << "epoch_" << std::setw(5) << std::setfill('0') << s.epochs_done << ".json";
    save_checkpoint(out / "checkpoints" / name.str(), s, config);
  };
  const int total = config.total_epochs();
  opts.on_epoch = [&](int epoch, double mean_total) {
    if ((epoch + 1) % 10 == 0 || epoch + 1 == total) {
      log << "epoch " << epoch + 1 << "/" << total << " mean total loss " << mean_total << std::endl;
    }
  };

  TrainResult result;
  if (ckpt) {
    result = resume(ckpt->state, ds.records, config, opts);
  } else {
    const DhpModel model =
        DhpModel::create(config.scenario, config.hidden_width, config.hidden_layers, config.seed);
    result = train(model, ds.records, config, opts);
  }
  save_checkpoint(model_path, result.state, config);
  write_log_csv(log_path, result.log, ckpt.has_value());
  run.finish();
  log << "trained " << result.log.entries.size() << " steps; model written to " << model_path.string()
      << "\n";
  return kExitOk;
}

int cmd_evaluate(const fs::path& model_path, const FunctionFlags& ff, int n_test,
                 std::optional<std::uint64_t> test_seed, const std::string& train_data, bool hidden,
                 const std::string& sweep, int sweep_functions, const fs::path& out, int threads,
                 bool no_clobber, const std::vector<std::string>& args, std::ostream& log) {
  const LoadedCheckpoint ck = load_checkpoint(model_path);
  const TrainConfig& config = ck.config;
  const DhpModel& model = ck.state.model;
  const auto setting = default_setting(config, ff);

  const fs::path report_path = out / "report.json";
  refuse_existing(no_clobber, {report_path});
  fs::create_directories(out);
  RunManifest run(out, "evaluate", args);
  run.doc["config_hash"] = config_hash(config);
  run.doc["seed"] = config.seed;
  run.doc["inputs"] = {model_path.string()};
  run.doc["outputs"] = {report_path.string()};
  run.write();

  std::vector<FunctionCase> cases;
  if (function_kind_from_string(ff.kind) == FunctionKind::Periodic && ff.coeffs.empty()) {
    if (n_test < 1) throw ValidationError("--n-test must be >= 1");
    const auto specs = test_functions(test_seed.value_or(config.seed), n_test, setting.length);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      cases.push_back({"test_" + std::to_string(i), specs[i], setting.params});
    }
  } else {
    const auto spec = explicit_function(ff, setting.length);
    cases.push_back({spec.describe(), spec, setting.params});
  }

  json doc;
  doc["setting"] = {{"D", setting.params.diffusion}, {"K", setting.params.reaction}, {"L", setting.length}};
  EvalReport test = error_distribution(model, cases, threads);
  if (hidden) {
    test.hidden_field_error = mean_hidden_field_error(model, cases, threads);
  }
  doc["test"] = to_json(test);
  log << "test: " << test.per_function_errors.size() << " functions, mean relative L2 error "
      << test.mean << " (std " << test.std << ")\n";
  if (test.hidden_field_error) log << "mean hidden-field error " << *test.hidden_field_error << "\n";

  if (!train_data.empty()) {
    const LoadedDataset ds = read_dataset(train_data);
    std::vector<FunctionCase> train_cases;
    for (const auto& r : ds.records) train_cases.push_back({"train_" + std::to_string(r.id), r.spec, r.params});
    const EvalReport train = error_distribution(model, train_cases, threads);
    doc["train"] = to_json(train);
    log << "train: mean relative L2 error " << train.mean << " (std " << train.std << ")\n";
  }

  if (!sweep.empty()) {
    std::vector<std::pair<std::string, std::vector<double>>> k_sets;
    if (sweep == "published" || sweep == "both") k_sets.emplace_back("published", sweep_k_values_published());
    if (sweep == "in-range" || sweep == "both") k_sets.emplace_back("in-range", sweep_k_values_in_range());
    if (k_sets.empty()) throw ValidationError("--sweep must be published, in-range or both");
    ParameterBox box{1e300, -1e300, 1e300, -1e300};
    for (const auto& p : config.param_grid) {
      box.d_min = std::min(box.d_min, p.diffusion);
      box.d_max = std::max(box.d_max, p.diffusion);
      box.k_min = std::min(box.k_min, p.reaction);
      box.k_max = std::max(box.k_max, p.reaction);
    }
    const auto fns = test_functions(test_seed.value_or(config.seed), sweep_functions, setting.length);
    for (const auto& [name, ks] : k_sets) {
      const SweepTable t = parameter_sweep(model, sweep_d_values(), ks, fns, box, threads);
      const fs::path csv = out / ("sweep_" + name + ".csv");
      write_sweep_csv(csv, t);
      doc["sweeps"][name] = csv.filename().string();
      log << "sweep (" << name << ") written to " << csv.string() << "\n";
    }
  }
  write_json(report_path, doc);
  run.finish();
  return kExitOk;
}

int cmd_predict(const fs::path& model_path, const FunctionFlags& ff, const fs::path& out_file,
                bool compare, bool no_clobber, const std::vector<std::string>& args, std::ostream& log) {
  const LoadedCheckpoint ck = load_checkpoint(model_path);
  const auto setting = default_setting(ck.config, ff);
  const auto spec = explicit_function(ff, setting.length);
  refuse_existing(no_clobber, {out_file});
  const fs::path dir = out_file.has_parent_path() ? out_file.parent_path() : fs::path(".");
  fs::create_directories(dir);
  RunManifest run(dir, "predict", args);
  run.doc["config_hash"] = config_hash(ck.config);
  run.doc["inputs"] = {model_path.string()};
  run.doc["function"] = spec_json(spec);
  run.doc["outputs"] = {out_file.string()};
  run.write();
  const SolutionField field = predict_field(ck.state.model, spec, setting.params);
  write_field_csv(out_file, field);
  log << "wrote " << field.grid.nx << "x" << field.grid.nt << " field to " << out_file.string() << "\n";
  if (compare) {
    const auto ref = ftcs_solve(setting.params, spec, field.grid);
    log << "relative L2 error vs FTCS: " << relative_l2_error(ref.values, field.values) << "\n";
  }
  run.finish();
  return kExitOk;
}

int cmd_export_contours(const fs::path& model_path, const FunctionFlags& ff, const fs::path& out,
                        bool no_clobber, const std::vector<std::string>& args, std::ostream& log) {
  const LoadedCheckpoint ck = load_checkpoint(model_path);
  const auto setting = default_setting(ck.config, ff);
  const auto spec = explicit_function(ff, setting.length);
  const std::vector<fs::path> outputs{out / "state_reference.csv", out / "state_predicted.csv",
                                      out / "hidden_true.csv", out / "hidden_learned.csv"};
  refuse_existing(no_clobber, outputs);
  fs::create_directories(out);
  RunManifest run(out, "export-contours", args);
  run.doc["config_hash"] = config_hash(ck.config);
  run.doc["inputs"] = {model_path.string()};
  run.doc["function"] = spec_json(spec);
  json outs = json::array();
  for (const auto& p : outputs) outs.push_back(p.string());
  run.doc["outputs"] = outs;
  run.write();
  const FunctionEvaluation ev = evaluate_on_function(ck.state.model, spec, setting.params);
  const HiddenFieldComparison hc = hidden_field_comparison(ck.state.model, spec, setting.params);
  const auto& grid = ev.reference.grid;
  write_contour_csv(outputs[0], grid, ev.reference.values);
  write_contour_csv(outputs[1], grid, ev.predicted.values);
  write_contour_csv(outputs[2], grid, hc.true_field);
  write_contour_csv(outputs[3], grid, hc.learned_field);
  log << "state error " << ev.error << ", hidden-field error " << hc.error << "; contours in "
      << out.string() << "\n";
  run.finish();
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized deep hidden physics models for reaction-diffusion systems", "dhpm"};
  app.require_subcommand(1);
  int threads = 1;
  bool no_clobber = false;
  app.add_option("--threads", threads, "Worker threads (1 = fully serial)")->check(CLI::PositiveNumber);
  app.add_flag("--no-clobber", no_clobber, "Refuse to overwrite existing outputs");

  const fs::path base = default_output_dir();

  auto* gen = app.add_subcommand("generate", "Build a training dataset with the FTCS oracle");
  ConfigFlags gen_cfg;
  gen_cfg.add(gen);
  std::string gen_out = (base / "dataset").string();
  gen->add_option("--out", gen_out, "Dataset directory");

  auto* tr = app.add_subcommand("train", "Train a model on a generated dataset");
  ConfigFlags tr_cfg;
  tr_cfg.add(tr);
  std::string tr_data = (base / "dataset").string();
  std::string tr_out = (base / "train").string();
  std::string tr_resume;
  std::optional<int> tr_ckpt;
  tr->add_option("--data", tr_data, "Dataset directory");
  tr->add_option("--out", tr_out, "Output directory for model, log and checkpoints");
  tr->add_option("--resume", tr_resume, "Checkpoint to continue from");
  tr->add_option("--checkpoint-every", tr_ckpt, "Write a checkpoint every N epochs");

  auto* ev = app.add_subcommand("evaluate", "Relative L2 errors of a trained model");
  std::string ev_model = (base / "train" / "model.json").string();
  std::string ev_out = (base / "eval").string();
  FunctionFlags ev_fn;
  ev_fn.add(ev);
  int ev_n = 20;
  std::optional<std::uint64_t> ev_seed;
  std::string ev_train;
  bool ev_hidden = false;
  std::string ev_sweep;
  int ev_sweep_n = 100;
  ev->add_option("--model", ev_model, "Model checkpoint");
  ev->add_option("--out", ev_out, "Report directory");
  ev->add_option("--n-test", ev_n, "Number of unseen periodic test functions");
  ev->add_option("--test-seed", ev_seed, "Seed for the test functions (default: config seed)");
  ev->add_option("--train-data", ev_train, "Also report errors on this dataset");
  ev->add_flag("--hidden", ev_hidden, "Report the mean hidden-field error over the test functions");
  ev->add_option("--sweep", ev_sweep, "ParamGen sweep K set: published | in-range | both");
  ev->add_option("--sweep-functions", ev_sweep_n, "Functions per sweep cell");

  auto* pr = app.add_subcommand("predict", "Predict the 201x101 field for one input function");
  std::string pr_model = (base / "train" / "model.json").string();
  std::string pr_out = (base / "predict" / "field.csv").string();
  FunctionFlags pr_fn;
  pr_fn.add(pr);
  bool pr_compare = false;
  pr->add_option("--model", pr_model, "Model checkpoint");
  pr->add_option("--out", pr_out, "Field CSV");
  pr->add_flag("--compare", pr_compare, "Also report the error against FTCS");

  auto* ex = app.add_subcommand("export-contours", "Write (x,t,value) CSVs for state and hidden fields");
  std::string ex_model = (base / "train" / "model.json").string();
  std::string ex_out = (base / "contours").string();
  FunctionFlags ex_fn;
  ex_fn.add(ex);
  ex->add_option("--model", ex_model, "Model checkpoint");
  ex->add_option("--out", ex_out, "Output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  configure_allocator();
  try {
    if (gen->parsed()) return cmd_generate(gen_cfg, gen_out, threads, no_clobber, args, out);
    if (tr->parsed()) {
      return cmd_train(tr_cfg, tr_data, tr_out, tr_resume, tr_ckpt, threads, no_clobber, args, out);
    }
    if (ev->parsed()) {
      return cmd_evaluate(ev_model, ev_fn, ev_n, ev_seed, ev_train, ev_hidden, ev_sweep, ev_sweep_n,
                          ev_out, threads, no_clobber, args, out);
    }
    if (pr->parsed()) return cmd_predict(pr_model, pr_fn, pr_out, pr_compare, no_clobber, args, out);
    if (ex->parsed()) return cmd_export_contours(ex_model, ex_fn, ex_out, no_clobber, args, out);
  } catch (const std::invalid_argument& e) {  // ValidationError, ShapeError
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace dhpm
