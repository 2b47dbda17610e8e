#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>

#include "CLI11.hpp"
#include "mcdgln/analysis.hpp"
#include "mcdgln/gradsuite.hpp"
#include "mcdgln/trainer.hpp"

namespace mcdgln::cli {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("MCDGLN_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const auto v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw ConfigError("MCDGLN_SEED: expected an integer, got '" + std::string(s) + "'");
  return v;
}

// --seed beats the file, the file beats MCDGLN_SEED.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, bool file_has_seed, std::uint64_t file_seed) {
  if (flag) return *flag;
  if (file_has_seed) return file_seed;
  if (auto e = env_seed()) return *e;
  return file_seed;
}

io::RunConfig resolve_config(const std::string& path, std::optional<std::uint64_t> seed_flag) {
  io::RunConfig cfg = path.empty() ? io::default_config() : io::load_config(path);
  cfg.seed = resolve_seed(seed_flag, cfg.seed_given, cfg.seed);
  return cfg;
}

void write_json(const fs::path& path, const ordered_json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void print_metrics(std::ostream& out, const train::Metrics& m) {
  out << std::fixed << std::setprecision(4) << "accuracy  " << m.accuracy << "\nprecision " << m.precision
      << (m.precision_undefined ? " (undefined: no positive predictions)" : "") << "\nf1        " << m.f1
      << "\nauroc     " << m.auroc << (m.auroc_undefined ? " (undefined: single class)" : "") << '\n';
}

std::vector<int> labels_of(std::span<const model::SubjectInput> s) {
  std::vector<int> y;
  for (const auto& x : s) y.push_back(x.label);
  return y;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string spec, out;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (!fs::exists(a.spec)) throw ConfigError("spec file '" + a.spec + "' does not exist");
  auto spec = io::load_synth_spec(a.spec);
  spec.seed = resolve_seed(a.seed, spec.seed_given, spec.seed);
  const auto res = io::generate_synthetic(spec, a.out);
  out << "wrote " << res.manifest.string() << "\n"
      << "subjects " << spec.n_subjects << " (controls " << res.controls << ", cases " << res.cases << ")\n"
      << "M " << spec.rois << ", T " << spec.timepoints << ", planted edges " << res.planted.size() << ", seed "
      << spec.seed << '\n';
  return kOk;
}

struct DataArgs {
  std::string data, config, out;
  std::optional<std::uint64_t> seed;
};

std::pair<io::Dataset, std::vector<model::SubjectInput>> load_inputs(const std::string& manifest,
                                                                     const io::RunConfig& cfg) {
  auto ds = io::load_dataset(manifest);
  conn::window_count(ds.manifest.timepoints, {cfg.window_length, cfg.stride});
  auto inputs = model::prepare_dataset(ds, cfg);
  return {std::move(ds), std::move(inputs)};
}

int cmd_cv(const DataArgs& a, std::size_t jobs, const std::string& ckpt_dir, std::ostream& out) {
  const auto cfg = resolve_config(a.config, a.seed);
  auto [ds, inputs] = load_inputs(a.data, cfg);
  const auto report = train::cross_validate(inputs, cfg, {jobs, ckpt_dir});
  write_json(a.out, train::report_json(report));
  out << std::fixed << std::setprecision(4) << cfg.folds << "-fold cross-validation, " << inputs.size()
      << " subjects\n";
  auto line = [&](const char* name, double m, double s) { out << name << m << " +/- " << s << '\n'; };
  line("accuracy  ", report.mean.accuracy, report.stddev.accuracy);
  line("precision ", report.mean.precision, report.stddev.precision);
  line("f1        ", report.mean.f1, report.stddev.f1);
  line("auroc     ", report.mean.auroc, report.stddev.auroc);
  out << "report written to " << a.out << '\n';
  return kOk;
}

int cmd_train(const DataArgs& a, double holdout, std::ostream& out) {
  const auto cfg = resolve_config(a.config, a.seed);
  if (!(holdout >= 0.0 && holdout < 1.0)) throw ConfigError("holdout: must lie in [0, 1)");
  auto [ds, inputs] = load_inputs(a.data, cfg);

  std::vector<model::SubjectInput> train_set, test_set;
  if (holdout > 0.0) {
    // Per-class seeded shuffle; the first ceil(holdout * n_class) go to the test split.
    std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
    for (int cls = 0; cls < 2; ++cls) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < inputs.size(); ++i)
        if (inputs[i].label == cls) members.push_back(i);
      std::shuffle(members.begin(), members.end(), rng);
      const auto n_test = static_cast<std::size_t>(std::ceil(holdout * static_cast<double>(members.size())));
      for (std::size_t k = 0; k < members.size(); ++k) (k < n_test ? test_set : train_set).push_back(inputs[members[k]]);
    }
  } else {
    train_set = inputs;
  }

  auto trained = train::train_fold(train_set, cfg, cfg.seed);
  trained.params.save(a.out);

  ordered_json rep;
  rep["config"] = train::config_json(cfg);
  rep["holdout"] = holdout;
  rep["train_subjects"] = train_set.size();
  rep["test_subjects"] = test_set.size();
  rep["loss_history"] = trained.loss_history;
  out << "trained on " << train_set.size() << " subjects, " << trained.steps << " steps, final loss "
      << trained.loss_history.back() << '\n';
  if (!test_set.empty()) {
    const auto scores = model::predict(trained.params, test_set, cfg);
    const auto m = train::metrics(scores, labels_of(test_set));
    rep["holdout_metrics"] = train::metrics_json(m);
    out << "holdout (" << test_set.size() << " subjects):\n";
    print_metrics(out, m);
  }
  write_json(a.out + ".json", rep);
  out << "checkpoint written to " << a.out << '\n';
  return kOk;
}

int cmd_eval(const DataArgs& a, const std::string& checkpoint, std::ostream& out) {
  const auto cfg = resolve_config(a.config, a.seed);
  auto [ds, inputs] = load_inputs(a.data, cfg);
  auto params = grad::ParamSet::load(checkpoint);
  model::check_params(params, model::shape_for(cfg, ds.manifest.rois, ds.manifest.timepoints));
  const auto scores = model::predict(params, inputs, cfg);
  const auto m = train::metrics(scores, labels_of(inputs));
  print_metrics(out, m);
  if (!a.out.empty()) {
    ordered_json rep;
    rep["config"] = train::config_json(cfg);
    rep["checkpoint"] = checkpoint;
    rep["metrics"] = train::metrics_json(m);
    rep["scores"] = scores;
    write_json(a.out, rep);
  }
  return kOk;
}

int cmd_analyze(const DataArgs& a, const std::string& groups, double alpha, const std::string& checkpoint,
                std::ostream& out) {
  if (groups != "label") throw ConfigError("groups: only 'label' is supported");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha: must lie in [0, 1]");
  const auto cfg = resolve_config(a.config, a.seed);
  auto [ds, inputs] = load_inputs(a.data, cfg);

  grad::ParamSet params;
  if (!checkpoint.empty()) {
    params = grad::ParamSet::load(checkpoint);
    model::check_params(params, model::shape_for(cfg, ds.manifest.rois, ds.manifest.timepoints));
  } else {
    out << "no checkpoint given; training on all " << inputs.size() << " subjects first\n";
    params = train::train_fold(inputs, cfg, cfg.seed).params;
  }

  std::array<std::vector<grad::Tensor>, 2> sfc, tsfc;
  for (const auto& s : inputs) {
    sfc[s.label].push_back(s.sfc);
    tsfc[s.label].push_back(model::tsfc(params, s, cfg));
  }
  const auto sfc_tests = stats::edge_tests(sfc[0], sfc[1], alpha);
  const auto tsfc_tests = stats::edge_tests(tsfc[0], tsfc[1], alpha);
  auto significant = [](std::vector<stats::EdgeTestResult> v) {
    std::erase_if(v, [](const auto& r) { return !r.significant; });
    return v;
  };
  const auto overlap = stats::overlap_stats(significant(sfc_tests), significant(tsfc_tests));

  out << "alpha " << alpha << " (uncorrected), " << sfc_tests.size() << " edges\n"
      << "significant sFC edges  " << overlap.sfc_only + overlap.overlap << '\n'
      << "significant tsFC edges " << overlap.tsfc_only + overlap.overlap << '\n'
      << "overlap                " << overlap.overlap << '\n';
  if (!a.out.empty()) {
    ordered_json rep;
    rep["config"] = train::config_json(cfg);
    rep["alpha"] = alpha;
    rep["groups"] = groups;
    rep["checkpoint"] = checkpoint;
    rep["overlap"] = stats::overlap_json(overlap);
    rep["sfc"] = stats::edge_tests_json(sfc_tests);
    rep["tsfc"] = stats::edge_tests_json(tsfc_tests);
    write_json(a.out, rep);
  }
  return kOk;
}

int cmd_gradcheck(const std::string& size, std::optional<std::uint64_t> seed_flag, std::ostream& out) {
  if (size != "toy") throw ConfigError("gradcheck: unknown size '" + size + "' (only 'toy')");
  const auto seed = resolve_seed(seed_flag, false, 7);
  double worst = 0.0;
  for (const auto& e : gradsuite::run_all(seed)) {
    out << std::left << std::setw(28) << e.name << std::scientific << std::setprecision(3) << e.max_rel_error << '\n';
    worst = std::max(worst, e.max_rel_error);
  }
  out << "max relative error " << std::scientific << std::setprecision(3) << worst << '\n';
  return worst < 1e-4 ? kOk : kNumericalError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic functional-connectivity graph learning toolkit", "mcdgln"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate a synthetic connectome dataset");
  s_synth->add_option("--spec", synth.spec, "Synthetic spec file (key=value)")->required();
  s_synth->add_option("--out", synth.out, "Output directory")->required();
  s_synth->add_option("--seed", synth.seed, "Seed override");

  DataArgs cv;
  std::size_t jobs = 1;
  std::string ckpt_dir;
  auto* s_cv = app.add_subcommand("cv", "Stratified k-fold cross-validation");
  s_cv->add_option("--data", cv.data, "manifest.csv")->required();
  s_cv->add_option("--config", cv.config, "Run config (key=value); defaults if omitted");
  s_cv->add_option("--out", cv.out, "Report JSON path")->required();
  s_cv->add_option("--seed", cv.seed, "Seed override");
  s_cv->add_option("--jobs", jobs, "Folds trained in parallel")->check(CLI::PositiveNumber);
  s_cv->add_option("--checkpoints", ckpt_dir, "Directory for per-fold checkpoints");

  DataArgs tr;
  double holdout = 0.2;
  auto* s_train = app.add_subcommand("train", "Train on a single stratified split and write a checkpoint");
  s_train->add_option("--data", tr.data, "manifest.csv")->required();
  s_train->add_option("--config", tr.config, "Run config");
  s_train->add_option("--out", tr.out, "Checkpoint path (a .json summary is written beside it)")->required();
  s_train->add_option("--seed", tr.seed, "Seed override");
  s_train->add_option("--holdout", holdout, "Held-out fraction per class")->capture_default_str();

  DataArgs ev;
  std::string eval_ckpt;
  auto* s_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  s_eval->add_option("--data", ev.data, "manifest.csv")->required();
  s_eval->add_option("--config", ev.config, "Run config used for training");
  s_eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  s_eval->add_option("--out", ev.out, "Optional metrics JSON");
  s_eval->add_option("--seed", ev.seed, "Seed override");

  DataArgs an;
  std::string groups = "label", an_ckpt;
  double alpha = 0.01;
  auto* s_an = app.add_subcommand("analyze", "Per-edge group t-tests on sFC and tsFC");
  s_an->add_option("--data", an.data, "manifest.csv")->required();
  s_an->add_option("--groups", groups, "Grouping column")->capture_default_str();
  s_an->add_option("--alpha", alpha, "Significance level (uncorrected)")->capture_default_str();
  s_an->add_option("--config", an.config, "Run config");
  s_an->add_option("--checkpoint", an_ckpt, "Trained parameters for tsFC; trains first if omitted");
  s_an->add_option("--out", an.out, "Analysis JSON");
  s_an->add_option("--seed", an.seed, "Seed override");

  std::string gc_size = "toy";
  std::optional<std::uint64_t> gc_seed;
  auto* s_gc = app.add_subcommand("gradcheck", "Finite-difference check of all primitives and the full loss");
  s_gc->add_option("--size", gc_size, "Problem size")->capture_default_str();
  s_gc->add_option("--seed", gc_seed, "Seed");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*s_synth) return cmd_synth(synth, out);
    if (*s_cv) return cmd_cv(cv, jobs, ckpt_dir, out);
    if (*s_train) return cmd_train(tr, holdout, out);
    if (*s_eval) return cmd_eval(ev, eval_ckpt, out);
    if (*s_an) return cmd_analyze(an, groups, alpha, an_ckpt, out);
    if (*s_gc) return cmd_gradcheck(gc_size, gc_seed, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kCheckpointError;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
  return kConfigError;
}

}  // namespace mcdgln::cli
