#include "mcdgln/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace mcdgln::train {
namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

void adam_step(ParamSet& params, AdamState& state, double lr) {
  auto& entries = params.entries();
  if (state.first.size() != entries.size()) {
    state.first.clear();
    state.second.clear();
    for (const auto& e : entries) {
      state.first.emplace_back(e.value.size(), 0.0);
      state.second.emplace_back(e.value.size(), 0.0);
    }
    state.step = 0;
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& g = entries[k].grad;
    if (g.size() != entries[k].value.size() || state.first[k].size() != g.size()) {
      throw ShapeError("adam_step: gradient shape mismatch for '" + entries[k].name + "'");
    }
    for (double x : g)
      if (!std::isfinite(x)) throw NumericalError("adam_step: non-finite gradient for '" + entries[k].name + "'");
  }

  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& e = entries[k];
    auto& m = state.first[k];
    auto& v = state.second[k];
    std::vector<double> w(e.value.values().begin(), e.value.values().end());
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * e.grad[i];
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * e.grad[i] * e.grad[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEps);
    }
    e.value = grad::Tensor(e.value.rows(), e.value.cols(), std::move(w));
  }
}

TrainResult train_fold(std::span<const model::SubjectInput> subjects, const io::RunConfig& cfg, std::uint64_t seed) {
  if (subjects.size() < 2) throw DataError("train_fold: need at least 2 subjects");
  const bool has0 = std::any_of(subjects.begin(), subjects.end(), [](const auto& s) { return s.label == 0; });
  const bool has1 = std::any_of(subjects.begin(), subjects.end(), [](const auto& s) { return s.label == 1; });
  if (!has0 || !has1) throw DataError("train_fold: training set contains a single class");

  const auto& first = subjects.front();
  const model::ModelShape shape{first.sfc.rows(), first.dfc.size(), cfg.hidden, cfg.wea_layers, cfg.hgcn_blocks};
  TrainResult res{model::init_params(shape, mix(seed, 1)), {}, 0};
  std::mt19937_64 rng(mix(seed, 2));
  AdamState adam;

  std::vector<std::size_t> order(subjects.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const model::SubjectInput*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&subjects[order[i]]);
      res.params.zero_grad();
      grad::Tape tape;
      auto loss = model::batch_loss(tape, res.params, batch, cfg);
      if (!std::isfinite(loss.report.total)) throw NumericalError("train_fold: non-finite loss");
      tape.backward(loss.total);
      adam_step(res.params, adam, cfg.learning_rate);
      ++res.steps;
      weighted += loss.report.total * static_cast<double>(batch.size());
    }
    res.loss_history.push_back(weighted / static_cast<double>(order.size()));
  }
  res.params.zero_grad();
  return res;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auroc: scores and labels differ in length");
  // Average ranks (1-based) handle ties as half-wins.
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(scores.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = avg;
    i = j + 1;
  }
  double pos = 0.0, neg = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      pos += 1.0;
      rank_sum += rank[i];
    } else {
      neg += 1.0;
    }
  }
  if (pos == 0.0 || neg == 0.0) throw DataError("auroc: both classes required");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

Metrics metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.empty() || scores.size() != labels.size()) {
    throw ShapeError("metrics: " + std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) +
                     " labels");
  }
  double tp = 0, tn = 0, fp = 0, fn = 0;
  bool has0 = false, has1 = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("metrics: label outside {0, 1}");
    const bool pred = scores[i] >= threshold;
    const bool truth = labels[i] == 1;
    (truth ? has1 : has0) = true;
    if (pred && truth) ++tp;
    else if (pred) ++fp;
    else if (truth) ++fn;
    else ++tn;
  }
  Metrics m;
  m.accuracy = (tp + tn) / static_cast<double>(scores.size());
  if (tp + fp == 0) {
    m.precision = 0.0;
    m.precision_undefined = true;
  } else {
    m.precision = tp / (tp + fp);
  }
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + recall > 0 ? 2.0 * m.precision * recall / (m.precision + recall) : 0.0;
  if (has0 && has1) {
    m.auroc = auroc(scores, labels);
  } else {
    m.auroc = 0.5;
    m.auroc_undefined = true;
  }
  return m;
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("folds: must be >= 2");
  if (labels.size() < k) {
    throw DataError("cross_validate: " + std::to_string(labels.size()) + " subjects cannot fill " + std::to_string(k) +
                    " folds");
  }
  std::mt19937_64 rng(mix(seed, 3));
  std::vector<std::size_t> dealt;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    dealt.insert(dealt.end(), members.begin(), members.end());
  }
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < dealt.size(); ++i) folds[i % k].push_back(dealt[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

void summarize(MetricsReport& report) {
  const double n = static_cast<double>(report.folds.size());
  auto field = [&](auto get, double& mean, double& sd) {
    double s = 0.0;
    for (const auto& f : report.folds) s += get(f.metrics);
    mean = n > 0 ? s / n : 0.0;
    double ss = 0.0;
    for (const auto& f : report.folds) ss += (get(f.metrics) - mean) * (get(f.metrics) - mean);
    sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  };
  field([](const Metrics& m) { return m.accuracy; }, report.mean.accuracy, report.stddev.accuracy);
  field([](const Metrics& m) { return m.precision; }, report.mean.precision, report.stddev.precision);
  field([](const Metrics& m) { return m.f1; }, report.mean.f1, report.stddev.f1);
  field([](const Metrics& m) { return m.auroc; }, report.mean.auroc, report.stddev.auroc);
}

MetricsReport cross_validate(std::span<const model::SubjectInput> subjects, const io::RunConfig& cfg,
                             const CvOptions& options) {
  cfg.validate();
  std::vector<int> labels;
  for (const auto& s : subjects) labels.push_back(s.label);
  const auto folds = stratified_folds(labels, cfg.folds, cfg.seed);

  MetricsReport report;
  report.config = cfg;
  report.folds.resize(folds.size());

  auto run_fold = [&](std::size_t k) {
    std::vector<model::SubjectInput> train, val;
    std::vector<bool> held(subjects.size(), false);
    for (auto i : folds[k]) held[i] = true;
    for (std::size_t i = 0; i < subjects.size(); ++i) (held[i] ? val : train).push_back(subjects[i]);

    auto trained = train_fold(train, cfg, mix(cfg.seed, 100 + k));
    const auto scores = model::predict(trained.params, val, cfg);
    std::vector<int> y;
    FoldResult fr;
    fr.fold = k;
    for (const auto& s : val) {
      y.push_back(s.label);
      fr.validation_ids.push_back(s.subject_id);
    }
    fr.metrics = metrics(scores, y);
    fr.loss_history = std::move(trained.loss_history);
    if (!options.checkpoint_dir.empty()) {
      std::filesystem::create_directories(options.checkpoint_dir);
      trained.params.save((std::filesystem::path(options.checkpoint_dir) / ("fold_" + std::to_string(k) + ".ckpt")).string());
    }
    report.folds[k] = std::move(fr);
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, folds.size()));
  if (jobs == 1) {
    for (std::size_t k = 0; k < folds.size(); ++k) run_fold(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t k; (k = next.fetch_add(1)) < folds.size();) {
          try {
            run_fold(k);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  summarize(report);
  return report;
}

nlohmann::ordered_json config_json(const io::RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["window_length"] = cfg.window_length;
  j["stride"] = cfg.stride;
  j["wea_layers"] = cfg.wea_layers;
  j["hgcn_blocks"] = cfg.hgcn_blocks;
  j["hidden"] = cfg.hidden;
  j["lambda"] = cfg.lambda;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["folds"] = cfg.folds;
  j["sparsify_q"] = cfg.sparsify_q;
  j["keep_ratio"] = cfg.keep_ratio;
  j["seed"] = cfg.seed;
  j["use_ace"] = cfg.use_ace;
  j["use_med"] = cfg.use_med;
  j["optimizer"] = {{"name", "adam"}, {"beta1", kAdamBeta1}, {"beta2", kAdamBeta2}, {"eps", kAdamEps}};
  return j;
}

nlohmann::ordered_json metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["f1"] = m.f1;
  j["auroc"] = m.auroc;
  j["precision_undefined"] = m.precision_undefined;
  j["auroc_undefined"] = m.auroc_undefined;
  return j;
}

nlohmann::ordered_json report_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["config"] = config_json(report.config);
  j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : report.folds) {
    nlohmann::ordered_json fj;
    fj["fold"] = f.fold;
    const auto mj = metrics_json(f.metrics);
    for (const auto& [k, v] : mj.items()) fj[k] = v;
    fj["loss_history"] = f.loss_history;
    fj["validation_ids"] = f.validation_ids;
    j["folds"].push_back(std::move(fj));
  }
  auto summary = [](const MetricSummary& s) {
    return nlohmann::ordered_json{{"accuracy", s.accuracy}, {"precision", s.precision}, {"f1", s.f1}, {"auroc", s.auroc}};
  };
  j["mean"] = summary(report.mean);
  j["std"] = summary(report.stddev);
  return j;
}

}  // namespace mcdgln::train
