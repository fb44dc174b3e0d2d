#include "ssg/experiment.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

#include "json_util.hpp"
#include "ssg/errors.hpp"
#include "ssg/random.hpp"

namespace ssg {

namespace {

using detail::Json;

constexpr int kManifestVersion = 1;
constexpr int kCsvVersion = 1;

struct Job {
  std::int64_t sweep_value = 0;
  int trial = 0;
};

GenConfig apply_sweep(GenConfig gen, const std::optional<Sweep>& sweep, std::int64_t value) {
  if (!sweep) return gen;
  const int v = static_cast<int>(value);
  switch (sweep->param) {
    case SweepParam::attacks_per_game: gen.attacks_per_game = v; break;
    case SweepParam::train_games: gen.train_games = v; break;
    case SweepParam::features_per_target: gen.features_per_target = v; break;
  }
  return gen;
}

template <class T>
void maybe(const Json& object, const char* key, T& target) {
  if (auto it = object.find(key); it != object.end()) {
    try {
      target = it->get<T>();
    } catch (const Json::exception& e) {
      throw ParseError(key, 0, e.what());
    }
  }
}

}  // namespace

std::string to_string(SweepParam param) {
  switch (param) {
    case SweepParam::attacks_per_game: return "attacks_per_game";
    case SweepParam::train_games: return "train_games";
    case SweepParam::features_per_target: return "features_per_target";
  }
  return "?";
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "attacks_per_game") return SweepParam::attacks_per_game;
  if (name == "train_games") return SweepParam::train_games;
  if (name == "features_per_target") return SweepParam::features_per_target;
  throw InvalidArgument("unknown sweep parameter '" + name + "'");
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw InvalidArgument("trials must be at least 1");
  if (workers < 1) throw InvalidArgument("workers must be at least 1");
  if (sweep) {
    if (sweep->values.empty()) throw InvalidArgument("sweep needs at least one value");
    for (int v : sweep->values) {
      if (v <= 0) throw InvalidArgument("sweep values must be positive");
    }
  }
  gen.validate();
  train.validate();
  solver.validate();
}

std::uint64_t trial_game_seed(std::uint64_t root, int trial) {
  return derive_seed(root, {static_cast<std::uint64_t>(trial)});
}

std::uint64_t trial_training_seed(std::uint64_t game_seed, std::int64_t sweep_tag) {
  return derive_seed(game_seed, {0x7472u, static_cast<std::uint64_t>(sweep_tag)});
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buffer, end);
}

std::vector<ResultRow> run_trial(const ExperimentSpec& spec, std::int64_t sweep_value, int trial) {
  const std::string param = spec.sweep ? to_string(spec.sweep->param) : "none";
  auto row = [&](const char* strategy) {
    ResultRow r;
    r.sweep_param = param;
    r.sweep_value = sweep_value;
    r.trial = trial;
    r.strategy = strategy;
    return r;
  };
  std::vector<ResultRow> rows{row("DF"), row("2S"), row("Unif")};
  try {
    GenConfig gen = apply_sweep(spec.gen, spec.sweep, sweep_value);
    gen.seed = trial_game_seed(spec.seed, trial);
    const GeneratedInstance instance = generate_instance(gen, spec.solver);
    const Dataset& data = instance.dataset;
    TrainConfig train = spec.train;
    train.seed = trial_training_seed(gen.seed, spec.sweep ? sweep_value : 0);

    using Clock = std::chrono::steady_clock;
    auto seconds_since = [](Clock::time_point start) {
      return std::chrono::duration<double>(Clock::now() - start).count();
    };

    auto start = Clock::now();
    const TrainResult df = train_decision_focused(data, train, spec.solver);
    const double df_seconds = seconds_since(start);
    start = Clock::now();
    const TrainResult two_stage = train_two_stage(data, train);
    const double two_stage_seconds = seconds_since(start);

    const Evaluation df_eval = evaluate(df.model, data.test, data.w_coverage, spec.solver);
    const Evaluation ts_eval = evaluate(two_stage.model, data.test, data.w_coverage, spec.solver);
    const Evaluation unif_eval = evaluate_uniform(data.test, data.w_coverage, spec.solver);

    auto fill = [&](ResultRow& r, const Evaluation& e, double seconds, int train_failures) {
      r.mean_test_deu = e.mean;
      r.median_test_deu = e.median;
      if (spec.record_timings) r.train_seconds = seconds;
      r.solver_failures = e.solver_failures + train_failures;
    };
    fill(rows[0], df_eval, df_seconds, df.solver_failures + df.skipped_updates);
    fill(rows[1], ts_eval, two_stage_seconds, 0);
    fill(rows[2], unif_eval, 0.0, 0);
  } catch (const std::exception& e) {
    for (auto& r : rows) {
      r.mean_test_deu = std::nan("");
      r.median_test_deu = std::nan("");
      r.error = e.what();
    }
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<Job> jobs;
  const std::vector<int> values = spec.sweep ? spec.sweep->values : std::vector<int>{0};
  for (int v : values) {
    for (int t = 0; t < spec.trials; ++t) jobs.push_back({v, t});
  }

  std::vector<std::vector<ResultRow>> outputs(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      outputs[i] = run_trial(spec, jobs[i].sweep_value, jobs[i].trial);
    }
  };
  const int thread_count = std::min<int>(spec.workers, static_cast<int>(jobs.size()));
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  ExperimentResult result;
  for (auto& rows : outputs) {
    if (!rows.front().error.empty()) ++result.failed_trials;
    for (auto& r : rows) result.rows.push_back(std::move(r));
  }

  // Summary: medians across trials of the per-trial mean DEU minus Unif.
  std::ostringstream out;
  out << "median(DEU - Unif) over trials\n";
  for (int v : values) {
    std::map<std::string, std::vector<double>> gaps;
    std::vector<std::string> paired;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].sweep_value != v || !outputs[i].front().error.empty()) continue;
      const auto& rows = outputs[i];
      const double unif = rows[2].mean_test_deu;
      gaps["DF"].push_back(rows[0].mean_test_deu - unif);
      gaps["2S"].push_back(rows[1].mean_test_deu - unif);
      paired.push_back(format_double(rows[0].mean_test_deu - rows[1].mean_test_deu));
    }
    out << "  " << (spec.sweep ? to_string(spec.sweep->param) + "=" + std::to_string(v) : "default")
        << ": DF " << format_double(median(gaps["DF"])) << ", 2S "
        << format_double(median(gaps["2S"])) << "\n    per-trial DF - 2S:";
    for (const auto& p : paired) out << ' ' << p;
    out << '\n';
  }
  if (result.failed_trials > 0) out << result.failed_trials << " trial(s) failed\n";
  result.summary = out.str();
  return result;
}

std::string results_to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.sweep_param << ',' << r.sweep_value << ',' << r.trial << ',' << r.strategy << ','
        << format_double(r.mean_test_deu) << ',' << format_double(r.median_test_deu) << ','
        << (r.train_seconds ? format_double(*r.train_seconds) : "NA") << ','
        << (r.error.empty() ? std::to_string(r.solver_failures) : "NA") << '\n';
  }
  return out.str();
}

std::string spec_to_json(const ExperimentSpec& spec) {
  Json j;
  j["seed"] = spec.seed;
  j["trials"] = spec.trials;
  j["workers"] = spec.workers;
  j["output"] = spec.output_path.string();
  j["record_timings"] = spec.record_timings;
  if (spec.sweep) {
    j["sweep"] = {{"param", to_string(spec.sweep->param)}, {"values", spec.sweep->values}};
  } else {
    j["sweep"] = nullptr;
  }
  const GenConfig& g = spec.gen;
  j["gen"] = {{"target_count", g.target_count},
              {"features_per_target", g.features_per_target},
              {"train_games", g.train_games},
              {"test_games", g.test_games},
              {"attacks_per_game", g.attacks_per_game},
              {"budget", g.resolved_budget()},
              {"w_coverage", g.w_coverage},
              {"value_net_hidden", g.value_net_hidden},
              {"validation_fraction", g.validation_fraction}};
  const TrainConfig& t = spec.train;
  j["train"] = {{"epochs", t.epochs},
                {"learning_rate", t.learning_rate},
                {"early_stopping_patience", t.early_stopping_patience},
                {"dropout_rate", t.dropout_rate},
                {"hidden_dim", t.hidden_dim}};
  j["train"]["smoothing_alpha"] = t.smoothing_alpha ? Json(*t.smoothing_alpha) : Json(nullptr);
  const SolverConfig& s = spec.solver;
  j["solver"] = {{"restarts", s.restarts},
                 {"max_iterations", s.max_iterations},
                 {"stationarity_tolerance", s.stationarity_tolerance},
                 {"initial_step", s.initial_step},
                 {"backtracking_factor", s.backtracking_factor},
                 {"min_step", s.min_step},
                 {"armijo_constant", s.armijo_constant},
                 {"polish_iterations", s.polish_iterations},
                 {"activity_tolerance", s.activity_tolerance},
                 {"seed", s.seed}};
  return j.dump(2) + "\n";
}

void apply_config_json(ExperimentSpec& spec, const std::string& text) {
  const Json j = detail::parse_json(text);
  if (!j.is_object()) throw ParseError("config", 0, "expected an object");
  maybe(j, "seed", spec.seed);
  maybe(j, "trials", spec.trials);
  maybe(j, "workers", spec.workers);
  maybe(j, "record_timings", spec.record_timings);
  if (auto it = j.find("output"); it != j.end()) spec.output_path = it->get<std::string>();
  if (auto it = j.find("sweep"); it != j.end()) {
    if (it->is_null()) {
      spec.sweep.reset();
    } else {
      Sweep sweep;
      sweep.param = parse_sweep_param(detail::require(*it, "param", "sweep").get<std::string>());
      sweep.values = detail::require(*it, "values", "sweep").get<std::vector<int>>();
      spec.sweep = sweep;
    }
  }
  if (auto it = j.find("gen"); it != j.end()) {
    GenConfig& g = spec.gen;
    maybe(*it, "target_count", g.target_count);
    maybe(*it, "features_per_target", g.features_per_target);
    maybe(*it, "train_games", g.train_games);
    maybe(*it, "test_games", g.test_games);
    maybe(*it, "attacks_per_game", g.attacks_per_game);
    if (auto b = it->find("budget"); b != it->end()) {
      if (b->is_null()) {
        g.budget.reset();
      } else {
        g.budget = b->get<double>();
      }
    }
    maybe(*it, "w_coverage", g.w_coverage);
    maybe(*it, "value_net_hidden", g.value_net_hidden);
    maybe(*it, "validation_fraction", g.validation_fraction);
  }
  if (auto it = j.find("train"); it != j.end()) {
    TrainConfig& t = spec.train;
    maybe(*it, "epochs", t.epochs);
    maybe(*it, "learning_rate", t.learning_rate);
    maybe(*it, "early_stopping_patience", t.early_stopping_patience);
    maybe(*it, "dropout_rate", t.dropout_rate);
    maybe(*it, "hidden_dim", t.hidden_dim);
    if (auto a = it->find("smoothing_alpha"); a != it->end()) {
      if (a->is_null()) {
        t.smoothing_alpha.reset();
      } else {
        t.smoothing_alpha = a->get<double>();
      }
    }
  }
  if (auto it = j.find("solver"); it != j.end()) {
    SolverConfig& s = spec.solver;
    maybe(*it, "restarts", s.restarts);
    maybe(*it, "max_iterations", s.max_iterations);
    maybe(*it, "stationarity_tolerance", s.stationarity_tolerance);
    maybe(*it, "initial_step", s.initial_step);
    maybe(*it, "backtracking_factor", s.backtracking_factor);
    maybe(*it, "min_step", s.min_step);
    maybe(*it, "armijo_constant", s.armijo_constant);
    maybe(*it, "polish_iterations", s.polish_iterations);
    maybe(*it, "activity_tolerance", s.activity_tolerance);
    maybe(*it, "seed", s.seed);
  }
}

std::string manifest_json(const ExperimentSpec& spec) {
  Json j;
  j["manifest_version"] = kManifestVersion;
  j["schema_versions"] = {{"games", 1}, {"model", 1}, {"results_csv", kCsvVersion}};
  j["csv_columns"] = {"sweep_param", "sweep_value",   "trial",          "strategy",
                      "mean_test_deu", "median_test_deu", "train_seconds", "solver_failures"};
  j["spec"] = Json::parse(spec_to_json(spec));
  return j.dump(2) + "\n";
}

void write_results(const ExperimentSpec& spec, const ExperimentResult& result) {
  detail::write_file(spec.output_path, results_to_csv(result.rows));
  std::filesystem::path manifest = spec.output_path;
  manifest += ".manifest.json";
  detail::write_file(manifest, manifest_json(spec));
}

}  // namespace ssg
