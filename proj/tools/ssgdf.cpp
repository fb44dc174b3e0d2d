// ssgdf: generate games, train value models, evaluate them and run sweeps.
//
// Exit codes: 0 success, 1 usage or input error, 2 verification failure,
// 3 some trials failed.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "ssg/datagen.hpp"
#include "ssg/errors.hpp"
#include "ssg/experiment.hpp"
#include "ssg/learning.hpp"
#include "ssg/model.hpp"
#include "ssg/theory.hpp"

namespace {

using namespace ssg;

constexpr int kUsageError = 1;
constexpr int kVerificationFailure = 2;
constexpr int kPartialFailure = 3;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

// Flag values land here first; only flags given on the command line are
// copied onto the ExperimentSpec, so defaults stay in one place.
struct Flags {
  std::optional<int> targets, features, train_games, test_games, attacks, value_net_hidden;
  std::optional<double> budget, w, validation_fraction;
  std::optional<int> epochs, patience, hidden;
  std::optional<double> lr, dropout, smoothing_alpha;
  std::optional<int> restarts, max_iterations;
  std::optional<std::uint64_t> solver_seed;
  std::optional<int> trials, workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> sweep_param, output;
  std::vector<int> sweep_values;
  bool record_timings = false;
  std::string config;
};

void add_gen_flags(CLI::App* app, Flags& f) {
  app->add_option("--targets", f.targets, "number of targets |T|");
  app->add_option("--features", f.features, "features per target");
  app->add_option("--train-games", f.train_games, "training games, validation included");
  app->add_option("--test-games", f.test_games, "test games");
  app->add_option("--attacks", f.attacks, "observed attacks per training game");
  app->add_option("--budget", f.budget, "defender resources (default 3|T|/8)");
  app->add_option("--w", f.w, "SUQR coverage weight, negative");
  app->add_option("--value-net-hidden", f.value_net_hidden, "hidden units of the ground-truth nets");
  app->add_option("--validation-fraction", f.validation_fraction, "share of training games held out");
}

void add_train_flags(CLI::App* app, Flags& f) {
  app->add_option("--epochs", f.epochs);
  app->add_option("--lr", f.lr, "Adam learning rate");
  app->add_option("--patience", f.patience, "early stopping patience in epochs");
  app->add_option("--dropout", f.dropout, "dropout rate for two-stage training");
  app->add_option("--smoothing-alpha", f.smoothing_alpha, "additive smoothing (default 1/|T|)");
  app->add_option("--hidden", f.hidden, "hidden units of the learned model");
}

void add_solver_flags(CLI::App* app, Flags& f) {
  app->add_option("--restarts", f.restarts, "solver restarts");
  app->add_option("--max-iterations", f.max_iterations, "ascent iterations per restart");
  app->add_option("--solver-seed", f.solver_seed, "seed for solver restarts");
}

void add_config_flag(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config; its values override flags")
      ->check(CLI::ExistingFile);
}

template <class T, class U>
void set_if(const std::optional<U>& value, T& target) {
  if (value) target = *value;
}

ExperimentSpec build_spec(const Flags& f) {
  ExperimentSpec spec;
  set_if(f.targets, spec.gen.target_count);
  set_if(f.features, spec.gen.features_per_target);
  set_if(f.train_games, spec.gen.train_games);
  set_if(f.test_games, spec.gen.test_games);
  set_if(f.attacks, spec.gen.attacks_per_game);
  if (f.budget) spec.gen.budget = *f.budget;
  set_if(f.w, spec.gen.w_coverage);
  set_if(f.value_net_hidden, spec.gen.value_net_hidden);
  set_if(f.validation_fraction, spec.gen.validation_fraction);
  set_if(f.epochs, spec.train.epochs);
  set_if(f.lr, spec.train.learning_rate);
  set_if(f.patience, spec.train.early_stopping_patience);
  set_if(f.dropout, spec.train.dropout_rate);
  if (f.smoothing_alpha) spec.train.smoothing_alpha = *f.smoothing_alpha;
  set_if(f.hidden, spec.train.hidden_dim);
  set_if(f.restarts, spec.solver.restarts);
  set_if(f.max_iterations, spec.solver.max_iterations);
  set_if(f.solver_seed, spec.solver.seed);
  set_if(f.trials, spec.trials);
  set_if(f.workers, spec.workers);
  set_if(f.seed, spec.seed);
  if (f.output) spec.output_path = *f.output;
  if (f.sweep_param) spec.sweep = Sweep{parse_sweep_param(*f.sweep_param), f.sweep_values};
  if (f.record_timings) spec.record_timings = true;
  if (!f.config.empty()) apply_config_json(spec, read_text(f.config));
  return spec;
}

int cmd_gen(const Flags& f, const std::string& out, std::optional<int> trial) {
  ExperimentSpec spec = build_spec(f);
  spec.validate();
  GenConfig gen = spec.gen;
  gen.seed = trial ? trial_game_seed(spec.seed, *trial) : spec.seed;
  const GeneratedInstance instance = generate_instance(gen, spec.solver);
  save_games(instance.dataset, out);
  std::cout << "wrote " << out << " (" << instance.dataset.train.size() << " train, "
            << instance.dataset.validation.size() << " validation, "
            << instance.dataset.test.size() << " test games, seed " << gen.seed << ")\n";
  return 0;
}

int cmd_train(const Flags& f, const std::string& games, const std::string& method,
              const std::string& out) {
  ExperimentSpec spec = build_spec(f);
  spec.train.validate();
  spec.solver.validate();
  const Dataset data = load_games(games);
  data.validate();
  TrainConfig train = spec.train;
  if (f.seed) {
    train.seed = *f.seed;
  } else if (data.generator) {
    // Same seed the sweep harness uses for an unswept trial.
    train.seed = trial_training_seed(data.generator->seed, 0);
  }
  const TrainResult result = method == "df" ? train_decision_focused(data, train, spec.solver)
                                            : train_two_stage(data, train);
  save_model(result.model, out);
  std::cout << "wrote " << out << " (best epoch " << result.best_epoch << " of "
            << result.history.size() - 1 << ", solver failures " << result.solver_failures
            << ", skipped updates " << result.skipped_updates << ")\n";
  return 0;
}

int cmd_eval(const Flags& f, const std::string& games, const std::optional<std::string>& model_path) {
  ExperimentSpec spec = build_spec(f);
  spec.solver.validate();
  const Dataset data = load_games(games);
  data.validate();
  const Evaluation e = model_path ? evaluate(load_model(*model_path), data.test, data.w_coverage, spec.solver)
                                  : evaluate_uniform(data.test, data.w_coverage, spec.solver);
  std::cout << "games " << e.deu.size() << "\nmean_test_deu " << format_double(e.mean)
            << "\nmedian_test_deu " << format_double(e.median) << "\nsolver_failures "
            << e.solver_failures << '\n';
  return 0;
}

int cmd_run(const Flags& f) {
  ExperimentSpec spec = build_spec(f);
  spec.validate();
  const ExperimentResult result = run_experiment(spec);
  write_results(spec, result);
  std::cout << result.summary;
  std::cout << "wrote " << spec.output_path.string() << '\n';
  for (const auto& row : result.rows) {
    if (!row.error.empty() && row.strategy == "DF") {
      std::cerr << "trial " << row.trial << " (sweep value " << row.sweep_value
                << ") failed: " << row.error << '\n';
    }
  }
  return result.failed_trials > 0 ? kPartialFailure : 0;
}

int cmd_verify(const theory::TheoryConfig& config) {
  const theory::TheoryReport report = theory::verify_theory(config);
  std::cout << report.to_text();
  return report.passed() ? 0 : kVerificationFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-focused learning of attacker models in security games"};
  app.require_subcommand(1);
  Flags flags;

  std::string out;
  std::optional<int> trial;
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--out", out, "output games file")->required();
  gen->add_option("--seed", flags.seed, "root seed");
  gen->add_option("--trial", trial, "derive the game seed as the sweep harness does for this trial");
  add_gen_flags(gen, flags);
  add_solver_flags(gen, flags);
  add_config_flag(gen, flags);

  std::string games;
  std::string method = "2s";
  auto* train = app.add_subcommand("train", "train a value model on a games file");
  train->add_option("--games", games, "games file")->required()->check(CLI::ExistingFile);
  train->add_option("--method", method, "2s or df")->check(CLI::IsMember({"2s", "df"}));
  train->add_option("--out", out, "output model file")->required();
  train->add_option("--seed", flags.seed, "training seed (default derived from the games file)");
  add_train_flags(train, flags);
  add_solver_flags(train, flags);
  add_config_flag(train, flags);

  std::optional<std::string> model_path;
  bool uniform = false;
  auto* eval = app.add_subcommand("eval", "mean and median test DEU of a model or of Unif");
  eval->add_option("--games", games, "games file")->required()->check(CLI::ExistingFile);
  auto* model_opt = eval->add_option("--model", model_path, "model file")->check(CLI::ExistingFile);
  auto* uniform_opt = eval->add_flag("--uniform", uniform, "plan against equal attractiveness");
  model_opt->excludes(uniform_opt);
  add_solver_flags(eval, flags);
  add_config_flag(eval, flags);

  auto* run = app.add_subcommand("run", "run trials (optionally a sweep) and write a results CSV");
  run->add_option("--seed", flags.seed, "root seed");
  run->add_option("--trials", flags.trials, "trials per sweep value");
  run->add_option("--workers", flags.workers, "concurrent trials");
  run->add_option("--output", flags.output, "results CSV path");
  run->add_option("--sweep-param", flags.sweep_param,
                  "attacks_per_game, train_games or features_per_target");
  run->add_option("--sweep-values", flags.sweep_values, "values of the swept parameter (space or comma separated)")
      ->delimiter(',');
  run->add_flag("--record-timings", flags.record_timings, "record training wall time in the CSV");
  add_gen_flags(run, flags);
  add_train_flags(run, flags);
  add_solver_flags(run, flags);
  add_config_flag(run, flags);

  theory::TheoryConfig theory_config;
  auto* verify = app.add_subcommand("verify-theory", "check the two-target results numerically");
  verify->add_option("--seed", theory_config.seed);
  verify->add_option("--theorem1-cases", theory_config.theorem1_cases);
  verify->add_option("--theorem2-cases", theory_config.theorem2_cases);
  verify->add_option("--resolution", theory_config.grid_resolution, "coverage grid step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen) return cmd_gen(flags, out, trial);
    if (*train) return cmd_train(flags, games, method, out);
    if (*eval) {
      if (!model_path && !uniform) throw InvalidArgument("eval needs --model or --uniform");
      return cmd_eval(flags, games, model_path);
    }
    if (*run) {
      if (flags.sweep_param.has_value() != !flags.sweep_values.empty()) {
        throw InvalidArgument("--sweep-param and --sweep-values go together");
      }
      return cmd_run(flags);
    }
    if (*verify) return cmd_verify(theory_config);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}
