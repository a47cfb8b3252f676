// milrisk: generate bag datasets, train instance classifiers from bag labels,
// run the verification experiments and evaluate checkpoints.
//
// Exit codes: 0 success, 2 usage/config/io, 3 contract violation,
// 4 numeric abort.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "milrisk/datagen.hpp"
#include "milrisk/errors.hpp"
#include "milrisk/experiments.hpp"
#include "milrisk/io.hpp"
#include "milrisk/metrics.hpp"
#include "milrisk/risk.hpp"
#include "milrisk/simd/kernels.hpp"
#include "milrisk/trainer.hpp"

namespace fs = std::filesystem;
using namespace milrisk;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitContract = 3;
constexpr int kExitNumeric = 4;

struct GlobalFlags {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
};

// Where bag data comes from when a command builds its own.
struct SourceFlags {
  std::string source = "gaussian";
  std::size_t pos_bags = 3000;
  std::size_t neg_bags = 3000;
  std::optional<std::size_t> test_pos_bags;
  std::optional<std::size_t> test_neg_bags;
  // gaussian
  std::size_t dim = 2;
  double separation = 2.0;
  double scale = 1.0;
  std::size_t pool_size = 10000;
  // mnist
  std::string images, labels, test_images, test_labels;
  std::string positive_digits = "0-4";
  // csv
  std::string csv, test_csv, label_column = "label";
  bool header = false;
  double split = 0.8;
};

struct TrainFlags {
  std::string train_path, test_path;
  std::string method = "imil";
  std::string loss = "mse";
  std::optional<double> pi0;
  double c = 10.0;
  std::size_t epochs = 200;
  std::size_t batch_bags = 0;
  double alpha = 3.0;
  double lr = 1e-4;
  double decay = 0.9;
  double eps = 1e-8;
  std::string hidden;
  std::string activation = "relu";
  std::uint64_t model_seed = 7;
};

void add_source_options(CLI::App* cmd, SourceFlags& s, bool with_source) {
  if (with_source) {
    cmd->add_option("--source", s.source, "gaussian|mnist|csv")
        ->check(CLI::IsMember({"gaussian", "mnist", "csv"}));
  }
  cmd->add_option("--pos-bags", s.pos_bags, "positive training bags");
  cmd->add_option("--neg-bags", s.neg_bags, "negative training bags");
  cmd->add_option("--test-pos-bags", s.test_pos_bags, "positive test bags (default: --pos-bags)");
  cmd->add_option("--test-neg-bags", s.test_neg_bags, "negative test bags (default: --neg-bags)");
  cmd->add_option("--dim", s.dim, "gaussian feature dimension");
  cmd->add_option("--separation", s.separation, "gaussian means at +/- separation on axis 0");
  cmd->add_option("--scale", s.scale, "gaussian per-coordinate standard deviation");
  cmd->add_option("--pool-size", s.pool_size, "instances per gaussian pool");
  if (with_source) {
    cmd->add_option("--images", s.images, "IDX training images");
    cmd->add_option("--labels", s.labels, "IDX training labels");
    cmd->add_option("--test-images", s.test_images, "IDX test images");
    cmd->add_option("--test-labels", s.test_labels, "IDX test labels");
    cmd->add_option("--positive-digits", s.positive_digits, "digits mapped to the positive class");
    cmd->add_option("--csv", s.csv, "training CSV");
    cmd->add_option("--test-csv", s.test_csv, "test CSV");
    cmd->add_option("--label-column", s.label_column, "label column name or index");
    cmd->add_flag("--header", s.header, "CSV files have a header row");
    cmd->add_option("--split", s.split, "train fraction when no separate test source is given");
  }
}

void add_train_options(CLI::App* cmd, TrainFlags& t, bool with_data) {
  if (with_data) {
    cmd->add_option("--train", t.train_path, "training bags (JSONL)");
    cmd->add_option("--test", t.test_path, "test bags (JSONL)");
  }
  cmd->add_option("--method", t.method, "sup|imil|bimil|milr")
      ->check(CLI::IsMember({"sup", "imil", "bimil", "milr"}));
  cmd->add_option("--loss", t.loss, "mse|ce")->check(CLI::IsMember({"mse", "ce"}));
  cmd->add_option("--pi0", t.pi0, "P(Y_x = 0) used by the estimator (default: measured/analytic)");
  cmd->add_option("--c", t.c, "bag-constraint penalty weight");
  cmd->add_option("--epochs", t.epochs, "training epochs");
  cmd->add_option("--batch-bags", t.batch_bags, "bags per batch, 0 = full batch");
  cmd->add_option("--alpha", t.alpha, "MILR softmax_alpha sharpness");
  cmd->add_option("--lr", t.lr, "RMSprop learning rate");
  cmd->add_option("--decay", t.decay, "RMSprop decay");
  cmd->add_option("--eps", t.eps, "RMSprop epsilon");
  cmd->add_option("--hidden", t.hidden, "hidden layer widths, e.g. 64,32 (empty = linear)");
  cmd->add_option("--activation", t.activation, "relu|softplus")
      ->check(CLI::IsMember({"relu", "softplus"}));
  cmd->add_option("--model-seed", t.model_seed, "parameter initialization seed");
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(part, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != part.size() || v == 0) throw ConfigError("bad size list '" + text + "'");
    out.push_back(v);
  }
  return out;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is required");
  if (!fs::exists(path)) throw IoError("file not found: '" + path + "'");
}

std::pair<Pools, Pools> build_pools(const SourceFlags& s, std::uint64_t seed) {
  if (s.source == "gaussian") {
    auto cfg = symmetric_gaussian_config(s.dim, s.separation, s.scale, s.pool_size, seed);
    Pools train = make_gaussian_pools(cfg);
    cfg.seed = derive_seed(seed, 77);
    Pools test = make_gaussian_pools(cfg);
    return {std::move(train), std::move(test)};
  }
  if (s.source == "mnist") {
    require_file(s.images, "--images");
    require_file(s.labels, "--labels");
    const auto digits = DigitPartition::parse(s.positive_digits);
    Pools train = load_idx(s.images, s.labels, digits);
    if (!s.test_images.empty() || !s.test_labels.empty()) {
      require_file(s.test_images, "--test-images");
      require_file(s.test_labels, "--test-labels");
      return {std::move(train), load_idx(s.test_images, s.test_labels, digits)};
    }
    return split_pools(train, s.split, seed);
  }
  require_file(s.csv, "--csv");
  Pools train = load_csv(s.csv, s.label_column, s.header);
  if (!s.test_csv.empty()) {
    require_file(s.test_csv, "--test-csv");
    return {std::move(train), load_csv(s.test_csv, s.label_column, s.header)};
  }
  return split_pools(train, s.split, seed);
}

std::pair<BagDataset, BagDataset> build_bag_sets(const SourceFlags& s, std::uint64_t seed) {
  const auto [train_pools, test_pools] = build_pools(s, seed);
  auto train = generate_bag_set(train_pools, s.pos_bags, s.neg_bags, derive_seed(seed, 1));
  auto test = generate_bag_set(test_pools, s.test_pos_bags.value_or(s.pos_bags),
                               s.test_neg_bags.value_or(s.neg_bags), derive_seed(seed, 2));
  return {std::move(train), std::move(test)};
}

TrainConfig make_train_config(const TrainFlags& t, std::size_t dim, double default_pi0,
                              std::uint64_t seed) {
  TrainConfig cfg;
  cfg.method = parse_method(t.method);
  cfg.estimator.loss = parse_loss(t.loss);
  cfg.estimator.pi0 = t.pi0.value_or(default_pi0);
  cfg.estimator.penalty_weight = t.c;
  cfg.epochs = t.epochs;
  cfg.batch_bags = t.batch_bags;
  cfg.alpha = t.alpha;
  cfg.seed = seed;
  cfg.optimizer = {t.lr, t.decay, t.eps};
  cfg.model_spec.input_dim = dim;
  cfg.model_spec.activation = parse_activation(t.activation);
  cfg.model_spec.seed = t.model_seed;
  if (!t.hidden.empty()) cfg.model_spec.hidden_dims = parse_sizes(t.hidden);
  return cfg;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Effective option values, defaults included, for the app and one subcommand.
Json options_json(const CLI::App& app, const CLI::App* sub) {
  Json out = Json::object();
  auto add = [&](const CLI::App& a, Json& into) {
    for (const CLI::Option* opt : a.get_options()) {
      if (opt->get_lnames().empty() && opt->get_positional() == false) continue;
      const std::string name =
          opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      if (opt->count() > 0) {
        const auto& r = opt->results();
        into[name] = r.size() == 1 ? Json(r.front()) : Json(r);
      } else {
        const auto d = opt->get_default_str();
        into[name] = d.empty() ? Json(nullptr) : Json(d);
      }
    }
  };
  add(app, out);
  if (sub) {
    Json inner = Json::object();
    add(*sub, inner);
    out[sub->get_name()] = std::move(inner);
  }
  return out;
}

double pi0_or_nan(const BagDataset& d) {
  return d.fully_labeled() ? true_pi0(d) : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------

int run_generate(const GlobalFlags& g, const SourceFlags& s, bool no_labels,
                 const Json& run_config) {
  const auto [train, test] = build_bag_sets(s, g.seed);
  const fs::path dir = g.out_dir;
  write_bags_jsonl(dir / "train.jsonl", train, !no_labels);
  write_bags_jsonl(dir / "test.jsonl", test, !no_labels);
  Json manifest{{"command", "generate"},
                {"created_at", timestamp()},
                {"run_config", run_config},
                {"source", s.source},
                {"seed", g.seed},
                {"train", Json{{"file", "train.jsonl"},
                               {"bags", train.bag_count()},
                               {"positive_bags", train.positive_bags()},
                               {"negative_bags", train.negative_bags()},
                               {"instances", train.instance_count()},
                               {"dim", train.dim()},
                               {"true_pi0", number_or_marker(pi0_or_nan(train))}}},
                {"test", Json{{"file", "test.jsonl"},
                              {"bags", test.bag_count()},
                              {"positive_bags", test.positive_bags()},
                              {"negative_bags", test.negative_bags()},
                              {"instances", test.instance_count()},
                              {"dim", test.dim()},
                              {"true_pi0", number_or_marker(pi0_or_nan(test))}}},
                {"analytic_pi0", analytic_pi0()},
                {"labels_exported", !no_labels}};
  write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << (dir / "train.jsonl").string() << " (" << train.bag_count()
            << " bags) and " << (dir / "test.jsonl").string() << " (" << test.bag_count()
            << " bags); true_pi0 train=" << pi0_or_nan(train) << "\n";
  return kExitOk;
}

int run_train(const GlobalFlags& g, const TrainFlags& t, const Json& run_config) {
  require_file(t.train_path, "--train");
  require_file(t.test_path, "--test");
  const auto train_set = read_bags_jsonl(t.train_path);
  const auto test_set = read_bags_jsonl(t.test_path);
  const double default_pi0 = train_set.fully_labeled() ? true_pi0(train_set) : analytic_pi0();
  const auto cfg = make_train_config(t, train_set.dim(), default_pi0, g.seed);

  const fs::path dir = g.out_dir;
  fs::create_directories(dir);
  const fs::path history_tmp = dir / "history.jsonl.tmp";
  std::ofstream history(history_tmp, std::ios::trunc);
  if (!history) throw IoError("cannot open '" + history_tmp.string() + "' for writing");
  const auto result = train(cfg, train_set, test_set, [&](const EpochRecord& rec) {
    history << to_json(rec).dump() << '\n';
    history.flush();
  });
  history.close();
  fs::rename(history_tmp, dir / "history.jsonl");

  save_params(dir / "model.bin", result.final_model.params());
  save_params(dir / "best_model.bin", result.best_model.params());
  write_text_atomic(dir / "model.json",
                    Json{{"spec", to_json(cfg.model_spec)}, {"best_epoch", result.best_epoch}}
                            .dump(2) + "\n");

  const auto& last = result.history.records.back();
  bool diverged = false;
  for (const auto& r : result.history.records) {
    diverged = diverged || !std::isfinite(r.train_ru) || r.train_ru < -1.0;
  }
  const auto& best = result.history.records[result.best_epoch ? result.best_epoch - 1 : 0];
  Json summary{{"command", "train"},
               {"run_config", run_config},
               {"config", to_json(cfg)},
               {"simd", std::string(simd::to_string(simd::active_isa()))},
               {"final", to_json(last)},
               {"best_epoch", result.best_epoch},
               {"best", to_json(best)},
               {"diverged", diverged}};
  if (auto b = result.history.best_test_instance_bayes()) {
    summary["min_test_instance_bayes"] = *b;
  }
  write_text_atomic(dir / "summary.json", summary.dump(2) + "\n");

  std::cout << "method=" << t.method << " loss=" << t.loss << " epochs=" << cfg.epochs
            << " test_Ru=" << last.test_ru << " test_bag_bayes=" << last.test_bag_bayes;
  if (last.test_instance_bayes) std::cout << " test_instance_bayes=" << *last.test_instance_bayes;
  std::cout << " best_epoch=" << result.best_epoch;
  if (best.test_instance_bayes) std::cout << " best_test_instance_bayes=" << *best.test_instance_bayes;
  if (diverged) std::cout << " diverged=true";
  std::cout << "\n";
  return kExitOk;
}

struct ExperimentFlags {
  std::string id;
  std::size_t replicates = 500;
  std::size_t oracle_samples = 1'000'000;
  std::size_t models = 50;
  double radius = 3.0;
  std::string sizes = "400,800,1600,3200,6400";
  std::string grid = "0.5:0.9:0.05";
};

int run_experiment(const GlobalFlags& g, ExperimentFlags e, SourceFlags s, const TrainFlags& t,
                   const Json& run_config) {
  ExperimentReport report;
  if (e.id == "unbiasedness" || e.id == "deviation") {
    auto pool_cfg = symmetric_gaussian_config(s.dim, s.separation, s.scale, s.pool_size, g.seed);
    const Pools pools = make_gaussian_pools(pool_cfg);
    EstimatorConfig est;
    est.loss = parse_loss(t.loss);
    est.pi0 = t.pi0.value_or(analytic_pi0());
    ModelSpec spec;
    spec.input_dim = s.dim;
    spec.seed = t.model_seed;
    if (!t.hidden.empty()) spec.hidden_dims = parse_sizes(t.hidden);
    spec.activation = parse_activation(t.activation);
    if (e.id == "unbiasedness") {
      UnbiasednessOptions opt;
      opt.replicates = e.replicates;
      opt.oracle_samples = e.oracle_samples;
      opt.seed = g.seed;
      report = unbiasedness_experiment(Model::init(spec), pools, {s.pos_bags, s.neg_bags}, est, opt);
    } else {
      DeviationOptions opt;
      opt.negative_instance_targets = parse_sizes(e.sizes);
      opt.replicates = e.replicates;
      opt.models = e.models;
      opt.radius = e.radius;
      opt.seed = g.seed;
      report = deviation_vs_m(spec, pools, est, opt);
    }
  } else if (e.id == "pi0-sweep" || e.id == "loss-study") {
    BagDataset train_set;
    BagDataset test_set;
    if (!t.train_path.empty() || !t.test_path.empty()) {
      require_file(t.train_path, "--train");
      require_file(t.test_path, "--test");
      train_set = read_bags_jsonl(t.train_path);
      test_set = read_bags_jsonl(t.test_path);
    } else {
      std::tie(train_set, test_set) = build_bag_sets(s, g.seed);
    }
    const double default_pi0 = train_set.fully_labeled() ? true_pi0(train_set) : analytic_pi0();
    const auto base = make_train_config(t, train_set.dim(), default_pi0, g.seed);
    if (e.id == "pi0-sweep") {
      report = pi0_sweep(train_set, test_set, parse_grid(e.grid), base);
    } else {
      report = loss_divergence_study(train_set, test_set, base);
    }
  } else {
    throw ConfigError("unknown experiment '" + e.id +
                      "' (expected unbiasedness|deviation|pi0-sweep|loss-study)");
  }
  report.config["run_config"] = run_config;
  report.write(g.out_dir);
  std::cout << report.summary.dump() << "\n";
  return kExitOk;
}

int run_eval(const GlobalFlags& g, const std::string& model_dir, const std::string& data_path,
             bool use_best, const std::string& loss_name, std::optional<double> pi0) {
  const fs::path dir = model_dir;
  require_file((dir / "model.json").string(), "--model-dir");
  require_file(data_path, "--data");
  std::ifstream spec_in(dir / "model.json");
  const auto meta = Json::parse(spec_in);
  const auto spec = model_spec_from_json(meta.at("spec"));
  const Model model(spec, load_params(dir / (use_best ? "best_model.bin" : "model.bin")));
  const auto data = read_bags_jsonl(data_path);
  const LossKind loss = parse_loss(loss_name);

  Json out{{"command", "eval"},
           {"data", data_path},
           {"checkpoint", use_best ? "best_model.bin" : "model.bin"},
           {"bags", data.bag_count()},
           {"test_bag_bayes", bag_bayes_risk(model, data, loss)}};
  const bool labeled = data.fully_labeled();
  if (labeled) {
    out["instance_bayes"] = instance_bayes_risk(model, data);
    out["supervised_risk"] = supervised_risk(model, loss, data);
    out["true_pi0"] = true_pi0(data);
  }
  if (data.negative_bags() > 0) {
    EstimatorConfig est;
    est.loss = loss;
    est.pi0 = pi0.value_or(labeled ? true_pi0(data) : analytic_pi0());
    out["pi0"] = est.pi0;
    out["unbiased_risk"] = to_json(unbiased_risk(model, est, data));
  }
  write_text_atomic(fs::path(g.out_dir) / "eval.json", out.dump(2) + "\n");
  std::cout << out.dump() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instance-level risk estimation for multiple instance learning"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "INI file; [section] names match subcommands");
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out-dir", g.out_dir, "output directory");

  SourceFlags gen_src;
  bool no_labels = false;
  auto* gen = app.add_subcommand("generate", "build train/test bag sets");
  add_source_options(gen, gen_src, true);
  gen->add_flag("--no-labels", no_labels, "omit instance labels from the exported bags");

  TrainFlags train_flags;
  auto* tr = app.add_subcommand("train", "train a model on bag data");
  add_train_options(tr, train_flags, true);

  ExperimentFlags exp_flags;
  SourceFlags exp_src;
  exp_src.pos_bags = 200;
  exp_src.neg_bags = 200;
  TrainFlags exp_train;
  auto* ex = app.add_subcommand("experiment", "run a verification experiment");
  ex->add_option("id", exp_flags.id, "unbiasedness|deviation|pi0-sweep|loss-study")->required();
  ex->add_option("--replicates", exp_flags.replicates, "regenerated datasets per point");
  ex->add_option("--oracle-samples", exp_flags.oracle_samples, "labeled oracle sample size");
  ex->add_option("--models", exp_flags.models, "random models per deviation point");
  ex->add_option("--radius", exp_flags.radius, "parameter-ball radius for random models");
  ex->add_option("--sizes", exp_flags.sizes, "negative-instance targets, comma separated");
  ex->add_option("--grid", exp_flags.grid, "pi0 grid lo:hi:step");
  add_source_options(ex, exp_src, false);
  add_train_options(ex, exp_train, true);

  std::string model_dir;
  std::string data_path;
  bool use_best = false;
  std::string eval_loss = "mse";
  std::optional<double> eval_pi0;
  auto* ev = app.add_subcommand("eval", "evaluate a trained checkpoint");
  ev->add_option("--model-dir", model_dir, "directory written by train")->required();
  ev->add_option("--data", data_path, "bags to evaluate (JSONL)")->required();
  ev->add_flag("--best", use_best, "use best_model.bin instead of model.bin");
  ev->add_option("--loss", eval_loss, "mse|ce")->check(CLI::IsMember({"mse", "ce"}));
  ev->add_option("--pi0", eval_pi0, "pi0 for the unbiased risk");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const CLI::App* chosen = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
  const Json run_config = options_json(app, chosen);
  try {
    if (*gen) return run_generate(g, gen_src, no_labels, run_config);
    if (*tr) return run_train(g, train_flags, run_config);
    if (*ex) return run_experiment(g, exp_flags, exp_src, exp_train, run_config);
    if (*ev) return run_eval(g, model_dir, data_path, use_best, eval_loss, eval_pi0);
  } catch (const NumericAbort& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ContractError& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return kExitContract;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
