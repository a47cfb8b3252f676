#include "milrisk/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "milrisk/errors.hpp"

namespace milrisk {

Json number_or_marker(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    if (s == "nan") return std::nan("");
  }
  throw FormatError("expected a number, got " + j.dump());
}

Json to_json(const RiskBreakdown& r) {
  return Json{{"total", number_or_marker(r.total)},
              {"term_all_pos", number_or_marker(r.term_all_pos)},
              {"term_neg_correction", number_or_marker(r.term_neg_correction)},
              {"penalty", number_or_marker(r.penalty)}};
}

Json to_json(const ModelSpec& spec) {
  return Json{{"input_dim", spec.input_dim},
              {"hidden_dims", spec.hidden_dims},
              {"activation", std::string(to_string(spec.activation))},
              {"seed", spec.seed}};
}

ModelSpec model_spec_from_json(const Json& j) {
  try {
    ModelSpec spec;
    spec.input_dim = j.at("input_dim").get<std::size_t>();
    spec.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
    spec.activation = parse_activation(j.at("activation").get<std::string>());
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.validate();
    return spec;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad model spec: ") + e.what());
  }
}

Json to_json(const EpochRecord& rec) {
  Json j{{"epoch", rec.epoch},
         {"train_objective", number_or_marker(rec.train_objective)},
         {"train_Ru", number_or_marker(rec.train_ru)},
         {"test_Ru", number_or_marker(rec.test_ru)},
         {"test_objective", number_or_marker(rec.test_objective)}};
  j["train_instance_bayes"] =
      rec.train_instance_bayes ? number_or_marker(*rec.train_instance_bayes) : Json(nullptr);
  j["test_instance_bayes"] =
      rec.test_instance_bayes ? number_or_marker(*rec.test_instance_bayes) : Json(nullptr);
  j["test_bag_bayes"] = number_or_marker(rec.test_bag_bayes);
  j["objective_label_reads"] = rec.objective_label_reads;
  return j;
}

Json to_json(const TrainConfig& c) {
  return Json{{"method", std::string(to_string(c.method))},
              {"loss", std::string(to_string(c.estimator.loss))},
              {"pi0", c.estimator.pi0},
              {"c", c.estimator.penalty_weight},
              {"epochs", c.epochs},
              {"batch_bags", c.batch_bags},
              {"alpha", c.alpha},
              {"seed", c.seed},
              {"learning_rate", c.optimizer.learning_rate},
              {"rmsprop_decay", c.optimizer.decay},
              {"rmsprop_epsilon", c.optimizer.epsilon},
              {"model", to_json(c.model_spec)}};
}

Json bag_to_json(const Bag& bag, bool with_labels) {
  Json instances = Json::array();
  Json labels = Json::array();
  bool all_labeled = with_labels;
  for (const auto& inst : bag.instances) {
    instances.push_back(std::vector<double>(inst.features().begin(), inst.features().end()));
    if (all_labeled) {
      const auto y = inst.true_label_or_none();
      if (y) {
        labels.push_back(*y);
      } else {
        all_labeled = false;
      }
    }
  }
  Json j{{"label", bag.label}, {"instances", std::move(instances)}};
  if (all_labeled) j["true_labels"] = std::move(labels);
  return j;
}

Bag bag_from_json(const Json& j) {
  try {
    Bag bag;
    bag.label = j.at("label").get<int>();
    const auto& instances = j.at("instances");
    const Json* labels = j.contains("true_labels") ? &j.at("true_labels") : nullptr;
    if (labels && labels->size() != instances.size()) {
      throw FormatError("true_labels length does not match instance count");
    }
    for (std::size_t i = 0; i < instances.size(); ++i) {
      std::optional<int> y;
      if (labels) y = (*labels)[i].get<int>();
      bag.instances.emplace_back(instances[i].get<std::vector<double>>(), y);
    }
    return bag;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad bag record: ") + e.what());
  }
}

void write_bags_jsonl(const std::filesystem::path& path, const BagDataset& data,
                      bool with_labels) {
  std::string out;
  for (const auto& b : data.bags()) {
    out += bag_to_json(b, with_labels).dump();
    out += '\n';
  }
  write_text_atomic(path, out);
}

BagDataset read_bags_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<Bag> bags;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      bags.push_back(bag_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) + ": " +
                        e.what());
    } catch (const FormatError& e) {
      throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return BagDataset(std::move(bags));
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw IoError("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string to_csv(const std::vector<std::string>& columns,
                   const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  char buf[64];
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace milrisk
