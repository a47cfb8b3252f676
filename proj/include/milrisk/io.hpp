#pragma once

// On-disk formats:
//   bags      JSON lines, one bag per line:
//             {"label":0|1,"instances":[[...],...],"true_labels":[0,1,...]}
//             true_labels is omitted when the labels are unknown.
//   history   JSON lines, one EpochRecord per line.
//   reports   JSON documents, plus CSV tables.
// Non-finite floats are written as the strings "inf", "-inf" and "nan".

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "milrisk/data.hpp"
#include "milrisk/model.hpp"
#include "milrisk/risk.hpp"
#include "milrisk/trainer.hpp"

namespace milrisk {

using Json = nlohmann::ordered_json;

Json number_or_marker(double v);
double number_from_json(const Json& j);

Json to_json(const RiskBreakdown& r);
Json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const Json& j);
Json to_json(const EpochRecord& rec);
Json to_json(const TrainConfig& config);

// `with_labels` false drops true_labels (label-free export).
Json bag_to_json(const Bag& bag, bool with_labels = true);
Bag bag_from_json(const Json& j);

void write_bags_jsonl(const std::filesystem::path& path, const BagDataset& data,
                      bool with_labels = true);
BagDataset read_bags_jsonl(const std::filesystem::path& path);

// Write to a temp file beside `path`, then rename over it.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

std::string to_csv(const std::vector<std::string>& columns,
                   const std::vector<std::vector<double>>& rows);

}  // namespace milrisk
