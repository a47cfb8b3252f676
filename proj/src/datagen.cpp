#include "milrisk/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "milrisk/errors.hpp"

namespace milrisk {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t at,
                        const std::filesystem::path& path) {
  if (at + 4 > bytes.size()) throw FormatError("'" + path.string() + "': truncated IDX header");
  return (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
         (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

const std::vector<double>& pick(const InstancePool& pool, Rng& rng) {
  std::uniform_int_distribution<std::size_t> idx(0, pool.size() - 1);
  return pool.features[idx(rng)];
}

}  // namespace

std::size_t Pools::dim() const {
  if (!positive.empty()) return positive.features.front().size();
  if (!negative.empty()) return negative.features.front().size();
  return 0;
}

void GaussianPoolConfig::validate() const {
  if (dim == 0) throw ConfigError("gaussian pools: dim must be >= 1");
  if (pos_mean.size() != dim || neg_mean.size() != dim) {
    throw ConfigError("gaussian pools: means must have length dim");
  }
  if (pos_mean == neg_mean) throw ConfigError("gaussian pools: means must differ");
  // scale == 0 is accepted as the degenerate (point-mass) limit.
  if (!(covariance_scale >= 0.0) || !std::isfinite(covariance_scale)) {
    throw ConfigError("gaussian pools: covariance scale must be finite and non-negative");
  }
  if (pos_pool_size == 0 || neg_pool_size == 0) {
    throw ConfigError("gaussian pools: pool sizes must be positive");
  }
}

GaussianPoolConfig symmetric_gaussian_config(std::size_t dim, double separation, double scale,
                                             std::size_t pool_size, std::uint64_t seed) {
  GaussianPoolConfig c;
  c.dim = dim;
  c.pos_mean.assign(dim, 0.0);
  c.neg_mean.assign(dim, 0.0);
  c.pos_mean[0] = separation;
  c.neg_mean[0] = -separation;
  c.covariance_scale = scale;
  c.pos_pool_size = pool_size;
  c.neg_pool_size = pool_size;
  c.seed = seed;
  return c;
}

Pools make_gaussian_pools(const GaussianPoolConfig& config) {
  config.validate();
  auto draw = [&](const std::vector<double>& mean, std::size_t count, std::uint64_t seed,
                  int label) {
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    InstancePool pool{{}, label};
    pool.features.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<double> x(mean);
      for (double& v : x) v += config.covariance_scale * z(rng);
      pool.features.push_back(std::move(x));
    }
    return pool;
  };
  Pools pools;
  pools.positive = draw(config.pos_mean, config.pos_pool_size, derive_seed(config.seed, 0), 1);
  pools.negative = draw(config.neg_mean, config.neg_pool_size, derive_seed(config.seed, 1), 0);
  return pools;
}

Bag sample_negative_bag(const InstancePool& negatives, Rng& rng) {
  if (negatives.empty()) throw ContractError("sample_negative_bag: empty negative pool");
  std::uniform_int_distribution<int> size(1, kMaxBagSize);
  const int n = size(rng);
  Bag bag;
  bag.label = 0;
  bag.instances.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) bag.instances.emplace_back(pick(negatives, rng), 0);
  return bag;
}

Bag sample_positive_bag(const InstancePool& positives, const InstancePool& negatives, Rng& rng) {
  if (positives.empty() || negatives.empty()) {
    throw ContractError("sample_positive_bag: both pools must be non-empty");
  }
  std::uniform_int_distribution<int> size(1, kMaxBagSize);
  const int n = size(rng);
  std::uniform_int_distribution<int> pos_count(1, n);
  const int k = pos_count(rng);
  Bag bag;
  bag.label = 1;
  bag.instances.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < k; ++i) bag.instances.emplace_back(pick(positives, rng), 1);
  for (int i = k; i < n; ++i) bag.instances.emplace_back(pick(negatives, rng), 0);
  std::shuffle(bag.instances.begin(), bag.instances.end(), rng);
  return bag;
}

BagDataset generate_bag_set(const Pools& pools, std::size_t n_pos_bags, std::size_t n_neg_bags,
                            std::uint64_t seed) {
  if (n_pos_bags == 0 && n_neg_bags == 0) {
    throw ConfigError("generate_bag_set: need at least one bag");
  }
  Rng rng(seed);
  std::vector<Bag> bags;
  bags.reserve(n_pos_bags + n_neg_bags);
  for (std::size_t i = 0; i < n_neg_bags; ++i) bags.push_back(sample_negative_bag(pools.negative, rng));
  for (std::size_t i = 0; i < n_pos_bags; ++i) {
    bags.push_back(sample_positive_bag(pools.positive, pools.negative, rng));
  }
  return BagDataset(std::move(bags));
}

double true_pi0(const BagDataset& data) {
  if (data.instance_count() == 0) throw ContractError("true_pi0: empty dataset");
  std::size_t negatives = 0;
  for (const auto& b : data.bags()) {
    for (const auto& inst : b.instances) negatives += inst.true_label() == 0 ? 1 : 0;
  }
  return static_cast<double>(negatives) / static_cast<double>(data.instance_count());
}

double analytic_pi0(int max_bag_size) {
  const double mean_size = (max_bag_size + 1) / 2.0;
  const double mean_pos = (mean_size + 1.0) / 2.0;
  return (mean_size + (mean_size - mean_pos)) / (2.0 * mean_size);
}

std::pair<Pools, Pools> split_pools(const Pools& pools, double first_fraction,
                                    std::uint64_t seed) {
  if (!(first_fraction > 0.0 && first_fraction < 1.0)) {
    throw ConfigError("split fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  auto split = [&](const InstancePool& pool, InstancePool& a, InstancePool& b) {
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto cut = static_cast<std::size_t>(std::llround(first_fraction * pool.size()));
    a.label = b.label = pool.label;
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i < cut ? a : b).features.push_back(pool.features[order[i]]);
    }
  };
  std::pair<Pools, Pools> out;
  split(pools.positive, out.first.positive, out.second.positive);
  split(pools.negative, out.first.negative, out.second.negative);
  return out;
}

DigitPartition DigitPartition::parse(const std::string& text) {
  DigitPartition p;
  std::istringstream ss(text);
  std::string part;
  bool any = false;
  auto digit = [&](const std::string& s) {
    if (s.size() != 1 || s[0] < '0' || s[0] > '9') {
      throw ConfigError("bad digit set '" + text + "' (expected e.g. 0-4 or 0,2,5)");
    }
    return s[0] - '0';
  };
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    const auto dash = part.find('-');
    int lo = 0;
    int hi = 0;
    if (dash == std::string::npos) {
      lo = hi = digit(part);
    } else {
      lo = digit(trim(part.substr(0, dash)));
      hi = digit(trim(part.substr(dash + 1)));
    }
    if (lo > hi) throw ConfigError("bad digit range in '" + text + "'");
    for (int d = lo; d <= hi; ++d) p.positive[static_cast<std::size_t>(d)] = true;
    any = true;
  }
  if (!any) throw ConfigError("empty digit set");
  return p;
}

Pools load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
               const DigitPartition& partition) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);
  if (read_be32(img, 0, images) != 0x00000803) {
    throw FormatError("'" + images.string() + "': bad IDX image magic");
  }
  if (read_be32(lab, 0, labels) != 0x00000801) {
    throw FormatError("'" + labels.string() + "': bad IDX label magic");
  }
  const std::size_t count = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t label_count = read_be32(lab, 4, labels);
  if (count != label_count) {
    throw FormatError("IDX count mismatch: " + std::to_string(count) + " images vs " +
                      std::to_string(label_count) + " labels");
  }
  const std::size_t dim = rows * cols;
  if (img.size() < 16 + count * dim) throw FormatError("'" + images.string() + "': truncated");
  if (lab.size() < 8 + count) throw FormatError("'" + labels.string() + "': truncated");

  Pools pools;
  for (std::size_t i = 0; i < count; ++i) {
    const int digit = lab[8 + i];
    if (digit > 9) throw FormatError("'" + labels.string() + "': label out of range");
    std::vector<double> x(dim);
    const std::uint8_t* px = img.data() + 16 + i * dim;
    for (std::size_t j = 0; j < dim; ++j) x[j] = px[j] / 255.0;
    (partition.is_positive(digit) ? pools.positive : pools.negative)
        .features.push_back(std::move(x));
  }
  return pools;
}

Pools load_csv(const std::filesystem::path& path, const std::string& label_column,
               bool has_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  std::size_t label_idx = 0;

  auto resolve_index = [&](const std::vector<std::string>* header) {
    std::size_t idx = 0;
    auto [ptr, ec] =
        std::from_chars(label_column.data(), label_column.data() + label_column.size(), idx);
    if (ec == std::errc{} && ptr == label_column.data() + label_column.size()) return idx;
    if (header) {
      const auto it = std::find(header->begin(), header->end(), label_column);
      if (it != header->end()) return static_cast<std::size_t>(it - header->begin());
    }
    throw ConfigError("label column '" + label_column + "' not found in '" + path.string() + "'");
  };

  if (has_header) {
    if (!std::getline(in, line)) throw FormatError("'" + path.string() + "': empty file");
    ++line_no;
    const auto header = split_csv_line(line);
    width = header.size();
    label_idx = resolve_index(&header);
  } else {
    label_idx = resolve_index(nullptr);
  }

  Pools pools;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) +
                        ": ragged row (" + std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(width) + ")");
    }
    if (label_idx >= width) {
      throw ConfigError("label column index " + std::to_string(label_idx) + " exceeds row width");
    }
    std::vector<double> x;
    x.reserve(width - 1);
    int label = -1;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (!parse_double(cells[c], v)) {
        throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) +
                          ": non-numeric cell '" + cells[c] + "'");
      }
      if (c == label_idx) {
        if (v != 0.0 && v != 1.0) {
          throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) +
                            ": label must be 0 or 1");
        }
        label = static_cast<int>(v);
      } else {
        x.push_back(v);
      }
    }
    (label == 1 ? pools.positive : pools.negative).features.push_back(std::move(x));
  }
  return pools;
}

}  // namespace milrisk
