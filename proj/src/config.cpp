#include "dprsa/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dprsa/errors.hpp"

namespace dprsa {

namespace {

using nlohmann::json;

void require_keys_in(const json& obj, const std::string& where,
                     const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

double get_num(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
  return v.get<double>();
}

std::size_t get_count(const json& obj, const char* key, std::size_t fallback,
                      bool required = false) {
  if (!obj.contains(key)) {
    if (required) throw ConfigError(std::string("missing required key \"") + key + "\"");
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) {
    throw ConfigError(std::string(key) + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string get_str(const json& obj, const char* key, const std::string& fallback,
                    bool required = false) {
  if (!obj.contains(key)) {
    if (required) throw ConfigError(std::string("missing required key \"") + key + "\"");
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(std::string(key) + " must be a string");
  return v.get<std::string>();
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::Sgd, Algorithm::SignSgd, Algorithm::SgdGm,
                      Algorithm::Rsa, Algorithm::DpRsaFlip, Algorithm::DpRsaGauss}) {
    if (name == algorithm_name(a)) return a;
  }
  throw ConfigError("unknown algorithm \"" + name + "\"");
}

AttackKind parse_attack_kind(const std::string& name) {
  for (AttackKind k : {AttackKind::None, AttackKind::Gaussian, AttackKind::SignFlip,
                       AttackKind::SampleDuplicate}) {
    if (name == attack_name(k)) return k;
  }
  throw ConfigError("unknown attack kind \"" + name + "\"");
}

AttackSpec parse_attack(const json& obj) {
  require_keys_in(obj, "attack", {"kind", "sigma_b", "scale", "victim_index"});
  AttackSpec spec;
  spec.kind = parse_attack_kind(get_str(obj, "kind", "", true));
  spec.sigma_b = get_num(obj, "sigma_b", spec.sigma_b);
  spec.scale = get_num(obj, "scale", spec.scale);
  spec.victim_index = get_count(obj, "victim_index", spec.victim_index);
  return spec;
}

DatasetConfig parse_dataset(const json& obj) {
  DatasetConfig ds;
  std::string kind = get_str(obj, "kind", "", true);
  if (kind == "synthetic") {
    ds.kind = DatasetConfig::Kind::Synthetic;
    require_keys_in(obj, "dataset",
                    {"kind", "num_classes", "dim", "samples_per_class", "separation",
                     "noise_std", "seed", "test_samples_per_class"});
    ds.synthetic.num_classes = get_count(obj, "num_classes", 0, true);
    ds.synthetic.dim = get_count(obj, "dim", 0, true);
    ds.synthetic.samples_per_class = get_count(obj, "samples_per_class", 0, true);
    ds.synthetic.class_mean_separation = get_num(obj, "separation", 4.0);
    ds.synthetic.noise_std = get_num(obj, "noise_std", 0.5);
    ds.synthetic.seed = get_count(obj, "seed", 0);
    ds.test_samples_per_class =
        get_count(obj, "test_samples_per_class", ds.synthetic.samples_per_class);
  } else if (kind == "mnist") {
    ds.kind = DatasetConfig::Kind::Mnist;
    require_keys_in(obj, "dataset",
                    {"kind", "train_images", "train_labels", "test_images", "test_labels"});
    ds.train_images = get_str(obj, "train_images", "", true);
    ds.train_labels = get_str(obj, "train_labels", "", true);
    ds.test_images = get_str(obj, "test_images", "", true);
    ds.test_labels = get_str(obj, "test_labels", "", true);
  } else {
    throw ConfigError("dataset kind must be \"synthetic\" or \"mnist\"");
  }
  return ds;
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");

  require_keys_in(doc, "config",
                  {"algorithm", "num_workers", "num_byzantine", "rounds", "lambda",
                   "alpha", "epsilon", "sigma_margin", "batch_size", "seed", "clip_norm",
                   "eval_every", "reg_coeff", "hidden_dim", "partition", "group_size",
                   "attack", "dataset", "output"});

  RunConfig cfg;
  try {
    cfg.sim.algorithm = parse_algorithm(get_str(doc, "algorithm", "", true));
    cfg.sim.num_workers = get_count(doc, "num_workers", 0, true);
    cfg.sim.num_byzantine = get_count(doc, "num_byzantine", 0);
    cfg.sim.rounds = get_count(doc, "rounds", 0, true);
    cfg.sim.rsa.lambda = get_num(doc, "lambda", cfg.sim.rsa.lambda);
    cfg.sim.rsa.alpha = get_num(doc, "alpha", cfg.sim.rsa.alpha);
    cfg.sim.epsilon = get_num(doc, "epsilon", cfg.sim.epsilon);
    cfg.sim.sigma_margin = get_num(doc, "sigma_margin", cfg.sim.sigma_margin);
    cfg.sim.batch_size = get_count(doc, "batch_size", cfg.sim.batch_size);
    cfg.sim.seed = get_count(doc, "seed", 0);
    cfg.sim.clip.max_norm = get_num(doc, "clip_norm", cfg.sim.clip.max_norm);
    cfg.sim.eval_every = get_count(doc, "eval_every", cfg.sim.eval_every);
    cfg.sim.reg_coeff = get_num(doc, "reg_coeff", cfg.sim.reg_coeff);
    cfg.hidden_dim = get_count(doc, "hidden_dim", cfg.hidden_dim);
    std::string part = get_str(doc, "partition", "iid");
    if (part == "iid") {
      cfg.sim.partition = PartitionKind::Iid;
    } else if (part == "noniid") {
      cfg.sim.partition = PartitionKind::NonIid;
    } else {
      throw ConfigError("partition must be \"iid\" or \"noniid\"");
    }
    cfg.sim.group_size = get_count(doc, "group_size", cfg.sim.group_size);
    if (doc.contains("attack")) {
      if (!doc.at("attack").is_object()) throw ConfigError("attack must be an object");
      cfg.sim.attack = parse_attack(doc.at("attack"));
    }
    if (!doc.contains("dataset") || !doc.at("dataset").is_object()) {
      throw ConfigError("missing required object \"dataset\"");
    }
    cfg.dataset = parse_dataset(doc.at("dataset"));
    cfg.output = get_str(doc, "output", cfg.output);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config value: ") + e.what());
  }
  return cfg;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str());
}

std::pair<Dataset, Dataset> load_datasets(RunConfig& cfg) {
  Dataset train, test;
  if (cfg.dataset.kind == DatasetConfig::Kind::Synthetic) {
    const SyntheticSpec& s = cfg.dataset.synthetic;
    if (s.num_classes == 0 || s.dim == 0 || s.samples_per_class == 0 ||
        cfg.dataset.test_samples_per_class == 0) {
      throw ConfigError("synthetic dataset sizes must all be >= 1");
    }
    train = gen_synthetic(s);
    SyntheticSpec t = s;
    t.samples_per_class = cfg.dataset.test_samples_per_class;
    t.seed = s.seed + 1;
    test = gen_synthetic(t);
  } else {
    train = load_idx(cfg.dataset.train_images, cfg.dataset.train_labels);
    test = load_idx(cfg.dataset.test_images, cfg.dataset.test_labels);
    if (train.feature_dim != test.feature_dim) {
      throw DataError("train and test feature dimensions differ");
    }
  }
  std::size_t classes = std::max(train.num_classes, test.num_classes);
  cfg.sim.model = MlpModel{train.feature_dim, cfg.hidden_dim, classes};
  return {std::move(train), std::move(test)};
}

}  // namespace dprsa
