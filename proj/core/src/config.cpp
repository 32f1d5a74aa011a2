#include "srl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace srl {
namespace {

namespace pt = boost::property_tree;

std::string format(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ConfigError("bad value for " + key + ": '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("bad boolean for " + key + ": '" + s + "'");
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

template <typename T>
Field num(const char* section, const char* key, std::function<T&(RunConfig&)> ref) {
  return {section, key,
          [ref](const RunConfig& c) {
            const T& v = ref(const_cast<RunConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) {
              return format(v);
            } else {
              return std::to_string(v);
            }
          },
          [ref](RunConfig& c, const std::string& name, const std::string& s) {
            ref(c) = parse_number<T>(name, s);
          }};
}

Field flag(const char* section, const char* key, std::function<bool&(RunConfig&)> ref) {
  return {section, key,
          [ref](const RunConfig& c) {
            return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false");
          },
          [ref](RunConfig& c, const std::string& name, const std::string& s) {
            ref(c) = parse_bool(name, s);
          }};
}

Field str(const char* section, const char* key, std::function<std::string&(RunConfig&)> ref) {
  return {section, key, [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)); },
          [ref](RunConfig& c, const std::string&, const std::string& s) { ref(c) = s; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      num<std::uint64_t>("run", "seed", [](RunConfig& c) -> auto& { return c.seed; }),
      str("run", "out", [](RunConfig& c) -> auto& { return c.out; }),

      num<double>("reward", "w_format", [](RunConfig& c) -> auto& { return c.reward.weights.w_format; }),
      num<double>("reward", "w_count", [](RunConfig& c) -> auto& { return c.reward.weights.w_count; }),
      num<double>("reward", "w_accuracy", [](RunConfig& c) -> auto& { return c.reward.weights.w_accuracy; }),
      num<double>("reward", "w_spatial", [](RunConfig& c) -> auto& { return c.reward.weights.w_spatial; }),
      num<double>("reward", "lambda_obj", [](RunConfig& c) -> auto& { return c.reward.weights.lambda_obj; }),
      num<double>("reward", "lambda_rel", [](RunConfig& c) -> auto& { return c.reward.weights.lambda_rel; }),
      num<double>("reward", "lambda_spatial", [](RunConfig& c) -> auto& { return c.reward.weights.lambda_spatial; }),
      num<double>("reward", "lambda_semantic", [](RunConfig& c) -> auto& { return c.reward.weights.lambda_semantic; }),
      {"reward", "accuracy_mode",
       [](const RunConfig& c) { return std::string(to_string(c.reward.accuracy_mode)); },
       [](RunConfig& c, const std::string& name, const std::string& s) {
         try {
           c.reward.accuracy_mode = parse_answer_mode(s);
         } catch (const std::exception&) {
           throw ConfigError("bad value for " + name + ": '" + s + "'");
         }
       }},
      flag("reward", "clamp_negative_ciou", [](RunConfig& c) -> auto& { return c.reward.clamp_negative_ciou; }),
      flag("reward", "strict_vocabulary", [](RunConfig& c) -> auto& { return c.reward.strict_vocabulary; }),
      str("reward", "vocabulary", [](RunConfig& c) -> auto& { return c.reward.vocabulary_path; }),

      num<double>("grpo", "epsilon", [](RunConfig& c) -> auto& { return c.grpo.epsilon; }),
      num<double>("grpo", "eps_low", [](RunConfig& c) -> auto& { return c.grpo.eps_low; }),
      num<double>("grpo", "eps_high", [](RunConfig& c) -> auto& { return c.grpo.eps_high; }),
      num<double>("grpo", "beta", [](RunConfig& c) -> auto& { return c.grpo.beta; }),
      {"grpo", "kl",
       [](const RunConfig& c) {
         return std::string(c.grpo.kl == grpo::KlEstimator::K3 ? "k3" : "naive");
       },
       [](RunConfig& c, const std::string& name, const std::string& s) {
         if (s == "k3") {
           c.grpo.kl = grpo::KlEstimator::K3;
         } else if (s == "naive") {
           c.grpo.kl = grpo::KlEstimator::Naive;
         } else {
           throw ConfigError("bad value for " + name + ": '" + s + "' (k3 or naive)");
         }
       }},

      num<std::size_t>("dataset", "top_k", [](RunConfig& c) -> auto& { return c.dataset.top_k; }),
      num<double>("dataset", "split_ratio", [](RunConfig& c) -> auto& { return c.dataset.split_ratio; }),
      flag("dataset", "select_before_filter", [](RunConfig& c) -> auto& { return c.dataset.select_before_filter; }),
      flag("dataset", "filter_before_split", [](RunConfig& c) -> auto& { return c.dataset.filter_before_split; }),
      str("dataset", "verifier", [](RunConfig& c) -> auto& { return c.dataset.verifier; }),
      num<double>("dataset", "verifier_p_correct", [](RunConfig& c) -> auto& { return c.dataset.verifier_p_correct; }),
      str("dataset", "generator", [](RunConfig& c) -> auto& { return c.dataset.generator; }),
      num<std::size_t>("dataset", "per_record", [](RunConfig& c) -> auto& { return c.dataset.per_record; }),
      num<unsigned>("dataset", "concurrency", [](RunConfig& c) -> auto& { return c.dataset.concurrency; }),

      num<std::size_t>("simulation", "episodes", [](RunConfig& c) -> auto& { return c.simulation.episodes; }),
      num<std::size_t>("simulation", "spam_boxes", [](RunConfig& c) -> auto& { return c.simulation.spam_boxes; }),
      num<double>("simulation", "focused_jitter", [](RunConfig& c) -> auto& { return c.simulation.focused_jitter; }),
      num<double>("simulation", "wrong_jitter", [](RunConfig& c) -> auto& { return c.simulation.wrong_jitter; }),
      num<double>("simulation", "spam_jitter", [](RunConfig& c) -> auto& { return c.simulation.spam_jitter; }),
      num<std::size_t>("simulation", "min_objects", [](RunConfig& c) -> auto& { return c.simulation.min_objects; }),
      num<std::size_t>("simulation", "max_objects", [](RunConfig& c) -> auto& { return c.simulation.max_objects; }),
      num<double>("simulation", "canvas", [](RunConfig& c) -> auto& { return c.simulation.canvas; }),
      num<unsigned>("simulation", "workers", [](RunConfig& c) -> auto& { return c.simulation.workers; }),

      num<std::size_t>("gradcheck", "trajectories", [](RunConfig& c) -> auto& { return c.gradcheck.trajectories; }),
      num<std::size_t>("gradcheck", "min_length", [](RunConfig& c) -> auto& { return c.gradcheck.min_length; }),
      num<std::size_t>("gradcheck", "max_length", [](RunConfig& c) -> auto& { return c.gradcheck.max_length; }),
      num<double>("gradcheck", "step", [](RunConfig& c) -> auto& { return c.gradcheck.step; }),
      num<double>("gradcheck", "threshold", [](RunConfig& c) -> auto& { return c.gradcheck.threshold; }),
      num<double>("gradcheck", "perturbation", [](RunConfig& c) -> auto& { return c.gradcheck.perturbation; }),
  };
  return all;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields()) {
    if (section == f.section && key == f.key) return &f;
  }
  return nullptr;
}

}  // namespace

ScoringConfig RewardSection::scoring() const {
  ScoringConfig c;
  c.weights = weights;
  c.accuracy_mode = accuracy_mode;
  c.clamp_negative_ciou = clamp_negative_ciou;
  c.strict_vocabulary = strict_vocabulary;
  if (!vocabulary_path.empty()) c.vocabulary = PredicateVocabulary::load(vocabulary_path);
  return c;
}

void RunConfig::validate() const {
  try {
    reward.weights.validate();
    grpo.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(dataset.split_ratio > 0.0 && dataset.split_ratio < 1.0)) {
    throw ConfigError("dataset.split_ratio must lie in (0, 1)");
  }
  if (!(dataset.verifier_p_correct >= 0.0 && dataset.verifier_p_correct <= 1.0)) {
    throw ConfigError("dataset.verifier_p_correct must lie in [0, 1]");
  }
  if (simulation.min_objects < 2 || simulation.max_objects < simulation.min_objects) {
    throw ConfigError("simulation needs 2 <= min_objects <= max_objects");
  }
  if (!(simulation.canvas >= 100.0)) throw ConfigError("simulation.canvas must be >= 100");
  for (double j : {simulation.focused_jitter, simulation.wrong_jitter, simulation.spam_jitter}) {
    if (!(j >= 0.0)) throw ConfigError("simulation jitter must be >= 0");
  }
  if (gradcheck.trajectories < 2) throw ConfigError("gradcheck.trajectories must be >= 2");
  if (gradcheck.min_length < 1 || gradcheck.max_length < gradcheck.min_length) {
    throw ConfigError("gradcheck needs 1 <= min_length <= max_length");
  }
  if (!(gradcheck.step > 0.0) || !(gradcheck.threshold > 0.0)) {
    throw ConfigError("gradcheck.step and gradcheck.threshold must be > 0");
  }
}

RunConfig parse_config(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig config;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) {
      throw ConfigError("config: key '" + section + "' outside a section");
    }
    for (const auto& [key, value] : body) {
      const auto* field = find_field(section, key);
      if (field == nullptr) throw ConfigError("config: unknown key " + section + "." + key);
      field->set(config, section + "." + key, value.get_value<std::string>());
    }
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  std::string current;
  for (const auto& f : fields()) {
    if (current != f.section) {
      if (!current.empty()) out += '\n';
      current = f.section;
      out += "[" + current + "]\n";
    }
    out += std::string(f.key) + " = " + f.get(config) + "\n";
  }
  return out;
}

}  // namespace srl
