// srl: scoring, GRPO, dataset and simulation commands.
//
// Exit codes: 0 ok, 1 assertion or threshold failure, 2 I/O, 3 config.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "srl/clients.hpp"
#include "srl/config.hpp"
#include "srl/dataset.hpp"
#include "srl/gradcheck.hpp"
#include "srl/grpo.hpp"
#include "srl/pipeline.hpp"
#include "srl/reward.hpp"
#include "srl/simulation.hpp"
#include "srl/toy_policy.hpp"

namespace {

using json = nlohmann::json;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kIo = 2;
constexpr int kConfig = 3;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Global {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw IoError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

srl::RunConfig load(const Global& g) {
  auto config = g.config_path.empty() ? srl::RunConfig{} : srl::load_config(g.config_path);
  if (g.seed) config.seed = *g.seed;
  if (!g.out.empty()) config.out = g.out;
  config.validate();
  return config;
}

srl::ScoringConfig scoring_of(const srl::RunConfig& config) {
  try {
    return config.reward.scoring();
  } catch (const std::exception& e) {
    throw srl::ConfigError(std::string("reward vocabulary: ") + e.what());
  }
}

// A response line is either a JSON string, an object with "response", or
// raw text.
std::string response_text(const std::string& line) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object() && j.contains("response") && j["response"].is_string()) {
    return j["response"].get<std::string>();
  }
  return line;
}

srl::GroundTruth truth_from(const std::string& text) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("answer") || !j["answer"].is_string()) {
    throw IoError("truth must be a JSON object with \"answer\" and \"subgraph\"");
  }
  srl::GroundTruth truth;
  truth.answer = j["answer"].get<std::string>();
  if (j.contains("subgraph")) {
    auto parsed = srl::parse_scene_json(j["subgraph"].dump());
    if (!parsed.graph) {
      std::string msg = "truth subgraph is invalid:";
      for (const auto& v : parsed.violations) msg += " " + srl::describe(v) + ";";
      throw IoError(msg);
    }
    truth.subgraph = std::move(*parsed.graph);
  }
  return truth;
}

int cmd_score(const Global& g, const std::string& responses_path, const std::string& truth_path) {
  const auto config = load(g);
  const auto scoring = scoring_of(config);
  const auto responses = lines_of(read_text(responses_path));
  const auto truth = truth_from(read_text(truth_path));
  Output out(config.out);
  for (const auto& line : responses) {
    out.stream() << srl::breakdown_to_json(srl::total_reward(response_text(line), truth, scoring))
                 << '\n';
  }
  return kOk;
}

int cmd_score_batch(const Global& g, const std::string& responses_path,
                    const std::string& truths_path, unsigned workers) {
  const auto config = load(g);
  const auto scoring = scoring_of(config);
  std::vector<std::string> responses;
  for (const auto& line : lines_of(read_text(responses_path))) responses.push_back(response_text(line));
  std::vector<srl::GroundTruth> truths;
  for (const auto& line : lines_of(read_text(truths_path))) truths.push_back(truth_from(line));
  const auto results = srl::score_batch(responses, truths, scoring, workers);
  Output out(config.out);
  for (const auto& b : results) out.stream() << srl::breakdown_to_json(b) << '\n';
  return kOk;
}

int cmd_grpo_step(const Global& g, const std::string& rollouts_path) {
  const auto config = load(g);
  const auto lines = lines_of(read_text(rollouts_path));
  Output out(config.out);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      const auto group = srl::grpo::rollout_from_json(lines[i]);
      out.stream() << srl::grpo::loss_report_to_json(srl::grpo::grpo_loss(group, config.grpo))
                   << '\n';
    } catch (const srl::grpo::GrpoError& e) {
      throw IoError(rollouts_path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return kOk;
}

std::unique_ptr<srl::dataset::GeneratorClient> make_generator(const srl::RunConfig& config) {
  const auto& spec = config.dataset.generator;
  if (spec == "template") {
    return std::make_unique<srl::dataset::TemplateGenerator>(config.seed, config.dataset.per_record);
  }
  if (spec.rfind("fixture:", 0) == 0) {
    try {
      return std::make_unique<srl::dataset::FixtureGenerator>(spec.substr(8));
    } catch (const srl::dataset::FileUnreadable& e) {
      throw IoError(e.what());
    }
  }
  if (spec.rfind("exec:", 0) == 0) return std::make_unique<srl::dataset::ExecGenerator>(spec.substr(5));
  throw srl::ConfigError("unknown generator '" + spec + "'");
}

// Stub verifiers need the labels of whatever the generator produces, so the
// generator is wrapped to register each batch as it goes by.
class LabelingGenerator : public srl::dataset::GeneratorClient {
 public:
  LabelingGenerator(srl::dataset::GeneratorClient& inner, srl::dataset::StubVerifier* stub)
      : inner_(inner), stub_(stub) {}
  std::vector<srl::dataset::QASample> generate(const srl::dataset::CorpusRecord& record) override {
    auto samples = inner_.generate(record);
    if (stub_ != nullptr) stub_->add_labels(samples);
    return samples;
  }

 private:
  srl::dataset::GeneratorClient& inner_;
  srl::dataset::StubVerifier* stub_;
};

std::unique_ptr<srl::dataset::VerifierClient> make_verifier(const srl::RunConfig& config) {
  using Stub = srl::dataset::StubVerifier;
  const auto& spec = config.dataset.verifier;
  if (spec.rfind("exec:", 0) == 0) return std::make_unique<srl::dataset::ExecVerifier>(spec.substr(5));
  std::optional<Stub::Mode> mode;
  if (spec == "always-correct") mode = Stub::Mode::AlwaysCorrect;
  if (spec == "always-wrong") mode = Stub::Mode::AlwaysWrong;
  if (spec == "abstain") mode = Stub::Mode::Abstain;
  if (spec == "seeded") mode = Stub::Mode::Seeded;
  if (!mode) throw srl::ConfigError("unknown verifier '" + spec + "'");
  auto stub = std::make_unique<Stub>(*mode, std::map<std::pair<std::string, std::string>, char>{});
  stub->set_seeded(config.seed, config.dataset.verifier_p_correct);
  return stub;
}

int cmd_build_dataset(const Global& g, const std::string& corpus_path, const std::string& out_dir) {
  const auto config = load(g);
  srl::dataset::IngestResult corpus;
  try {
    corpus = srl::dataset::ingest_corpus(corpus_path);
  } catch (const srl::dataset::FileUnreadable& e) {
    throw IoError(e.what());
  }
  for (const auto& err : corpus.errors) {
    std::cerr << corpus_path << ":" << err.line << ": " << err.message << '\n';
  }
  auto generator = make_generator(config);
  auto verifier = make_verifier(config);
  LabelingGenerator labeling(*generator, dynamic_cast<srl::dataset::StubVerifier*>(verifier.get()));

  srl::dataset::PipelineOptions options;
  options.top_k = config.dataset.top_k;
  options.split_ratio = config.dataset.split_ratio;
  options.balance_seed = srl::Rng::derive(config.seed, 1);
  options.split_seed = srl::Rng::derive(config.seed, 2);
  options.select_before_filter = config.dataset.select_before_filter;
  options.filter_before_split = config.dataset.filter_before_split;
  options.verifier_concurrency = config.dataset.concurrency;

  srl::dataset::PipelineOutput result;
  try {
    result = srl::dataset::run_pipeline(corpus.records, labeling, *verifier, options);
  } catch (const srl::dataset::VerifierUnavailable& e) {
    throw IoError(std::string("verifier unavailable: ") + e.what());
  }
  result.report.ingest_errors = corpus.errors.size();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  const std::filesystem::path dir(out_dir);
  try {
    srl::dataset::write_dataset((dir / "train.jsonl").string(), result.train);
    srl::dataset::write_dataset((dir / "val.jsonl").string(), result.val);
  } catch (const srl::dataset::FileUnreadable& e) {
    throw IoError(e.what());
  }
  Output report((dir / "report.json").string());
  report.stream() << result.report.to_json() << '\n';
  std::cout << result.report.to_json() << '\n';
  return kOk;
}

int cmd_extract_subgraph(const Global& g, const std::string& corpus_path,
                         const std::string& image_id, const std::string& question) {
  const auto config = load(g);
  srl::dataset::IngestResult corpus;
  try {
    corpus = srl::dataset::ingest_corpus(corpus_path);
  } catch (const srl::dataset::FileUnreadable& e) {
    throw IoError(e.what());
  }
  for (const auto& record : corpus.records) {
    if (record.image_id == image_id) {
      Output out(config.out);
      out.stream() << srl::serialize_scene(srl::dataset::extract_subgraph(record.scene, question))
                   << '\n';
      return kOk;
    }
  }
  throw IoError("UnknownImageId: " + image_id);
}

int cmd_simulate(const Global& g, std::optional<std::size_t> episodes, bool all_seeds) {
  auto config = load(g);
  if (episodes) config.simulation.episodes = *episodes;
  const auto scoring = scoring_of(config);
  bool ok = true;
  std::vector<std::uint64_t> seeds = {config.seed};
  if (all_seeds) seeds.assign(srl::sim::kDocumentedSeeds.begin(), srl::sim::kDocumentedSeeds.end());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto result = srl::sim::simulate_hacking(config.simulation, seeds[i], scoring);
    if (i == 0) {
      Output out(config.out);
      out.stream() << srl::sim::metrics_csv(result);
    }
    auto& summary = config.out.empty() ? std::cerr : std::cout;
    summary << srl::sim::summary_json(result, seeds[i]) << '\n';
    ok = ok && result.spam_spatial_exceeds_wrong() && result.spam_total_below_focused();
  }
  return ok ? kOk : kFailed;
}

int cmd_gradcheck(const Global& g, std::optional<double> threshold, std::optional<double> step,
                  double bug) {
  auto config = load(g);
  if (threshold) config.gradcheck.threshold = *threshold;
  if (step) config.gradcheck.step = *step;
  config.validate();
  auto problem =
      srl::toy::make_gradcheck_problem(config.gradcheck, config.grpo, config.seed, scoring_of(config));
  problem.gradient_bug = bug;
  const auto result =
      srl::finite_difference_check(problem.objective(), problem.theta_new, config.gradcheck.step);
  const bool pass = result.max_relative_error < config.gradcheck.threshold;
  json j;
  j["max_relative_error"] = result.max_relative_error;
  j["worst_index"] = result.worst_index;
  j["threshold"] = config.gradcheck.threshold;
  j["step"] = config.gradcheck.step;
  j["pass"] = pass;
  Output out(config.out);
  out.stream() << j.dump() << '\n';
  return pass ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward scoring, GRPO math, dataset construction and reward-hacking simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--config", g.config_path, "INI-style run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the configured seed");
  app.add_option("--out", g.out, "Output path (default stdout)");

  std::string responses, truth, truths, rollouts, corpus, out_dir = "dataset", image_id, question;
  unsigned workers = 1;
  std::optional<std::size_t> episodes;
  bool all_seeds = false;
  std::optional<double> threshold, step;
  double bug = 1.0;

  auto* score = app.add_subcommand("score", "Score responses against one ground truth");
  score->add_option("responses", responses, "Responses, one per line")->required();
  score->add_option("truth", truth, "Ground-truth JSON")->required();

  auto* batch = app.add_subcommand("score-batch", "Score responses against matching truths");
  batch->add_option("responses", responses, "Responses, one per line")->required();
  batch->add_option("truths", truths, "Ground truths, one per line")->required();
  batch->add_option("--workers", workers, "Scoring threads");

  auto* build = app.add_subcommand("build-dataset", "Corpus to train/val JSONL");
  build->add_option("corpus", corpus, "Corpus JSONL")->required();
  build->add_option("--out-dir", out_dir, "Directory for train.jsonl, val.jsonl, report.json");

  auto* extract = app.add_subcommand("extract-subgraph", "Question-aligned subgraph of one record");
  extract->add_option("corpus", corpus, "Corpus JSONL")->required();
  extract->add_option("--image-id", image_id)->required();
  extract->add_option("--question", question)->required();

  auto* grpo = app.add_subcommand("grpo-step", "Loss report per rollout group");
  grpo->add_option("rollouts", rollouts, "Rollout JSONL")->required();

  auto* sim = app.add_subcommand("simulate-hacking", "Per-episode reward metrics as CSV");
  sim->add_option("--episodes", episodes);
  sim->add_flag("--all-seeds", all_seeds, "Check the ordering at every documented seed");

  auto* grad = app.add_subcommand("gradcheck", "Analytic vs finite-difference GRPO gradient");
  grad->add_option("--threshold", threshold);
  grad->add_option("--step", step);
  grad->add_option("--inject-gradient-bug", bug, "Scale one gradient coordinate (self-test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*score) return cmd_score(g, responses, truth);
    if (*batch) return cmd_score_batch(g, responses, truths, workers);
    if (*build) return cmd_build_dataset(g, corpus, out_dir);
    if (*extract) return cmd_extract_subgraph(g, corpus, image_id, question);
    if (*grpo) return cmd_grpo_step(g, rollouts);
    if (*sim) return cmd_simulate(g, episodes, all_seeds);
    if (*grad) return cmd_gradcheck(g, threshold, step, bug);
  } catch (const srl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const srl::LengthMismatch& e) {
    std::cerr << "LengthMismatch: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
