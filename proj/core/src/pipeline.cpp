#include "srl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <optional>
#include <thread>

#include "json_util.hpp"
#include "srl/rng.hpp"

namespace srl::dataset {
namespace {

using detail::ordered_json;

VerifierRequest request_for(const QASample& s) { return {s.image_id, s.question, s.options}; }

void tally(PipelineReport& report, const FilterOutcome& outcome) {
  report.kept += outcome.kept.size();
  report.discarded += outcome.discarded.size();
  report.verifier_calls += outcome.total_calls;
  for (auto c : outcome.calls) ++report.calls_histogram[c];
}

}  // namespace

std::pair<bool, unsigned> verify_sample(const QASample& sample, VerifierClient& verifier) {
  const auto request = request_for(sample);
  auto agrees = [&] { return verifier.answer(request) == std::optional<char>(sample.answer_key); };
  // Both first-round calls are always made.
  const bool first = agrees();
  const bool second = agrees();
  if (first || second) return {true, 2};
  if (agrees()) return {true, 3};
  return {agrees(), 4};
}

FilterOutcome consistency_filter(std::span<const QASample> samples, VerifierClient& verifier,
                                 const FilterOptions& options) {
  const std::size_t n = samples.size();
  std::vector<std::optional<std::pair<bool, unsigned>>> verdicts(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::optional<std::pair<std::size_t, std::string>> failure;

  auto work = [&] {
    while (!stop.load()) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        verdicts[i] = verify_sample(samples[i], verifier);
      } catch (const VerifierUnavailable& e) {
        std::lock_guard lock(error_mutex);
        if (!failure || i < failure->first) failure = {i, e.what()};
        stop = true;
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(options.max_concurrency,
                                                           static_cast<unsigned>(n)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  FilterOutcome outcome;
  std::size_t processed = 0;
  for (; processed < n && verdicts[processed]; ++processed) {
    const auto [kept, calls] = *verdicts[processed];
    (kept ? outcome.kept : outcome.discarded).push_back(samples[processed]);
    outcome.calls.push_back(calls);
    outcome.total_calls += calls;
  }
  if (failure) throw FilterAborted(failure->second, std::move(outcome), processed);
  return outcome;
}

std::string PipelineReport::to_json() const {
  ordered_json j;
  j["records"] = records;
  j["ingest_errors"] = ingest_errors;
  j["generated"] = generated;
  j["empty_subgraphs"] = empty_subgraphs;
  j["kept"] = kept;
  j["discarded"] = discarded;
  j["selected"] = selected;
  j["verifier_calls"] = verifier_calls;
  ordered_json hist = ordered_json::object();
  for (const auto& [calls, count] : calls_histogram) hist[std::to_string(calls)] = count;
  j["calls_per_sample"] = std::move(hist);
  j["train"] = train;
  j["val"] = val;
  j["train_per_category"] = train_per_category;
  j["val_per_category"] = val_per_category;
  auto keys = [](const std::array<std::size_t, 4>& k) {
    ordered_json o;
    for (std::size_t i = 0; i < 4; ++i) o[std::string(1, kOptionKeys[i])] = k[i];
    return o;
  };
  j["train_keys"] = keys(train_keys);
  j["val_keys"] = keys(val_keys);
  return j.dump(2);
}

PipelineOutput run_pipeline(std::span<const CorpusRecord> records, GeneratorClient& generator,
                            VerifierClient& verifier, const PipelineOptions& options) {
  PipelineOutput out;
  auto& report = out.report;
  report.records = records.size();

  std::vector<QASample> pool;
  for (const auto& record : records) {
    for (auto& s : generator.generate(record)) {
      ++report.generated;
      s.subgraph = canonicalize(extract_subgraph(record.scene, s.question));
      if (s.subgraph.objects.empty()) {
        ++report.empty_subgraphs;
        continue;
      }
      if (!s.image_size) s.image_size = record.image_size;
      pool.push_back(std::move(s));
    }
  }

  const FilterOptions filter{options.verifier_concurrency};
  if (options.select_before_filter) pool = select_top(pool, options.top_k);

  Split split;
  if (options.filter_before_split) {
    auto outcome = consistency_filter(pool, verifier, filter);
    tally(report, outcome);
    pool = std::move(outcome.kept);
    if (!options.select_before_filter) pool = select_top(pool, options.top_k);
    report.selected = pool.size();
    split = split_train_val(pool, options.split_ratio, options.split_seed);
    split.train = balance_answer_keys(split.train, Rng::derive(options.balance_seed, 0));
    split.val = balance_answer_keys(split.val, Rng::derive(options.balance_seed, 1));
  } else {
    if (!options.select_before_filter) pool = select_top(pool, options.top_k);
    report.selected = pool.size();
    split = split_train_val(pool, options.split_ratio, options.split_seed);
    std::uint64_t stream = 0;
    for (auto* side : {&split.train, &split.val}) {
      auto outcome = consistency_filter(*side, verifier, filter);
      tally(report, outcome);
      *side = balance_answer_keys(outcome.kept, Rng::derive(options.balance_seed, stream++));
    }
  }

  out.train = std::move(split.train);
  out.val = std::move(split.val);
  report.train = out.train.size();
  report.val = out.val.size();
  for (const auto& s : out.train) ++report.train_per_category[std::string(to_string(s.category))];
  for (const auto& s : out.val) ++report.val_per_category[std::string(to_string(s.category))];
  report.train_keys = key_histogram(out.train);
  report.val_keys = key_histogram(out.val);
  return out;
}

}  // namespace srl::dataset
