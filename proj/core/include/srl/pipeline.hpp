#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srl/clients.hpp"
#include "srl/dataset.hpp"

namespace srl::dataset {

struct FilterOptions {
  /// Samples verified at once. Output order is input order regardless.
  unsigned max_concurrency = 1;
};

struct FilterOutcome {
  std::vector<QASample> kept;
  std::vector<QASample> discarded;
  std::vector<unsigned> calls;  // per input sample, input order
  std::size_t total_calls = 0;
};

/// Raised when the verifier goes away mid-run. `partial` covers every
/// sample before `processed` in input order.
class FilterAborted : public VerifierUnavailable {
 public:
  FilterAborted(const std::string& what, FilterOutcome partial, std::size_t processed)
      : VerifierUnavailable(what), partial(std::move(partial)), processed(processed) {}
  FilterOutcome partial;
  std::size_t processed;
};

/// Two verifier calls per sample; keep on any agreement with the label.
/// Otherwise up to two more calls, keeping on the first agreement; discard
/// when all four disagree. Abstains count as disagreement.
FilterOutcome consistency_filter(std::span<const QASample> samples, VerifierClient& verifier,
                                 const FilterOptions& options = {});

/// Verdict for a single sample: (kept, calls made).
std::pair<bool, unsigned> verify_sample(const QASample& sample, VerifierClient& verifier);

struct PipelineOptions {
  std::size_t top_k = 10000;
  double split_ratio = 0.9;
  std::uint64_t balance_seed = 0;
  std::uint64_t split_seed = 0;
  /// Rank and truncate before verification instead of after.
  bool select_before_filter = false;
  /// Filter the whole pool, then split. When false, split first and filter
  /// each side separately. Either way each side is balanced on its own.
  bool filter_before_split = true;
  unsigned verifier_concurrency = 1;
};

struct PipelineReport {
  std::size_t records = 0;
  std::size_t ingest_errors = 0;
  std::size_t generated = 0;
  std::size_t empty_subgraphs = 0;
  std::size_t kept = 0;
  std::size_t discarded = 0;
  std::size_t selected = 0;
  std::size_t verifier_calls = 0;
  std::map<unsigned, std::size_t> calls_histogram;  // calls per sample -> samples
  std::map<std::string, std::size_t> train_per_category;
  std::map<std::string, std::size_t> val_per_category;
  std::array<std::size_t, 4> train_keys{};
  std::array<std::size_t, 4> val_keys{};
  std::size_t train = 0;
  std::size_t val = 0;

  std::string to_json() const;
};

struct PipelineOutput {
  std::vector<QASample> train;
  std::vector<QASample> val;
  PipelineReport report;
};

/// generate -> subgraph extraction -> filter -> select -> split -> balance,
/// with the orderings adjustable through PipelineOptions.
PipelineOutput run_pipeline(std::span<const CorpusRecord> records, GeneratorClient& generator,
                            VerifierClient& verifier, const PipelineOptions& options);

}  // namespace srl::dataset
