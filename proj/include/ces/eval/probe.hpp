#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ces/core/rng.hpp"
#include "ces/core/serialize.hpp"
#include "ces/core/types.hpp"
#include "ces/orchestrator/backend.hpp"

namespace ces {

// Screen sequence of one episode; entries are screen ids or image refs.
using ScreenSequence = std::vector<std::string>;

std::vector<ScreenSequence> screen_sequences(const std::vector<TaskRecord>& tasks);
std::vector<ScreenSequence> screen_sequences(const std::vector<Trajectory>& trajs);

// Shown screens a then b (positions i and j in seq, in presentation order),
// answers 0 when it believes a came first, 1 for b, -1 for no usable answer.
class TemporalJudge {
 public:
  virtual ~TemporalJudge() = default;
  virtual int judge(const ScreenSequence& seq, std::size_t i, std::size_t j, Rng& rng) const = 0;
};

class PerfectJudge : public TemporalJudge {
 public:
  int judge(const ScreenSequence& seq, std::size_t i, std::size_t j, Rng& rng) const override;
};

// Correct iff the span between the two positions holds at most `window`
// distinct screens and the two screens differ; otherwise a fair coin.
class WindowJudge : public TemporalJudge {
 public:
  explicit WindowJudge(int window);
  int judge(const ScreenSequence& seq, std::size_t i, std::size_t j, Rng& rng) const override;
  // Whether the judge answers deterministically correctly for this pair.
  bool recalls(const ScreenSequence& seq, std::size_t i, std::size_t j) const;

 private:
  int window_;
};

// Two-image-reference prompt; the reply must be exactly "first" or "second"
// (answer block or bare), anything else counts as no answer.
class BackendJudge : public TemporalJudge {
 public:
  explicit BackendJudge(std::shared_ptr<const PolicyBackend> backend);
  int judge(const ScreenSequence& seq, std::size_t i, std::size_t j, Rng& rng) const override;

 private:
  std::shared_ptr<const PolicyBackend> backend_;
};

struct IntervalStat {
  int interval = 0;
  long n_pairs = 0;
  long correct = 0;
  double accuracy = 0.0;
  bool operator==(const IntervalStat&) const = default;
};

struct ProbeResult {
  std::vector<IntervalStat> intervals;  // d = 1 .. max_interval
  const IntervalStat& at(int interval) const;
  bool operator==(const ProbeResult&) const = default;
};

// For each d in [1, max_interval], draws pairs_per_interval (sequence, t)
// positions uniformly among those with t + d in range, presents the two
// screens in random order and scores the judge. Throws
// Error(InsufficientLength) when no sequence spans max_interval steps.
ProbeResult temporal_probe(const std::vector<ScreenSequence>& sequences,
                           const TemporalJudge& judge, int max_interval, int pairs_per_interval,
                           std::uint64_t seed);

Json probe_json(const ProbeResult& r);
// "interval,n,accuracy" rows.
std::string probe_csv(const ProbeResult& r);

}  // namespace ces
