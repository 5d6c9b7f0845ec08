#include "ces/eval/probe.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "ces/core/context_keys.hpp"
#include "ces/core/error.hpp"
#include "ces/core/text.hpp"
#include "ces/orchestrator/loop.hpp"

namespace ces {

std::vector<ScreenSequence> screen_sequences(const std::vector<TaskRecord>& tasks) {
  std::vector<ScreenSequence> out;
  for (const auto& task : tasks) {
    ScreenSequence seq;
    for (const auto& step : task.steps) seq.push_back(step.observation.screen_id);
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<ScreenSequence> screen_sequences(const std::vector<Trajectory>& trajs) {
  std::vector<ScreenSequence> out;
  for (const auto& traj : trajs) {
    ScreenSequence seq;
    for (const auto& step : traj.steps) seq.push_back(step.observation_ref);
    out.push_back(std::move(seq));
  }
  return out;
}

int PerfectJudge::judge(const ScreenSequence&, std::size_t i, std::size_t j, Rng&) const {
  return i < j ? 0 : 1;
}

WindowJudge::WindowJudge(int window) : window_(window) {
  if (window < 1) throw Error(Errc::InvalidArgument, "window must be >= 1");
}

bool WindowJudge::recalls(const ScreenSequence& seq, std::size_t i, std::size_t j) const {
  if (seq[i] == seq[j]) return false;
  const std::size_t lo = std::min(i, j);
  const std::size_t hi = std::max(i, j);
  const std::set<std::string> distinct(seq.begin() + static_cast<long>(lo),
                                       seq.begin() + static_cast<long>(hi) + 1);
  return distinct.size() <= static_cast<std::size_t>(window_);
}

int WindowJudge::judge(const ScreenSequence& seq, std::size_t i, std::size_t j, Rng& rng) const {
  if (recalls(seq, i, j)) return i < j ? 0 : 1;
  return rng.coin() ? 0 : 1;
}

BackendJudge::BackendJudge(std::shared_ptr<const PolicyBackend> backend)
    : backend_(std::move(backend)) {
  if (!backend_) throw Error(Errc::InvalidArgument, "judge backend is null");
}

int BackendJudge::judge(const ScreenSequence& seq, std::size_t i, std::size_t j, Rng& rng) const {
  BackendRequest req;
  req.role = backend_->role();
  req.context_key = make_key({"temporal-order", seq[i], seq[j]});
  req.messages.push_back(
      {"user", "Two screenshots from the same phone session.\nScreenshot A: " + seq[i] +
                   "\nScreenshot B: " + seq[j] +
                   "\nWhich screenshot was captured earlier? Reply with exactly 'first' if A "
                   "came first or 'second' if B came first."});
  backend_->count_call();
  const auto answer = text::to_lower(answer_or_raw(backend_->generate(req, rng).text));
  if (answer == "first") return 0;
  if (answer == "second") return 1;
  return -1;
}

const IntervalStat& ProbeResult::at(int interval) const {
  for (const auto& s : intervals) {
    if (s.interval == interval) return s;
  }
  throw Error(Errc::InvalidArgument, "interval " + std::to_string(interval) + " not probed");
}

ProbeResult temporal_probe(const std::vector<ScreenSequence>& sequences,
                           const TemporalJudge& judge, int max_interval, int pairs_per_interval,
                           std::uint64_t seed) {
  if (max_interval < 1) throw Error(Errc::InvalidArgument, "max_interval must be >= 1");
  if (pairs_per_interval < 1) throw Error(Errc::InvalidArgument, "pairs_per_interval must be >= 1");
  ProbeResult result;
  for (int d = 1; d <= max_interval; ++d) {
    // Every (sequence, t) with t + d in range.
    std::vector<std::pair<std::size_t, std::size_t>> positions;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
      const auto len = sequences[s].size();
      for (std::size_t t = 0; t + static_cast<std::size_t>(d) < len; ++t) positions.emplace_back(s, t);
    }
    if (positions.empty()) {
      throw Error(Errc::InsufficientLength,
                  "no sequence spans interval " + std::to_string(d));
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
    IntervalStat stat;
    stat.interval = d;
    for (int k = 0; k < pairs_per_interval; ++k) {
      const auto [s, t] = positions[rng.below(positions.size())];
      const std::size_t early = t;
      const std::size_t late = t + static_cast<std::size_t>(d);
      const bool swap = rng.coin();
      const std::size_t a = swap ? late : early;
      const std::size_t b = swap ? early : late;
      const int answer = judge.judge(sequences[s], a, b, rng);
      stat.correct += answer == (swap ? 1 : 0);
      ++stat.n_pairs;
    }
    stat.accuracy = static_cast<double>(stat.correct) / static_cast<double>(stat.n_pairs);
    result.intervals.push_back(stat);
  }
  return result;
}

Json probe_json(const ProbeResult& r) {
  Json arr = Json::array();
  for (const auto& s : r.intervals) {
    arr.push_back({{"interval", s.interval},
                   {"n_pairs", s.n_pairs},
                   {"correct", s.correct},
                   {"accuracy", s.accuracy}});
  }
  return Json{{"intervals", std::move(arr)}};
}

std::string probe_csv(const ProbeResult& r) {
  std::ostringstream os;
  os << "interval,n,accuracy\n";
  for (const auto& s : r.intervals) {
    os << s.interval << "," << s.n_pairs << "," << std::fixed << std::setprecision(6) << s.accuracy
       << "\n";
  }
  return os.str();
}

}  // namespace ces
