#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asap/eig.hpp"
#include "asap/gaussian.hpp"
#include "asap/inference.hpp"
#include "asap/types.hpp"

namespace asap {

enum class SamplerKind { asap, asap_approx, random, quicksort, swiss, ts_sampling };

std::string_view to_string(SamplerKind kind);
// Throws std::invalid_argument for an unknown name.
SamplerKind parse_sampler_kind(std::string_view name);

struct SamplerOptions {
  SamplerKind kind = SamplerKind::asap;
  bool selective = true;  // roulette-gated EIG evaluation (asap kinds)
  bool batch = true;      // MST batches rather than one argmax pair
  std::uint64_t seed = 0;
};

// Pairs to measure before the next selection round.
using Batch = std::vector<Pair>;

// How the driver keeps ExperimentState::posterior() current for a sampler.
enum class PosteriorPolicy {
  full,    // full EP after each batch (warm-started PosteriorTracker)
  online,  // ADF step after each outcome
  none,    // the sampler never reads the posterior
};

PosteriorPolicy posterior_policy(SamplerKind kind);

// TrueSkill match quality of a pair:
//   sqrt(2b^2 / (2b^2 + s_i^2 + s_j^2)) exp(-(m_i - m_j)^2 / (2 (2b^2 + s_i^2 + s_j^2)))
double match_quality(const GaussianScore& i, const GaussianScore& j,
                     const ModelConfig& config);

// Pair with the largest gain among evaluated entries; near-ties (relative
// 1e-12) are broken uniformly with `rng`. Throws std::logic_error when
// nothing was evaluated.
Pair argmax_pair(const EigMatrix& gains, Rng& rng);

// Reciprocal-gain weights w_ij = 1 / I_ij. Skipped or zero-gain pairs get
// ten times the largest finite weight so the tree stays connected.
std::vector<double> reciprocal_gain_weights(const EigMatrix& gains);

// MST over reciprocal gains: n - 1 pairs touching every condition.
Batch mst_batch(const EigMatrix& gains);

class Sampler {
 public:
  explicit Sampler(SamplerOptions options);
  virtual ~Sampler() = default;
  Sampler(const Sampler&) = delete;
  Sampler& operator=(const Sampler&) = delete;

  const SamplerOptions& options() const { return options_; }
  PosteriorPolicy policy() const { return posterior_policy(options_.kind); }

  // Next pair or batch. Samplers with a posterior policy other than `none`
  // require state.posterior() to be fresh. `graph` (full policy) may hold the
  // state's history at its fixed point to warm-start EIG evaluation.
  virtual Batch select(const ExperimentState& state,
                       FactorGraph* graph = nullptr) = 0;

  // Outcomes of previously selected pairs, in arrival order.
  virtual void observe(std::span<const ComparisonRecord> records);

  // Fraction of pairs whose EIG was evaluated in the latest selection.
  std::optional<double> last_eig_fraction() const { return last_eig_fraction_; }

 protected:
  SamplerOptions options_;
  Rng rng_;
  std::optional<double> last_eig_fraction_;
};

std::unique_ptr<Sampler> make_sampler(const SamplerOptions& options,
                                      const EpSettings& settings = {});

// One-shot selections for the stateless kinds (asap, asap_approx, random,
// ts_sampling). next_batch honours options.batch.
Pair next_pair(const ExperimentState& state, const SamplerOptions& options,
               Rng& rng, FactorGraph* graph = nullptr,
               const EpSettings& settings = {});
Batch next_batch(const ExperimentState& state, const SamplerOptions& options,
                 Rng& rng, FactorGraph* graph = nullptr,
                 const EpSettings& settings = {});

// Swiss system: the first round is a uniformly random perfect matching;
// later rounds sort conditions by posterior mean (ascending, ties by index)
// and greedily pair each unpaired condition with the next unpaired one it
// has not met yet, falling back to the next unpaired one when all have been
// met. With odd n the condition left over sits the round out.
class SwissSampler : public Sampler {
 public:
  explicit SwissSampler(SamplerOptions options);
  Batch select(const ExperimentState& state, FactorGraph* graph = nullptr) override;
  void observe(std::span<const ComparisonRecord> records) override;
  std::size_t rounds_played() const { return rounds_; }
  void mark_played(std::size_t i, std::size_t j);

 private:
  std::size_t rounds_ = 0;
  std::size_t n_ = 0;
  std::vector<char> played_;
};

// Randomized quicksort driven by comparisons: every select() emits one
// partition level (each member of an unsorted segment against that
// segment's random pivot); observe() routes members to the better or worse
// side. Once every segment is a singleton the sort restarts.
class QuicksortSampler : public Sampler {
 public:
  explicit QuicksortSampler(SamplerOptions options);
  Batch select(const ExperimentState& state, FactorGraph* graph = nullptr) override;
  void observe(std::span<const ComparisonRecord> records) override;

  bool sort_complete() const;
  std::size_t completed_sorts() const { return completed_sorts_; }
  // Conditions from worst to best as found by the latest completed sort;
  // empty before the first sort completes.
  const std::vector<std::size_t>& sorted_order() const { return sorted_order_; }

  // Forces the pivot of the next partition of the segment holding `member`.
  void set_next_pivot(std::size_t member);

 private:
  struct Segment {
    std::vector<std::size_t> members;
    std::optional<std::size_t> pivot;
    std::vector<int> side;  // per member: +1 better than pivot, -1 worse, 0 unknown
  };
  void partition_pending();

  std::vector<Segment> segments_;
  std::optional<std::size_t> forced_pivot_;
  std::size_t completed_sorts_ = 0;
  std::vector<std::size_t> sorted_order_;
};

}  // namespace asap
