#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace asap {

// Base class for all domain errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A comparison history (or an input file) violates a structural invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Posterior inference failed numerically.
class InferenceError : public Error {
 public:
  using Error::Error;
};

// Observer model shared by inference, information gain and simulation.
struct ModelConfig {
  double beta = 1.0;            // observer-noise scale
  double prior_mean = 0.0;      // shared prior mean of every score
  double prior_variance = 0.5;  // shared prior variance of every score

  // Throws std::invalid_argument when beta or prior_variance is not positive.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Outcome sign convention: +1 means `first` was preferred, -1 means `second`.
inline constexpr int kFirstPreferred = +1;
inline constexpr int kSecondPreferred = -1;

struct ComparisonRecord {
  std::size_t trial_index = 0;
  std::size_t first = 0;
  std::size_t second = 0;
  int outcome = kFirstPreferred;

  friend bool operator==(const ComparisonRecord&,
                         const ComparisonRecord&) = default;
};

struct GaussianScore {
  double mean = 0.0;
  double variance = 1.0;

  friend bool operator==(const GaussianScore&, const GaussianScore&) = default;
};

// Diagonal multivariate Gaussian over the n condition scores.
struct ScorePosterior {
  std::vector<GaussianScore> scores;

  ScorePosterior() = default;
  explicit ScorePosterior(std::vector<GaussianScore> s) : scores(std::move(s)) {}

  // Every score set to N(config.prior_mean, config.prior_variance).
  static ScorePosterior prior(std::size_t n, const ModelConfig& config);

  std::size_t size() const { return scores.size(); }
  const GaussianScore& operator[](std::size_t i) const { return scores[i]; }
  GaussianScore& operator[](std::size_t i) { return scores[i]; }

  std::vector<double> means() const;

  friend bool operator==(const ScorePosterior&, const ScorePosterior&) = default;
};

// Unordered pair of conditions. Stored canonically with first < second
// whenever it is produced by a sampler.
struct Pair {
  std::size_t first = 0;
  std::size_t second = 0;

  static Pair canonical(std::size_t a, std::size_t b) {
    return a < b ? Pair{a, b} : Pair{b, a};
  }

  friend bool operator==(const Pair&, const Pair&) = default;
  friend auto operator<=>(const Pair&, const Pair&) = default;
};

// Number of distinct unordered pairs, n(n-1)/2.
std::size_t pairs_per_standard_trial(std::size_t n);

// num_comparisons expressed in standard trials. Throws std::invalid_argument
// for n < 2.
double standard_trials(std::size_t n, std::size_t num_comparisons);

// Condition count, append-only comparison history, model configuration and a
// cached posterior. The posterior is either consistent with the history or
// flagged stale; callers decide when to refresh it.
class ExperimentState {
 public:
  explicit ExperimentState(std::size_t n, ModelConfig config = {});

  std::size_t n() const { return n_; }
  const ModelConfig& config() const { return config_; }
  std::span<const ComparisonRecord> history() const { return history_; }
  std::size_t num_comparisons() const { return history_.size(); }
  double standard_trials() const;

  const ScorePosterior& posterior() const { return posterior_; }
  bool posterior_stale() const { return stale_; }

  // Appends the next record (trial index assigned automatically) and marks
  // the posterior stale. Throws ValidationError on an invalid record.
  const ComparisonRecord& append(std::size_t first, std::size_t second,
                                 int outcome);

  // Installs a posterior computed for the current history.
  void set_posterior(ScorePosterior posterior);

 private:
  std::size_t n_;
  ModelConfig config_;
  std::vector<ComparisonRecord> history_;
  ScorePosterior posterior_;
  bool stale_ = false;
};

// Checks a single record against the condition count. Throws ValidationError
// naming the trial.
void validate_record(const ComparisonRecord& record, std::size_t n);

// Checks every record and that trial indices run 0, 1, 2, ...
void validate_history(std::span<const ComparisonRecord> history, std::size_t n);
void validate_history(const ExperimentState& state);

}  // namespace asap
