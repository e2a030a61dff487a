#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "asap/gaussian.hpp"
#include "asap/types.hpp"

namespace asap {

// Interval true scores are drawn from, uniformly.
struct ScoreRange {
  double lo = 0.0;
  double hi = 5.0;

  static constexpr ScoreRange small() { return {0.0, 1.0}; }
  static constexpr ScoreRange medium() { return {0.0, 5.0}; }
  static constexpr ScoreRange large() { return {0.0, 20.0}; }

  // "small", "medium", "large" or explicit bounds "lo:hi".
  static ScoreRange parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const ScoreRange&, const ScoreRange&) = default;
};

// Square matrix of preference counts: at(i, j) = times i was preferred over j.
class CountMatrix {
 public:
  CountMatrix() = default;
  // Throws ValidationError on a non-square shape or nonzero diagonal.
  CountMatrix(std::size_t n, std::vector<std::uint64_t> counts);

  std::size_t n() const { return n_; }
  std::uint64_t at(std::size_t i, std::size_t j) const { return counts_[i * n_ + j]; }
  std::uint64_t total() const;
  // Empirical P(i preferred over j); throws ValidationError when the pair
  // was never compared.
  double probability(std::size_t i, std::size_t j) const;
  // True when every pair has at least one observation.
  bool complete() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> counts_;
};

// CSV without header: n rows of n non-negative integers. Errors name the
// offending row and column (1-based).
CountMatrix parse_comparison_matrix(std::istream& in);
CountMatrix load_comparison_matrix(const std::filesystem::path& path);

// One record per counted preference, pairs in row-major order.
std::vector<ComparisonRecord> expand_to_history(const CountMatrix& counts);

// Either point scores (synthetic observers) or an empirical count matrix
// (replayed observers).
class GroundTruth {
 public:
  explicit GroundTruth(std::vector<double> scores);
  explicit GroundTruth(CountMatrix counts);

  std::size_t n() const;
  bool is_replay() const { return std::holds_alternative<CountMatrix>(source_); }
  const std::vector<double>& scores() const { return std::get<std::vector<double>>(source_); }
  const CountMatrix& counts() const { return std::get<CountMatrix>(source_); }

  // Probability that `first` is preferred over `second`: Phi((s_i - s_j) /
  // (sqrt(2) beta)) for point scores, C_ij / (C_ij + C_ji) for replay.
  double preference_probability(std::size_t first, std::size_t second,
                                const ModelConfig& config) const;

 private:
  std::variant<std::vector<double>, CountMatrix> source_;
};

std::vector<double> draw_scores(std::size_t n, ScoreRange range, Rng& rng);

// +1 when `first` is preferred, -1 otherwise.
int draw_outcome(const GroundTruth& truth, std::size_t first,
                 std::size_t second, const ModelConfig& config, Rng& rng);

}  // namespace asap
