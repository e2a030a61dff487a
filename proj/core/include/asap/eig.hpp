#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "asap/gaussian.hpp"
#include "asap/inference.hpp"
#include "asap/types.hpp"

namespace asap {

// How hypothetical posteriors are obtained when scoring a candidate pair.
enum class EigMode {
  full,    // EP over the whole history plus the hypothetical comparison
  approx,  // one ADF step on the current marginals of the pair only
};

// KL(p || q) for one-dimensional Gaussians.
double kl_divergence(const GaussianScore& p, const GaussianScore& q);

// KL(p || q) for diagonal Gaussians: the sum of per-dimension terms.
// Throws std::invalid_argument on a length mismatch or non-positive variance.
double kl_divergence_diag_gaussian(const ScorePosterior& p,
                                   const ScorePosterior& q);

// Expected information gain per unordered pair. Entries are mirrored so that
// gain(i, j) == gain(j, i); pairs skipped by the roulette hold no value.
class EigMatrix {
 public:
  explicit EigMatrix(std::size_t n);

  std::size_t n() const { return n_; }
  bool evaluated(std::size_t i, std::size_t j) const {
    return evaluated_[i * n_ + j] != 0;
  }
  // Gain of an evaluated pair; std::nullopt when skipped or i == j.
  std::optional<double> gain(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, double gain);

  std::size_t num_evaluated() const { return num_evaluated_; }
  double evaluated_fraction() const;

 private:
  std::size_t n_;
  std::size_t num_evaluated_ = 0;
  std::vector<double> gain_;
  std::vector<char> evaluated_;
};

// Roulette probabilities for selective evaluation.
//   raw(i, j)        = min(p_ij, p_ji)            in [0, 0.5]
//   normalized(i, j) = raw(i, j) / max_k raw(i, k) in (0, 1]
class SelectionProbabilityMatrix {
 public:
  SelectionProbabilityMatrix(std::size_t n, std::vector<double> raw,
                             std::vector<double> normalized)
      : n_(n), raw_(std::move(raw)), normalized_(std::move(normalized)) {}

  std::size_t n() const { return n_; }
  double raw(std::size_t i, std::size_t j) const { return raw_[i * n_ + j]; }
  double normalized(std::size_t i, std::size_t j) const {
    return normalized_[i * n_ + j];
  }
  // Evaluation threshold of the unordered pair: the larger of its two
  // row-normalized entries, so each condition's least predictable pair is
  // always evaluated.
  double threshold(std::size_t i, std::size_t j) const {
    return std::max(normalized(i, j), normalized(j, i));
  }

 private:
  std::size_t n_;
  std::vector<double> raw_;
  std::vector<double> normalized_;
};

// Throws std::invalid_argument for fewer than two conditions.
SelectionProbabilityMatrix selection_probabilities(const ScorePosterior& posterior,
                                                   const ModelConfig& config);

// Scores candidate pairs against a fixed experiment state. In full mode the
// hypothetical posteriors are warm-started from `graph`, which must hold the
// state's history at its fixed point; it is returned unchanged. Without a
// graph one is built from the history.
class EigEvaluator {
 public:
  EigEvaluator(const ExperimentState& state, EigMode mode,
               FactorGraph* graph = nullptr, EpSettings settings = {});

  // p_ij KL(post+ || current) + (1 - p_ij) KL(post- || current).
  double pair_eig(std::size_t i, std::size_t j);

  // One uniform draw per unordered pair in lexicographic order is taken from
  // `rng` up front; with `selective`, pair (i, j) is evaluated iff its
  // draw falls below the roulette threshold.
  EigMatrix matrix(bool selective, Rng& rng);

 private:
  double kl_against_current_full();
  double pair_eig_full(std::size_t i, std::size_t j);
  double pair_eig_approx(std::size_t i, std::size_t j);

  const ExperimentState& state_;
  EigMode mode_;
  EpSettings settings_;
  std::optional<FactorGraph> owned_;
  FactorGraph* graph_ = nullptr;
};

double pair_eig(const ExperimentState& state, std::size_t i, std::size_t j,
                EigMode mode, const EpSettings& settings = {});

EigMatrix eig_matrix(const ExperimentState& state, EigMode mode,
                     bool selective, Rng& rng, const EpSettings& settings = {});

}  // namespace asap
