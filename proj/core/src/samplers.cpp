#include "asap/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "asap/mst.hpp"

namespace asap {

namespace {

constexpr double kTieTolerance = 1e-12;

Pair uniform_pair(std::size_t n, Rng& rng) {
  const std::size_t i = uniform_index(rng, n);
  std::size_t j = uniform_index(rng, n - 1);
  if (j >= i) ++j;
  return Pair::canonical(i, j);
}

Pair best_match(const ExperimentState& state, Rng& rng) {
  const auto& post = state.posterior();
  double best = -1.0;
  std::vector<Pair> ties;
  for (std::size_t i = 0; i < state.n(); ++i) {
    for (std::size_t j = i + 1; j < state.n(); ++j) {
      const double q = match_quality(post[i], post[j], state.config());
      if (q > best * (1.0 + kTieTolerance)) {
        best = q;
        ties.assign(1, Pair{i, j});
      } else if (q >= best * (1.0 - kTieTolerance)) {
        ties.push_back(Pair{i, j});
      }
    }
  }
  return ties.size() == 1 ? ties.front() : ties[uniform_index(rng, ties.size())];
}

void require_fresh(const ExperimentState& state) {
  if (state.posterior_stale()) {
    throw std::logic_error("sampler requires a fresh posterior");
  }
}

EigMode eig_mode(SamplerKind kind) {
  return kind == SamplerKind::asap ? EigMode::full : EigMode::approx;
}

class EigSampler final : public Sampler {
 public:
  EigSampler(SamplerOptions options, EpSettings settings)
      : Sampler(options), settings_(settings) {}

  Batch select(const ExperimentState& state, FactorGraph* graph) override {
    require_fresh(state);
    const EigMode mode = eig_mode(options_.kind);
    EigEvaluator evaluator(state, mode, mode == EigMode::full ? graph : nullptr,
                           settings_);
    const EigMatrix gains = evaluator.matrix(options_.selective, rng_);
    last_eig_fraction_ = gains.evaluated_fraction();
    if (options_.batch) return mst_batch(gains);
    return {argmax_pair(gains, rng_)};
  }

 private:
  EpSettings settings_;
};

class RandomSampler final : public Sampler {
 public:
  using Sampler::Sampler;
  Batch select(const ExperimentState& state, FactorGraph*) override {
    return {uniform_pair(state.n(), rng_)};
  }
};

class MatchmakingSampler final : public Sampler {
 public:
  using Sampler::Sampler;
  Batch select(const ExperimentState& state, FactorGraph*) override {
    require_fresh(state);
    return {best_match(state, rng_)};
  }
};

}  // namespace

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::asap: return "asap";
    case SamplerKind::asap_approx: return "asap_approx";
    case SamplerKind::random: return "random";
    case SamplerKind::quicksort: return "quicksort";
    case SamplerKind::swiss: return "swiss";
    case SamplerKind::ts_sampling: return "ts_sampling";
  }
  return "unknown";
}

SamplerKind parse_sampler_kind(std::string_view name) {
  for (SamplerKind k : {SamplerKind::asap, SamplerKind::asap_approx,
                        SamplerKind::random, SamplerKind::quicksort,
                        SamplerKind::swiss, SamplerKind::ts_sampling}) {
    if (name == to_string(k)) return k;
  }
  if (name == "fpc") return SamplerKind::random;
  throw std::invalid_argument("unknown sampler '" + std::string(name) + "'");
}

PosteriorPolicy posterior_policy(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::asap:
    case SamplerKind::swiss:
      return PosteriorPolicy::full;
    case SamplerKind::asap_approx:
    case SamplerKind::ts_sampling:
      return PosteriorPolicy::online;
    case SamplerKind::random:
    case SamplerKind::quicksort:
      return PosteriorPolicy::none;
  }
  return PosteriorPolicy::none;
}

double match_quality(const GaussianScore& i, const GaussianScore& j,
                     const ModelConfig& config) {
  const double b2 = 2.0 * config.beta * config.beta;
  const double denom = b2 + i.variance + j.variance;
  const double d = i.mean - j.mean;
  return std::sqrt(b2 / denom) * std::exp(-d * d / (2.0 * denom));
}

Pair argmax_pair(const EigMatrix& gains, Rng& rng) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<Pair> ties;
  for (std::size_t i = 0; i < gains.n(); ++i) {
    for (std::size_t j = i + 1; j < gains.n(); ++j) {
      const auto g = gains.gain(i, j);
      if (!g) continue;
      if (ties.empty() || *g > best + kTieTolerance * std::fabs(best)) {
        best = *g;
        ties.assign(1, Pair{i, j});
      } else if (*g >= best - kTieTolerance * std::fabs(best)) {
        ties.push_back(Pair{i, j});
      }
    }
  }
  if (ties.empty()) throw std::logic_error("argmax_pair: no evaluated pair");
  return ties.size() == 1 ? ties.front() : ties[uniform_index(rng, ties.size())];
}

std::vector<double> reciprocal_gain_weights(const EigMatrix& gains) {
  const std::size_t n = gains.n();
  std::vector<double> w(n * n, 0.0);
  double largest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto g = gains.gain(i, j);
      if (!g || !(*g > 0.0)) continue;
      const double r = 1.0 / *g;
      if (!std::isfinite(r)) continue;
      w[i * n + j] = w[j * n + i] = r;
      largest = std::max(largest, r);
    }
  }
  const double fallback = largest > 0.0 ? 10.0 * largest : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && w[i * n + j] == 0.0) w[i * n + j] = fallback;
    }
  }
  return w;
}

Batch mst_batch(const EigMatrix& gains) {
  return mst(gains.n(), reciprocal_gain_weights(gains));
}

Sampler::Sampler(SamplerOptions options)
    : options_(options), rng_(options.seed) {}

void Sampler::observe(std::span<const ComparisonRecord>) {}

Pair next_pair(const ExperimentState& state, const SamplerOptions& options,
               Rng& rng, FactorGraph* graph, const EpSettings& settings) {
  switch (options.kind) {
    case SamplerKind::asap:
    case SamplerKind::asap_approx: {
      require_fresh(state);
      const EigMode mode = eig_mode(options.kind);
      EigEvaluator evaluator(state, mode,
                             mode == EigMode::full ? graph : nullptr, settings);
      return argmax_pair(evaluator.matrix(options.selective, rng), rng);
    }
    case SamplerKind::random:
      return uniform_pair(state.n(), rng);
    case SamplerKind::ts_sampling:
      require_fresh(state);
      return best_match(state, rng);
    case SamplerKind::quicksort:
    case SamplerKind::swiss:
      break;
  }
  throw std::invalid_argument("next_pair: " + std::string(to_string(options.kind)) +
                              " keeps round state; use its Sampler");
}

Batch next_batch(const ExperimentState& state, const SamplerOptions& options,
                 Rng& rng, FactorGraph* graph, const EpSettings& settings) {
  if ((options.kind == SamplerKind::asap ||
       options.kind == SamplerKind::asap_approx) &&
      options.batch) {
    require_fresh(state);
    const EigMode mode = eig_mode(options.kind);
    EigEvaluator evaluator(state, mode, mode == EigMode::full ? graph : nullptr,
                           settings);
    return mst_batch(evaluator.matrix(options.selective, rng));
  }
  return {next_pair(state, options, rng, graph, settings)};
}

// Swiss system.

SwissSampler::SwissSampler(SamplerOptions options) : Sampler(options) {}

void SwissSampler::mark_played(std::size_t i, std::size_t j) {
  if (n_ == 0 || i >= n_ || j >= n_) return;
  played_[i * n_ + j] = played_[j * n_ + i] = 1;
}

void SwissSampler::observe(std::span<const ComparisonRecord> records) {
  for (const auto& r : records) mark_played(r.first, r.second);
}

Batch SwissSampler::select(const ExperimentState& state, FactorGraph*) {
  if (n_ != state.n()) {
    n_ = state.n();
    played_.assign(n_ * n_, 0);
  }
  Batch batch;
  std::vector<std::size_t> order(n_);
  std::iota(order.begin(), order.end(), 0);
  if (rounds_ == 0) {
    for (std::size_t k = n_; k > 1; --k) {
      std::swap(order[k - 1], order[uniform_index(rng_, k)]);
    }
    for (std::size_t k = 0; k + 1 < n_; k += 2) {
      batch.push_back(Pair::canonical(order[k], order[k + 1]));
    }
  } else {
    require_fresh(state);
    const auto& post = state.posterior();
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return post[a].mean < post[b].mean;
                     });
    std::vector<std::size_t> open(order.begin(), order.end());
    while (open.size() >= 2) {
      const std::size_t a = open.front();
      std::size_t pick = 1;
      for (std::size_t k = 1; k < open.size(); ++k) {
        if (!played_[a * n_ + open[k]]) {
          pick = k;
          break;
        }
      }
      batch.push_back(Pair::canonical(a, open[pick]));
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
      open.erase(open.begin());
    }
  }
  ++rounds_;
  return batch;
}

// Quicksort.

QuicksortSampler::QuicksortSampler(SamplerOptions options) : Sampler(options) {}

bool QuicksortSampler::sort_complete() const {
  return std::all_of(segments_.begin(), segments_.end(), [](const Segment& s) {
    return s.members.size() <= 1 && !s.pivot;
  });
}

void QuicksortSampler::set_next_pivot(std::size_t member) {
  forced_pivot_ = member;
}

void QuicksortSampler::observe(std::span<const ComparisonRecord> records) {
  for (const auto& r : records) {
    for (auto& s : segments_) {
      if (!s.pivot) continue;
      const std::size_t pivot = *s.pivot;
      std::size_t member;
      int member_sign;
      if (r.second == pivot) {
        member = r.first;
        member_sign = r.outcome;
      } else if (r.first == pivot) {
        member = r.second;
        member_sign = -r.outcome;
      } else {
        continue;
      }
      auto it = std::find(s.members.begin(), s.members.end(), member);
      if (it == s.members.end()) continue;
      s.side[static_cast<std::size_t>(it - s.members.begin())] = member_sign;
      break;
    }
  }
}

void QuicksortSampler::partition_pending() {
  std::vector<Segment> next;
  for (auto& s : segments_) {
    if (!s.pivot) {
      next.push_back(std::move(s));
      continue;
    }
    Segment worse, pivot, better;
    pivot.members.push_back(*s.pivot);
    for (std::size_t k = 0; k < s.members.size(); ++k) {
      const std::size_t m = s.members[k];
      if (m == *s.pivot) continue;
      int side = s.side[k];
      // An unanswered comparison leaves the member on a random side.
      if (side == 0) side = uniform_index(rng_, 2) == 0 ? -1 : 1;
      (side > 0 ? better : worse).members.push_back(m);
    }
    for (Segment* part : {&worse, &pivot, &better}) {
      if (!part->members.empty()) next.push_back(std::move(*part));
    }
  }
  segments_ = std::move(next);
}

Batch QuicksortSampler::select(const ExperimentState& state, FactorGraph*) {
  partition_pending();
  if (sort_complete()) {
    if (!segments_.empty()) {
      ++completed_sorts_;
      sorted_order_.clear();
      for (const auto& s : segments_) {
        sorted_order_.insert(sorted_order_.end(), s.members.begin(), s.members.end());
      }
    }
    Segment all;
    all.members.resize(state.n());
    std::iota(all.members.begin(), all.members.end(), 0);
    segments_.assign(1, std::move(all));
  }
  Batch batch;
  for (auto& s : segments_) {
    if (s.members.size() < 2) continue;
    std::size_t pivot = s.members[uniform_index(rng_, s.members.size())];
    if (forced_pivot_ &&
        std::find(s.members.begin(), s.members.end(), *forced_pivot_) !=
            s.members.end()) {
      pivot = *forced_pivot_;
      forced_pivot_.reset();
    }
    s.pivot = pivot;
    s.side.assign(s.members.size(), 0);
    for (std::size_t m : s.members) {
      if (m != pivot) batch.push_back(Pair::canonical(m, pivot));
    }
  }
  return batch;
}

std::unique_ptr<Sampler> make_sampler(const SamplerOptions& options,
                                      const EpSettings& settings) {
  switch (options.kind) {
    case SamplerKind::asap:
    case SamplerKind::asap_approx:
      return std::make_unique<EigSampler>(options, settings);
    case SamplerKind::random:
      return std::make_unique<RandomSampler>(options);
    case SamplerKind::quicksort:
      return std::make_unique<QuicksortSampler>(options);
    case SamplerKind::swiss:
      return std::make_unique<SwissSampler>(options);
    case SamplerKind::ts_sampling:
      return std::make_unique<MatchmakingSampler>(options);
  }
  throw std::invalid_argument("make_sampler: unknown kind");
}

}  // namespace asap
