#include "asap/ground_truth.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace asap {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string cell(std::size_t row, std::size_t col) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

}  // namespace

ScoreRange ScoreRange::parse(std::string_view text) {
  if (text == "small") return small();
  if (text == "medium") return medium();
  if (text == "large") return large();
  const auto colon = text.find(':');
  if (colon != std::string_view::npos) {
    ScoreRange r;
    const std::string lo(text.substr(0, colon));
    const std::string hi(text.substr(colon + 1));
    try {
      std::size_t used_lo = 0, used_hi = 0;
      r.lo = std::stod(lo, &used_lo);
      r.hi = std::stod(hi, &used_hi);
      if (used_lo == lo.size() && used_hi == hi.size() && r.lo < r.hi &&
          std::isfinite(r.lo) && std::isfinite(r.hi)) {
        return r;
      }
    } catch (const std::exception&) {
    }
  }
  throw std::invalid_argument("invalid range '" + std::string(text) +
                              "' (expected small, medium, large or lo:hi)");
}

std::string ScoreRange::to_string() const {
  if (*this == small()) return "small";
  if (*this == medium()) return "medium";
  if (*this == large()) return "large";
  std::ostringstream out;
  out << lo << ':' << hi;
  return out.str();
}

CountMatrix::CountMatrix(std::size_t n, std::vector<std::uint64_t> counts)
    : n_(n), counts_(std::move(counts)) {
  if (counts_.size() != n_ * n_) {
    throw ValidationError("count matrix is not square");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (at(i, i) != 0) {
      throw ValidationError("nonzero diagonal at " + cell(i + 1, i + 1));
    }
  }
}

std::uint64_t CountMatrix::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts_) sum += c;
  return sum;
}

double CountMatrix::probability(std::size_t i, std::size_t j) const {
  const std::uint64_t both = at(i, j) + at(j, i);
  if (both == 0) {
    throw ValidationError("pair (" + std::to_string(i) + "," +
                          std::to_string(j) + ") has no observations");
  }
  return static_cast<double>(at(i, j)) / static_cast<double>(both);
}

bool CountMatrix::complete() const {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (at(i, j) + at(j, i) == 0) return false;
    }
  }
  return true;
}

CountMatrix parse_comparison_matrix(std::istream& in) {
  std::vector<std::vector<std::uint64_t>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::uint64_t> row;
    std::string_view rest = line;
    std::size_t col = 0;
    while (true) {
      ++col;
      const auto comma = rest.find(',');
      const std::string_view field = trim(rest.substr(0, comma));
      if (field.empty()) throw ValidationError("empty field at " + cell(line_no, col));
      if (field.front() == '-') {
        throw ValidationError("negative count at " + cell(line_no, col));
      }
      std::uint64_t value = 0;
      const auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ValidationError("not a non-negative integer at " +
                              cell(line_no, col) + ": '" + std::string(field) + "'");
      }
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("comparison matrix is empty");
  const std::size_t n = rows.size();
  std::vector<std::uint64_t> flat;
  flat.reserve(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    if (rows[r].size() != n) {
      throw ValidationError("matrix is not square: row " + std::to_string(r + 1) +
                            " has " + std::to_string(rows[r].size()) +
                            " columns, expected " + std::to_string(n));
    }
    flat.insert(flat.end(), rows[r].begin(), rows[r].end());
  }
  if (n < 2) throw ValidationError("comparison matrix needs at least 2 conditions");
  return CountMatrix(n, std::move(flat));
}

CountMatrix load_comparison_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_comparison_matrix(in);
}

std::vector<ComparisonRecord> expand_to_history(const CountMatrix& counts) {
  std::vector<ComparisonRecord> history;
  history.reserve(counts.total());
  for (std::size_t i = 0; i < counts.n(); ++i) {
    for (std::size_t j = i + 1; j < counts.n(); ++j) {
      for (std::uint64_t k = 0; k < counts.at(i, j); ++k) {
        history.push_back({history.size(), i, j, kFirstPreferred});
      }
      for (std::uint64_t k = 0; k < counts.at(j, i); ++k) {
        history.push_back({history.size(), i, j, kSecondPreferred});
      }
    }
  }
  return history;
}

GroundTruth::GroundTruth(std::vector<double> scores) : source_(std::move(scores)) {
  for (double s : std::get<std::vector<double>>(source_)) {
    if (!std::isfinite(s)) throw ValidationError("ground-truth score is not finite");
  }
}

GroundTruth::GroundTruth(CountMatrix counts) : source_(std::move(counts)) {}

std::size_t GroundTruth::n() const {
  return is_replay() ? counts().n() : scores().size();
}

double GroundTruth::preference_probability(std::size_t first, std::size_t second,
                                           const ModelConfig& config) const {
  if (first >= n() || second >= n() || first == second) {
    throw std::invalid_argument("preference_probability: invalid pair");
  }
  if (is_replay()) return counts().probability(first, second);
  const auto& s = scores();
  return normal_cdf((s[first] - s[second]) / (std::numbers::sqrt2 * config.beta));
}

std::vector<double> draw_scores(std::size_t n, ScoreRange range, Rng& rng) {
  std::vector<double> s(n);
  for (auto& x : s) x = range.lo + (range.hi - range.lo) * uniform01(rng);
  return s;
}

int draw_outcome(const GroundTruth& truth, std::size_t first, std::size_t second,
                 const ModelConfig& config, Rng& rng) {
  const double p = truth.preference_probability(first, second, config);
  return uniform01(rng) < p ? kFirstPreferred : kSecondPreferred;
}

}  // namespace asap
