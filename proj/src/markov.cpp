#include "dataprobe/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "dataprobe/errors.hpp"
#include "dataprobe/parallel.hpp"

namespace dataprobe {

namespace {

constexpr double kMinNormal = std::numeric_limits<double>::min();

void check_probability_vector(std::span<const double> values, double sum_tol,
                              const char* what) {
  double sum = 0.0;
  for (const double v : values) {
    if (!(v >= 0.0)) {  // also rejects NaN
      throw ParameterError(std::string(what) + ": negative or NaN entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > sum_tol) {
    throw ParameterError(std::string(what) + ": entries sum to " +
                         std::to_string(sum) + ", expected 1");
  }
}

}  // namespace

TransitionMatrix::TransitionMatrix(std::size_t size,
                                   std::vector<double> entries)
    : size_(size), entries_(std::move(entries)) {
  if (size_ < 2) {
    throw ParameterError("transition matrix needs at least 2 states");
  }
  if (entries_.size() != size_ * size_) {
    throw ParameterError("transition matrix entry count does not match size");
  }
  for (std::size_t i = 0; i < size_; ++i) {
    check_probability_vector(row(i), kRowSumTolerance,
                             "transition matrix row");
  }
}

StationaryDistribution::StationaryDistribution(
    std::vector<double> probabilities)
    : probabilities_(std::move(probabilities)) {
  if (probabilities_.empty()) {
    throw ParameterError("stationary distribution is empty");
  }
  check_probability_vector(probabilities_, kSumTolerance,
                           "stationary distribution");
}

void ProbeGenSpec::validate() const {
  if (state_count < 2) {
    throw ParameterError("state_count must be >= 2");
  }
  if (!(concentration > 0.0)) {
    throw ParameterError("concentration must be > 0");
  }
  const double max_entropy = std::log2(static_cast<double>(state_count));
  if (!(target_entropy >= 0.0) || target_entropy > max_entropy) {
    throw ParameterError("target_entropy must lie in [0, log2(M)]");
  }
  if (num_candidates < 1) {
    throw ParameterError("num_candidates must be >= 1");
  }
}

double fixed_point_residual(const TransitionMatrix& matrix,
                            std::span<const double> pi) {
  const std::size_t m = matrix.size();
  if (pi.size() != m) {
    throw ParameterError("stationary distribution size does not match matrix");
  }
  double residual = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double next = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      next += pi[i] * matrix.at(i, j);
    }
    residual += std::abs(next - pi[j]);
  }
  return residual;
}

TransitionMatrix sample_transition_matrix(std::size_t state_count,
                                          double concentration,
                                          RandomStream& rng) {
  if (state_count < 2) {
    throw ParameterError("state_count must be >= 2");
  }
  if (!(concentration > 0.0)) {
    throw ParameterError("concentration must be > 0");
  }
  std::vector<double> entries(state_count * state_count);
  for (std::size_t i = 0; i < state_count; ++i) {
    double* row = entries.data() + i * state_count;
    double sum = 0.0;
    for (std::size_t j = 0; j < state_count; ++j) {
      // Floor keeps rows strictly positive when tiny shapes underflow.
      row[j] = std::max(rng.next_gamma(concentration), kMinNormal);
      sum += row[j];
    }
    for (std::size_t j = 0; j < state_count; ++j) {
      row[j] /= sum;
    }
  }
  return TransitionMatrix(state_count, std::move(entries));
}

StationaryDistribution stationary_distribution(const TransitionMatrix& matrix,
                                               double tol,
                                               std::size_t max_iters) {
  if (!(tol > 0.0)) {
    throw ParameterError("stationary tolerance must be > 0");
  }
  const std::size_t m = matrix.size();
  if (max_iters == 0) {
    max_iters = 100 * m;
  }
  std::vector<double> pi(m, 1.0 / static_cast<double>(m));
  std::vector<double> next(m);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double w = pi[i];
      if (w == 0.0) {
        continue;
      }
      const std::span<const double> row = matrix.row(i);
      for (std::size_t j = 0; j < m; ++j) {
        next[j] += w * row[j];
      }
    }
    double residual = 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      residual += std::abs(next[j] - pi[j]);
      sum += next[j];
    }
    for (std::size_t j = 0; j < m; ++j) {
      next[j] /= sum;
    }
    pi.swap(next);
    if (residual <= tol) {
      return StationaryDistribution(std::move(pi));
    }
  }
  throw ConvergenceError("stationary distribution did not converge within " +
                         std::to_string(max_iters) + " iterations");
}

double entropy_rate(const TransitionMatrix& matrix,
                    const StationaryDistribution& pi) {
  const std::size_t m = matrix.size();
  if (pi.size() != m) {
    throw ParameterError("stationary distribution size does not match matrix");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::span<const double> row = matrix.row(i);
    double row_entropy = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double p = row[j];
      if (p > 0.0) {
        row_entropy -= p * std::log2(p);
      }
    }
    total += pi.at(i) * row_entropy;
  }
  return total;
}

namespace {

struct Candidate {
  double entropy = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
};

std::vector<Candidate> evaluate_candidates(const ProbeGenSpec& spec,
                                           unsigned threads) {
  std::vector<Candidate> out(spec.num_candidates);
  parallel_for(spec.num_candidates, threads, [&](std::size_t i) {
    RandomStream rng = RandomStream::substream(spec.seed, i);
    const TransitionMatrix candidate =
        sample_transition_matrix(spec.state_count, spec.concentration, rng);
    try {
      const StationaryDistribution pi = stationary_distribution(candidate);
      out[i].entropy = entropy_rate(candidate, pi);
      out[i].converged = true;
    } catch (const ConvergenceError&) {
      // skipped; reported via ProbeSelection::skipped
    }
  });
  return out;
}

}  // namespace

std::vector<double> candidate_entropies(const ProbeGenSpec& spec,
                                        unsigned threads) {
  spec.validate();
  const std::vector<Candidate> candidates = evaluate_candidates(spec, threads);
  std::vector<double> out(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out[i] = candidates[i].entropy;
  }
  return out;
}

ProbeSelection select_probe(const ProbeGenSpec& spec, unsigned threads) {
  spec.validate();
  const std::vector<Candidate> candidates = evaluate_candidates(spec, threads);
  std::optional<std::size_t> best;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!candidates[i].converged) {
      ++skipped;
      continue;
    }
    if (!best || std::abs(candidates[i].entropy - spec.target_entropy) <
                     std::abs(candidates[*best].entropy -
                              spec.target_entropy)) {
      best = i;
    }
  }
  if (!best) {
    throw GenerationError(
        "no candidate chain converged; all " +
        std::to_string(spec.num_candidates) + " were skipped");
  }
  // Regenerate the winner from its stream; sampling is the only draw.
  RandomStream rng = RandomStream::substream(spec.seed, *best);
  TransitionMatrix matrix =
      sample_transition_matrix(spec.state_count, spec.concentration, rng);
  StationaryDistribution pi = stationary_distribution(matrix);
  return ProbeSelection{std::move(matrix), std::move(pi),
                        candidates[*best].entropy, *best, skipped};
}

TokenId sample_categorical(std::span<const double> weights, double u) {
  double total = 0.0;
  for (const double w : weights) {
    total += w;
  }
  if (!(total > 0.0)) {
    throw ParameterError("categorical weights sum to zero");
  }
  const double threshold = u * total;
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] > 0.0) {
      cum += weights[j];
      last_positive = j;
      if (cum > threshold) {
        return static_cast<TokenId>(j);
      }
    }
  }
  return static_cast<TokenId>(last_positive);  // u at the very top of the cdf
}

TokenSequence sample_sequence(const TransitionMatrix& matrix,
                              const StationaryDistribution& pi,
                              std::size_t length, RandomStream& rng) {
  if (length < 1) {
    throw ParameterError("sequence length must be >= 1");
  }
  if (pi.size() != matrix.size()) {
    throw ParameterError("stationary distribution size does not match matrix");
  }
  TokenSequence tokens;
  tokens.reserve(length);
  tokens.push_back(sample_categorical(pi.values(), rng.next_unit()));
  for (std::size_t t = 1; t < length; ++t) {
    tokens.push_back(
        sample_categorical(matrix.row(tokens.back()), rng.next_unit()));
  }
  return tokens;
}

double sequence_nll(const TransitionMatrix& matrix,
                    const StationaryDistribution& pi,
                    const TokenSequence& tokens, NllMode mode) {
  if (tokens.empty()) {
    throw ParameterError("cannot score an empty sequence");
  }
  if (mode == NllMode::kConditionalOnFirst && tokens.size() < 2) {
    throw ParameterError("conditional scoring needs at least 2 tokens");
  }
  const std::size_t m = matrix.size();
  for (const TokenId t : tokens) {
    if (t >= m) {
      throw ParameterError("token " + std::to_string(t) +
                           " outside vocabulary of size " + std::to_string(m));
    }
  }
  double bits = 0.0;
  bool impossible = false;
  if (mode == NllMode::kJoint) {
    const double p0 = pi.at(tokens.front());
    if (p0 > 0.0) {
      bits -= std::log2(p0);
    } else {
      impossible = true;
    }
  }
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const double p = matrix.at(tokens[t - 1], tokens[t]);
    if (p > 0.0) {
      bits -= std::log2(p);
    } else {
      impossible = true;
    }
  }
  if (impossible) {
    return std::numeric_limits<double>::infinity();
  }
  const double denom = mode == NllMode::kJoint
                           ? static_cast<double>(tokens.size())
                           : static_cast<double>(tokens.size() - 1);
  return bits / denom;
}

}  // namespace dataprobe
