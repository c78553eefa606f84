#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dataprobe/rng.hpp"

namespace dataprobe {

using TokenId = std::uint32_t;

// Integer token/state sequence; the common currency between the generator,
// the models, and the diagnostics.
using TokenSequence = std::vector<TokenId>;

// Row-stochastic transition matrix over M >= 2 states. Validated at
// construction: entries nonnegative, each row sums to 1 within 1e-9.
class TransitionMatrix {
 public:
  TransitionMatrix(std::size_t size, std::vector<double> entries);

  std::size_t size() const { return size_; }
  double at(std::size_t i, std::size_t j) const {
    return entries_[i * size_ + j];
  }
  std::span<const double> row(std::size_t i) const {
    return {entries_.data() + i * size_, size_};
  }
  const std::vector<double>& entries() const { return entries_; }

  static constexpr double kRowSumTolerance = 1e-9;

 private:
  std::size_t size_;
  std::vector<double> entries_;  // row-major, size_ * size_
};

// Probability vector fixed under an associated transition matrix.
// Construction checks nonnegativity and unit sum; the fixed-point residual
// against a particular matrix is checked where the pairing is known
// (stationary_distribution postcondition, chain-file load).
class StationaryDistribution {
 public:
  explicit StationaryDistribution(std::vector<double> probabilities);

  std::size_t size() const { return probabilities_.size(); }
  double at(std::size_t i) const { return probabilities_[i]; }
  std::span<const double> values() const { return probabilities_; }

  static constexpr double kSumTolerance = 1e-9;
  static constexpr double kResidualBound = 1e-8;

 private:
  std::vector<double> probabilities_;
};

// Parameters for the entropy-targeted candidate search.
struct ProbeGenSpec {
  std::size_t state_count = 0;      // M >= 2
  double concentration = 0.0;       // Dirichlet alpha > 0
  double target_entropy = 0.0;      // bits/token, in [0, log2(M)]
  std::size_t num_candidates = 1;   // K >= 1
  std::uint64_t seed = 0;

  void validate() const;  // throws ParameterError
};

// Result of the candidate search: the winning chain, its invariant measure,
// and bookkeeping about the search itself.
struct ProbeSelection {
  TransitionMatrix matrix;
  StationaryDistribution stationary;
  double achieved_entropy = 0.0;    // bits/token
  std::size_t candidate_index = 0;  // which of the K candidates won
  std::size_t skipped = 0;          // candidates dropped for non-convergence
};

// Scoring conventions for sequence_nll. ConditionalOnFirst averages the
// transition surprisals over n-1 steps (the first token is treated as a
// prompt); Joint also charges the initial token against pi and divides by n.
enum class NllMode { kConditionalOnFirst, kJoint };

// || pi * P - pi ||_1
double fixed_point_residual(const TransitionMatrix& matrix,
                            std::span<const double> pi);

// One row per state, independently drawn from Dirichlet(alpha, ..., alpha).
// Gamma draws are floored at the smallest normal double before normalizing,
// so rows are strictly positive (the distribution itself puts no mass on
// exact zeros; only fp underflow would).
TransitionMatrix sample_transition_matrix(std::size_t state_count,
                                          double concentration,
                                          RandomStream& rng);

// Power iteration from the uniform vector. Throws ConvergenceError when the
// L1 residual does not reach tol within max_iters (0 = 100 * M) iterations.
StationaryDistribution stationary_distribution(const TransitionMatrix& matrix,
                                               double tol = 1e-10,
                                               std::size_t max_iters = 0);

// -sum_i pi_i sum_j P_ij log2 P_ij, with 0 * log2(0) = 0. Bits per token.
double entropy_rate(const TransitionMatrix& matrix,
                    const StationaryDistribution& pi);

// Draws spec.num_candidates chains (candidate i uses the stream derived from
// (spec.seed, i)) and keeps the one whose entropy rate is closest to the
// target; ties break toward the lowest candidate index. Candidates whose
// stationary distribution fails to converge are skipped. `threads` > 1
// evaluates candidates in parallel without changing the result.
ProbeSelection select_probe(const ProbeGenSpec& spec, unsigned threads = 1);

// Like select_probe but returns every candidate's entropy rate (NaN for
// skipped candidates). Backs the per-alpha distribution sweep.
std::vector<double> candidate_entropies(const ProbeGenSpec& spec,
                                        unsigned threads = 1);

// First token from pi, then one categorical draw per transition row.
TokenSequence sample_sequence(const TransitionMatrix& matrix,
                              const StationaryDistribution& pi,
                              std::size_t length, RandomStream& rng);

// Average negative log2-likelihood of `tokens` under the chain, in bits per
// token. A zero-probability step yields +infinity rather than an error.
double sequence_nll(const TransitionMatrix& matrix,
                    const StationaryDistribution& pi,
                    const TokenSequence& tokens,
                    NllMode mode = NllMode::kConditionalOnFirst);

// Shared categorical sampler: walks the cumulative sum of `weights` until it
// exceeds u * sum(weights). Both the chain sampler and the decoder draw
// through this function, so equal weights and equal uniforms give equal
// tokens.
TokenId sample_categorical(std::span<const double> weights, double u);

}  // namespace dataprobe
