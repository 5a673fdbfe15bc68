#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stm/estimator.hpp"
#include "stm/synthgen.hpp"
#include "stm/types.hpp"

namespace stm {

/// Column alignment of an estimate against a reference.
struct Alignment {
  /// min over permutations of sum_k ||A_hat[., perm[k]] - A_ref[., k]||_1,
  /// divided by K.
  double loss = 0.0;
  /// permutation[k] = column of A_hat matched to reference column k.
  std::vector<Index> permutation;
};

/// Exact optimal assignment on the K x K column-distance matrix
/// (augmenting-path algorithm, O(K^3)).
Alignment aligned_l1_loss(const TopicMatrix& a_hat, const TopicMatrix& a_ref);

struct SweepResult {
  double grid_value = 0.0;  // eta, or n*N for rate sweeps
  int reps_completed = 0;
  int reps_failed = 0;
  double mean_loss = 0.0;
  double sd_loss = 0.0;   // sample standard deviation across repetitions
  double sparsity = 0.0;  // exact sparsity of the reference A
  double seconds = 0.0;
};

struct SweepConfig {
  SynthConfig synth;
  StmConfig estimator;
  std::vector<double> etas;     // sparsity sweep grid
  std::vector<double> factors;  // rate sweep: multipliers on n
  int reps = 50;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// For each eta: sparsify the base A, then run `reps` independent corpora
/// through the estimator with the true anchors. Failed repetitions are
/// logged in reps_failed and excluded from the mean. All numbers except the
/// wall-time are independent of the thread count.
std::vector<SweepResult> sweep_sparsity(const SweepConfig& cfg);

struct RateSweep {
  std::vector<SweepResult> rows;
  /// Least-squares slope of log(mean loss) against log(n N).
  double slope = 0.0;
};

/// Holds A(eta) fixed and scales the number of documents by each factor.
RateSweep sweep_rate(const SweepConfig& cfg);

/// CSV with header "grid_value,reps,mean_loss,sd_loss,sparsity,seconds".
std::string sweep_csv(const std::vector<SweepResult>& rows);

}  // namespace stm
