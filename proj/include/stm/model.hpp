#pragma once

#include "stm/types.hpp"

namespace stm {

/// Result of checking one declared anchor word against the matrix A.
struct AnchorCheck {
  Index word = -1;
  Index topic = -1;
  bool positive_in_topic = false;  // A[word, topic] > 0
  bool zero_elsewhere = false;     // A[word, l] == 0 for every l != topic

  bool ok() const { return positive_in_topic && zero_elsewhere; }
};

/// Model assumptions checked on (A, W, anchors). Violations are recorded,
/// not thrown, so experiment sweeps can log degenerate draws and move on.
struct ValidationReport {
  std::vector<AnchorCheck> declared_anchors;
  std::vector<bool> topic_has_anchor;  // any true anchor row in A, per topic
  double lambda_min_w = 0.0;           // lambda_min(n^-1 W W^T)
  bool separability_ok = false;        // every topic has at least one anchor
  bool weights_pd_ok = false;          // n^-1 W W^T strictly positive definite
  std::vector<std::string> messages;

  bool ok() const;
};

/// Checks the separability and positive-definiteness assumptions plus the
/// declared anchor partition. Dimension mismatches throw ValidationError;
/// assumption violations are flagged in the report.
ValidationReport validate_model(const TopicMatrix& a, const WeightMatrix& w,
                                const AnchorPartition& anchors);

/// Exact population-level quantities of the factorization Pi = A W.
struct PopulationMoments {
  Matrix pi;     // p x n expected frequencies
  Matrix theta;  // p x p, n^-1 Pi Pi^T
  Vector d_pi;   // p, diagonal of D_Pi = n^-1 diag(Pi 1)
  Vector d_w;    // K, diagonal of D_W = n^-1 diag(W 1)
  Matrix r;      // p x p, D_Pi^-1 Theta D_Pi^-1
  Matrix m;      // K x K, D_W^-1 (n^-1 W W^T) D_W^-1
  Matrix b;      // p x K, D_Pi^-1 A D_W (rows sum to one)
};

/// Computes the population moments. Throws NumericError if some word has
/// zero expected frequency (D_Pi would be singular).
PopulationMoments population_moments(const TopicMatrix& a,
                                     const WeightMatrix& w);

/// Recovers A from exact population moments by the closed-form identities:
/// group averaging of R gives M, a linear solve gives the non-anchor rows of
/// B, and column normalization of D_Pi B gives A. Independent of the
/// quadratic-program estimation path; used as the noise-free oracle.
TopicMatrix noise_free_recovery(const PopulationMoments& pm,
                                const AnchorPartition& anchors);

}  // namespace stm
