#pragma once

#include <vector>

#include "stm/types.hpp"

namespace stm {

/// p x n observed frequencies; column i is counts column i divided by N_i.
struct FreqMatrix {
  Matrix values;

  Index vocab_size() const { return values.rows(); }
  Index doc_count() const { return values.cols(); }
};

/// Divides each count column by its document length.
FreqMatrix doc_frequencies(const CorpusCounts& counts);

/// d_x[j] = n^-1 sum_i X_ji, the diagonal of D_X. Accumulated in document
/// order; entries sum to one.
Vector word_means(const FreqMatrix& x);

/// The (rows x cols) block of the unbiased co-occurrence estimator
///
///   Theta_hat = n^-1 sum_i [ N_i/(N_i-1) X_i X_i^T - (N_i-1)^-1 diag(X_i) ].
///
/// Documents are accumulated in fixed-size chunks (serial, in document order)
/// and the chunk partials are combined with a fixed pairwise tree, so the
/// result is bit-identical for every thread count. Throws NumericError,
/// naming the document, if some N_i < 2.
Matrix cooccurrence_block(const FreqMatrix& x, const Vector& lengths,
                          const std::vector<Index>& rows,
                          const std::vector<Index>& cols, int threads = 1);

/// R_hat block: r[a,b] = theta[a,b] / (d_x[rows[a]] * d_x[cols[b]]).
/// Throws NumericError if any requested index has zero word mean; callers
/// must drop thresholded words first.
Matrix normalized_cooccurrence(const Matrix& theta_block, const Vector& d_x,
                               const std::vector<Index>& rows,
                               const std::vector<Index>& cols);

/// D_X diagonal plus matching Theta_hat and R_hat blocks on (rows x cols).
struct MomentBlock {
  Vector d_x;
  Matrix theta;
  Matrix r;
  std::vector<Index> rows;
  std::vector<Index> cols;
};

MomentBlock make_moment_block(const FreqMatrix& x, const Vector& lengths,
                              std::vector<Index> rows, std::vector<Index> cols,
                              int threads = 1);

}  // namespace stm
