#include "stm/moments.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "stm/parallel.hpp"

namespace stm {

namespace {

// Documents per accumulation chunk. Chunks are summed serially in document
// order and then combined with a fixed pairwise tree, so changing the thread
// count cannot change a single bit of the result.
constexpr Index kChunk = 256;

}  // namespace

FreqMatrix doc_frequencies(const CorpusCounts& counts) {
  FreqMatrix x;
  x.values = counts.counts;
  for (Index i = 0; i < counts.doc_count(); ++i) {
    if (counts.lengths(i) < 1.0)
      throw ValidationError("doc_frequencies: document " + std::to_string(i + 1) +
                            " has zero length");
    x.values.col(i) /= counts.lengths(i);
  }
  return x;
}

Vector word_means(const FreqMatrix& x) {
  Vector d = Vector::Zero(x.vocab_size());
  for (Index i = 0; i < x.doc_count(); ++i) d += x.values.col(i);
  return d / static_cast<double>(x.doc_count());
}

Matrix cooccurrence_block(const FreqMatrix& x, const Vector& lengths,
                          const std::vector<Index>& rows,
                          const std::vector<Index>& cols, int threads) {
  const Index n = x.doc_count();
  if (lengths.size() != n)
    throw ValidationError("cooccurrence_block: lengths size mismatch");
  for (Index i = 0; i < n; ++i)
    if (lengths(i) < 2.0)
      throw NumericError("cooccurrence_block: document " + std::to_string(i + 1) +
                         " has length " + std::to_string(lengths(i)) +
                         "; the estimator needs at least 2 words");

  const Index nr = static_cast<Index>(rows.size());
  const Index nc = static_cast<Index>(cols.size());
  const Index chunks = (n + kChunk - 1) / kChunk;

  std::vector<Matrix> partial(static_cast<std::size_t>(chunks));
  parallel_for(chunks, threads, [&](Index c) {
    Matrix acc = Matrix::Zero(nr, nc);
    const Index lo = c * kChunk;
    const Index hi = std::min(lo + kChunk, n);
    for (Index i = lo; i < hi; ++i) {
      const double ni = lengths(i);
      const double w = ni / (ni - 1.0);
      const double diag_w = 1.0 / (ni - 1.0);
      // Rank-one update written out longhand: the frequency product rounds
      // before the weight multiplies, so entries (a,b) and (b,a) of a
      // symmetric block receive bitwise-identical contributions.
      for (Index b = 0; b < nc; ++b) {
        const double xc = x.values(cols[static_cast<std::size_t>(b)], i);
        if (xc == 0.0) continue;
        for (Index a = 0; a < nr; ++a) {
          const double xr = x.values(rows[static_cast<std::size_t>(a)], i);
          acc(a, b) += w * (xr * xc);
        }
      }
      for (Index a = 0; a < nr; ++a) {
        const Index ra = rows[static_cast<std::size_t>(a)];
        for (Index b = 0; b < nc; ++b) {
          if (cols[static_cast<std::size_t>(b)] == ra)
            acc(a, b) -= diag_w * x.values(ra, i);
        }
      }
    }
    partial[static_cast<std::size_t>(c)] = std::move(acc);
  });

  Matrix total = tree_reduce(std::move(partial),
                             [](Matrix lhs, Matrix rhs) -> Matrix {
                               lhs += rhs;
                               return lhs;
                             });
  return total / static_cast<double>(n);
}

Matrix normalized_cooccurrence(const Matrix& theta_block, const Vector& d_x,
                               const std::vector<Index>& rows,
                               const std::vector<Index>& cols) {
  if (theta_block.rows() != static_cast<Index>(rows.size()) ||
      theta_block.cols() != static_cast<Index>(cols.size()))
    throw ValidationError("normalized_cooccurrence: block shape mismatch");
  auto check = [&](Index j) {
    if (d_x(j) <= 0.0)
      throw NumericError("normalized_cooccurrence: word " + std::to_string(j + 1) +
                         " has zero observed frequency");
  };
  for (Index j : rows) check(j);
  for (Index j : cols) check(j);

  Matrix r(theta_block.rows(), theta_block.cols());
  for (Index a = 0; a < r.rows(); ++a)
    for (Index b = 0; b < r.cols(); ++b)
      r(a, b) = theta_block(a, b) / (d_x(rows[static_cast<std::size_t>(a)]) *
                                     d_x(cols[static_cast<std::size_t>(b)]));
  return r;
}

MomentBlock make_moment_block(const FreqMatrix& x, const Vector& lengths,
                              std::vector<Index> rows, std::vector<Index> cols,
                              int threads) {
  MomentBlock mb;
  mb.d_x = word_means(x);
  mb.theta = cooccurrence_block(x, lengths, rows, cols, threads);
  mb.r = normalized_cooccurrence(mb.theta, mb.d_x, rows, cols);
  mb.rows = std::move(rows);
  mb.cols = std::move(cols);
  return mb;
}

}  // namespace stm
