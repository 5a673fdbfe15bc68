#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace stm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Invalid inputs: bad dimensions, malformed files, broken invariants.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Numeric failures: singular scalings, exhausted grids, infeasible columns.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kColumnSumTol = 1e-12;

/// p x K word-topic matrix. Columns are probability vectors.
struct TopicMatrix {
  Matrix values;

  Index word_count() const { return values.rows(); }
  Index topic_count() const { return values.cols(); }

  /// Throws ValidationError unless all entries are >= 0 and every column
  /// sums to one within kColumnSumTol.
  void validate() const;

  static TopicMatrix from(Matrix m) {
    TopicMatrix t{std::move(m)};
    t.validate();
    return t;
  }
};

/// K x n topic-document matrix. Columns are probability vectors.
struct WeightMatrix {
  Matrix values;

  Index topic_count() const { return values.rows(); }
  Index doc_count() const { return values.cols(); }

  void validate() const;

  static WeightMatrix from(Matrix m) {
    WeightMatrix w{std::move(m)};
    w.validate();
    return w;
  }
};

/// Disjoint nonempty index sets over the vocabulary, one per topic.
/// Group order defines the topic order everywhere downstream.
struct AnchorPartition {
  std::vector<std::vector<Index>> groups;

  Index topic_count() const { return static_cast<Index>(groups.size()); }

  /// Total number of anchor words |L|.
  Index anchor_count() const;

  /// Throws ValidationError unless groups are nonempty, pairwise disjoint
  /// and all indices lie in [0, vocab_size).
  void validate(Index vocab_size) const;

  /// Anchor words in group order: all of L_1, then L_2, ...
  std::vector<Index> flat() const;

  /// Non-anchor words in ascending index order.
  std::vector<Index> complement(Index vocab_size) const;

  /// topic_of[j] = topic owning anchor word j, or -1 for non-anchors.
  std::vector<Index> topic_of(Index vocab_size) const;
};

/// p x n integer word counts with per-document lengths (column sums).
struct CorpusCounts {
  Matrix counts;   // integer-valued, stored as double
  Vector lengths;  // N_i = column sum of document i

  Index vocab_size() const { return counts.rows(); }
  Index doc_count() const { return counts.cols(); }

  /// Throws ValidationError unless entries are nonnegative integers, every
  /// column sums to its recorded length, and every length is >= 2 (the
  /// co-occurrence estimator divides by N_i - 1).
  void validate() const;

  /// Builds from a count matrix, deriving lengths, and validates.
  static CorpusCounts from_counts(Matrix counts);
};

}  // namespace stm
