#include "stm/types.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace stm {

namespace {

void check_stochastic_columns(const Matrix& m, const char* what) {
  if (m.size() == 0) throw ValidationError(std::string(what) + ": empty matrix");
  if ((m.array() < 0.0).any())
    throw ValidationError(std::string(what) + ": negative entry");
  for (Index k = 0; k < m.cols(); ++k) {
    const double s = m.col(k).sum();
    if (std::abs(s - 1.0) > kColumnSumTol)
      throw ValidationError(std::string(what) + ": column " +
                            std::to_string(k + 1) + " sums to " +
                            std::to_string(s) + ", expected 1");
  }
}

}  // namespace

void TopicMatrix::validate() const { check_stochastic_columns(values, "TopicMatrix"); }

void WeightMatrix::validate() const { check_stochastic_columns(values, "WeightMatrix"); }

Index AnchorPartition::anchor_count() const {
  Index total = 0;
  for (const auto& g : groups) total += static_cast<Index>(g.size());
  return total;
}

void AnchorPartition::validate(Index vocab_size) const {
  if (groups.empty()) throw ValidationError("AnchorPartition: no groups");
  std::unordered_set<Index> seen;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].empty())
      throw ValidationError("AnchorPartition: group " + std::to_string(k + 1) +
                            " is empty");
    for (Index j : groups[k]) {
      if (j < 0 || j >= vocab_size)
        throw ValidationError("AnchorPartition: word index " +
                              std::to_string(j + 1) + " out of range [1, " +
                              std::to_string(vocab_size) + "]");
      if (!seen.insert(j).second)
        throw ValidationError("AnchorPartition: word " + std::to_string(j + 1) +
                              " appears in more than one group");
    }
  }
}

std::vector<Index> AnchorPartition::flat() const {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(anchor_count()));
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

std::vector<Index> AnchorPartition::complement(Index vocab_size) const {
  std::vector<char> is_anchor(static_cast<std::size_t>(vocab_size), 0);
  for (const auto& g : groups)
    for (Index j : g) is_anchor[static_cast<std::size_t>(j)] = 1;
  std::vector<Index> out;
  for (Index j = 0; j < vocab_size; ++j)
    if (!is_anchor[static_cast<std::size_t>(j)]) out.push_back(j);
  return out;
}

std::vector<Index> AnchorPartition::topic_of(Index vocab_size) const {
  std::vector<Index> owner(static_cast<std::size_t>(vocab_size), -1);
  for (std::size_t k = 0; k < groups.size(); ++k)
    for (Index j : groups[k]) owner[static_cast<std::size_t>(j)] = static_cast<Index>(k);
  return owner;
}

void CorpusCounts::validate() const {
  if (counts.size() == 0) throw ValidationError("CorpusCounts: empty matrix");
  if (lengths.size() != counts.cols())
    throw ValidationError("CorpusCounts: lengths size does not match document count");
  for (Index i = 0; i < counts.cols(); ++i) {
    double sum = 0.0;
    for (Index j = 0; j < counts.rows(); ++j) {
      const double c = counts(j, i);
      if (c < 0.0 || std::floor(c) != c)
        throw ValidationError("CorpusCounts: entry (" + std::to_string(j + 1) +
                              ", " + std::to_string(i + 1) +
                              ") is not a nonnegative integer");
      sum += c;
    }
    if (sum != lengths(i))
      throw ValidationError("CorpusCounts: column " + std::to_string(i + 1) +
                            " sums to " + std::to_string(sum) +
                            " but its length is " + std::to_string(lengths(i)));
    if (lengths(i) < 2.0)
      throw ValidationError("CorpusCounts: document " + std::to_string(i + 1) +
                            " has length " + std::to_string(lengths(i)) +
                            "; at least 2 words are required");
  }
}

CorpusCounts CorpusCounts::from_counts(Matrix counts) {
  CorpusCounts c;
  c.lengths = counts.colwise().sum();
  c.counts = std::move(counts);
  c.validate();
  return c;
}

}  // namespace stm
