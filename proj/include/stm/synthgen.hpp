#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include "stm/types.hpp"

namespace stm {

/// Synthetic-data protocol settings. Defaults mirror the reference
/// configuration (p = n = 1000, K = 20, N = 1500, 5 anchors per topic,
/// xi = K/p, symmetric Dirichlet 0.3).
struct SynthConfig {
  Index p = 1000;
  Index n = 1000;
  Index K = 20;
  Index doc_length = 1500;       // N, shared by all documents
  Index anchors_per_topic = 5;
  double xi = 0.02;              // anchor entry value
  double dirichlet_alpha = 0.3;
  double eta = 0.0;              // sparsity proportion, 0 <= eta < 1
  std::uint64_t seed = 0;

  void validate() const;
};

/// Builds A with planted anchors: topic k owns anchors_per_topic leading
/// rows with entry xi, non-anchor entries are Uniform(0,1) draws with each
/// sub-column rescaled to sum 1 - anchors_per_topic * xi. The returned
/// partition lists the planted anchor rows per topic.
std::pair<TopicMatrix, AnchorPartition> generate_A(const SynthConfig& cfg,
                                                   std::mt19937_64& rng);

/// Zeroes floor(eta * K) uniformly chosen entries of every non-anchor row,
/// then renormalizes columns to unit sums. Rows are processed in index order,
/// each under its own substream. Throws NumericError if a column loses all
/// mass (the draw should be rejected and logged by the caller).
TopicMatrix sparsify_A(const TopicMatrix& a, const AnchorPartition& anchors,
                       double eta, std::mt19937_64& rng);

/// Columns i.i.d. symmetric Dirichlet(alpha) via normalized Gamma draws.
WeightMatrix sample_W_dirichlet(Index topics, Index docs, double alpha,
                                std::mt19937_64& rng);

/// Column i ~ Multinomial(lengths[i], (A W)_.i), sampled exactly by
/// sequential binomial conditioning. Documents are independent, each drawn
/// from its own substream, so the result does not depend on thread count.
CorpusCounts sample_corpus(const TopicMatrix& a, const WeightMatrix& w,
                           const Vector& lengths, std::mt19937_64& rng,
                           int threads = 1);

enum class SparsityMode {
  Exact,        // ||A||_0 / (pK)
  Approximate,  // entries >= 1e-3 / p, divided by pK
};

double sparsity_level(const TopicMatrix& a, SparsityMode mode);

}  // namespace stm
