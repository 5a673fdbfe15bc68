#include "stm/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "stm/parallel.hpp"
#include "stm/rng.hpp"

namespace stm {

void SynthConfig::validate() const {
  if (p < 1 || n < 1 || K < 1) throw ValidationError("SynthConfig: p, n, K must be positive");
  if (doc_length < 2)
    throw ValidationError("SynthConfig: documents need at least 2 words");
  if (anchors_per_topic < 1)
    throw ValidationError("SynthConfig: anchors_per_topic must be positive");
  if (xi <= 0.0 || xi * static_cast<double>(anchors_per_topic) >= 1.0)
    throw ValidationError(
        "SynthConfig: anchor mass xi * anchors_per_topic must lie in (0, 1)");
  if (dirichlet_alpha <= 0.0)
    throw ValidationError("SynthConfig: dirichlet_alpha must be positive");
  if (eta < 0.0 || eta >= 1.0)
    throw ValidationError("SynthConfig: eta must lie in [0, 1)");
  if (p < K * anchors_per_topic + K)
    throw ValidationError(
        "SynthConfig: vocabulary too small for the anchor blocks plus at "
        "least K non-anchor words");
}

std::pair<TopicMatrix, AnchorPartition> generate_A(const SynthConfig& cfg,
                                                   std::mt19937_64& rng) {
  cfg.validate();
  const Index m = cfg.anchors_per_topic;
  const Index first_free = cfg.K * m;

  Matrix a = Matrix::Zero(cfg.p, cfg.K);
  AnchorPartition anchors;
  anchors.groups.resize(static_cast<std::size_t>(cfg.K));
  for (Index k = 0; k < cfg.K; ++k) {
    for (Index j = 0; j < m; ++j) {
      const Index row = k * m + j;
      a(row, k) = cfg.xi;
      anchors.groups[static_cast<std::size_t>(k)].push_back(row);
    }
  }

  const double free_mass = 1.0 - static_cast<double>(m) * cfg.xi;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index k = 0; k < cfg.K; ++k) {
    double sum = 0.0;
    for (Index j = first_free; j < cfg.p; ++j) {
      a(j, k) = unif(rng);
      sum += a(j, k);
    }
    if (sum <= 0.0)
      throw NumericError("generate_A: degenerate uniform draw, column " +
                         std::to_string(k + 1));
    for (Index j = first_free; j < cfg.p; ++j) a(j, k) *= free_mass / sum;
  }
  return {TopicMatrix{std::move(a)}, std::move(anchors)};
}

TopicMatrix sparsify_A(const TopicMatrix& a, const AnchorPartition& anchors,
                       double eta, std::mt19937_64& rng) {
  if (eta < 0.0 || eta >= 1.0)
    throw ValidationError("sparsify_A: eta must lie in [0, 1)");
  anchors.validate(a.word_count());
  const Index k_topics = a.topic_count();
  // The 1e-9 slack keeps eta values like 0.3 (binary 0.2999...) from
  // flooring to one entry fewer than eta * K intends.
  const Index s = static_cast<Index>(
      std::floor(eta * static_cast<double>(k_topics) + 1e-9));

  if (s == 0) return a;

  Matrix out = a.values;
  const std::uint64_t base = rng();
  const std::vector<Index> owner = anchors.topic_of(a.word_count());
  for (Index j = 0; j < a.word_count(); ++j) {
    if (owner[static_cast<std::size_t>(j)] >= 0) continue;
    auto row_rng =
        make_stream(base, {stream::kRow, static_cast<std::uint64_t>(j)});
    // Partial Fisher-Yates: the first s slots end up a uniform subset.
    std::vector<Index> idx(static_cast<std::size_t>(k_topics));
    std::iota(idx.begin(), idx.end(), Index{0});
    for (Index t = 0; t < s; ++t) {
      std::uniform_int_distribution<Index> pick(t, k_topics - 1);
      std::swap(idx[static_cast<std::size_t>(t)],
                idx[static_cast<std::size_t>(pick(row_rng))]);
      out(j, idx[static_cast<std::size_t>(t)]) = 0.0;
    }
  }

  for (Index k = 0; k < k_topics; ++k) {
    const double sum = out.col(k).sum();
    if (sum <= 0.0)
      throw NumericError("sparsify_A: column " + std::to_string(k + 1) +
                         " lost all mass; reject this draw");
    out.col(k) /= sum;
  }
  return TopicMatrix{std::move(out)};
}

WeightMatrix sample_W_dirichlet(Index topics, Index docs, double alpha,
                                std::mt19937_64& rng) {
  if (topics < 1 || docs < 1)
    throw ValidationError("sample_W_dirichlet: empty shape");
  if (alpha <= 0.0)
    throw ValidationError("sample_W_dirichlet: alpha must be positive");

  std::gamma_distribution<double> gamma(alpha, 1.0);
  Matrix w(topics, docs);
  for (Index i = 0; i < docs; ++i) {
    double sum = 0.0;
    for (Index k = 0; k < topics; ++k) {
      // A zero gamma draw is possible at small alpha in floating point;
      // redraw, since Dirichlet columns must stay strictly inside the simplex
      // for the column sum to be safe.
      double g = gamma(rng);
      while (g <= 0.0) g = gamma(rng);
      w(k, i) = g;
      sum += g;
    }
    w.col(i) /= sum;
  }
  return WeightMatrix{std::move(w)};
}

CorpusCounts sample_corpus(const TopicMatrix& a, const WeightMatrix& w,
                           const Vector& lengths, std::mt19937_64& rng,
                           int threads) {
  a.validate();
  w.validate();
  if (a.topic_count() != w.topic_count())
    throw ValidationError("sample_corpus: topic counts disagree");
  if (lengths.size() != w.doc_count())
    throw ValidationError("sample_corpus: lengths size mismatch");
  for (Index i = 0; i < lengths.size(); ++i)
    if (lengths(i) < 2.0 || std::floor(lengths(i)) != lengths(i))
      throw ValidationError("sample_corpus: document " + std::to_string(i + 1) +
                            " needs an integer length of at least 2");

  const Index p = a.word_count();
  const Index n = w.doc_count();
  const std::uint64_t base = rng();

  CorpusCounts corpus;
  corpus.counts = Matrix::Zero(p, n);
  corpus.lengths = lengths;

  parallel_for(n, threads, [&](Index i) {
    auto doc_rng =
        make_stream(base, {stream::kDocument, static_cast<std::uint64_t>(i)});
    const Vector pi = a.values * w.values.col(i);
    long left = static_cast<long>(lengths(i));
    double rest = 1.0;
    for (Index j = 0; j < p && left > 0; ++j) {
      if (j == p - 1) {
        corpus.counts(j, i) = static_cast<double>(left);
        left = 0;
        break;
      }
      const double q = std::clamp(rest > 0.0 ? pi(j) / rest : 1.0, 0.0, 1.0);
      long c = 0;
      if (q >= 1.0) {
        c = left;
      } else if (q > 0.0) {
        std::binomial_distribution<long> bin(left, q);
        c = bin(doc_rng);
      }
      corpus.counts(j, i) = static_cast<double>(c);
      left -= c;
      rest -= pi(j);
    }
  });
  return corpus;
}

double sparsity_level(const TopicMatrix& a, SparsityMode mode) {
  const double cutoff =
      mode == SparsityMode::Exact ? 0.0
                                  : 1e-3 / static_cast<double>(a.word_count());
  Index nonzero = 0;
  for (Index k = 0; k < a.topic_count(); ++k)
    for (Index j = 0; j < a.word_count(); ++j) {
      const double v = a.values(j, k);
      if (mode == SparsityMode::Exact ? v != 0.0 : v >= cutoff) ++nonzero;
    }
  return static_cast<double>(nonzero) /
         static_cast<double>(a.word_count() * a.topic_count());
}

}  // namespace stm
