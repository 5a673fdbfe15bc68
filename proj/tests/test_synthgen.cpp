#include <doctest.h>

#include <cmath>
#include <string>

#include "stm/rng.hpp"
#include "stm/synthgen.hpp"

using namespace stm;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.p = 40;
  cfg.n = 50;
  cfg.K = 4;
  cfg.anchors_per_topic = 3;
  cfg.xi = 0.05;
  cfg.doc_length = 30;
  return cfg;
}

}  // namespace

TEST_CASE("generated A plants the anchor block") {
  const SynthConfig cfg = small_config();
  auto rng = make_stream(5, {stream::kTopicMatrix});
  const auto [a, anchors] = generate_A(cfg, rng);

  a.validate();
  REQUIRE(a.word_count() == cfg.p);
  REQUIRE(a.topic_count() == cfg.K);
  REQUIRE(anchors.topic_count() == cfg.K);

  const Index m = cfg.anchors_per_topic;
  for (Index k = 0; k < cfg.K; ++k) {
    REQUIRE(static_cast<Index>(anchors.groups[static_cast<std::size_t>(k)]
                                   .size()) == m);
    for (Index j = 0; j < m; ++j) {
      const Index row = k * m + j;
      CHECK(anchors.groups[static_cast<std::size_t>(k)]
                          [static_cast<std::size_t>(j)] == row);
      for (Index kk = 0; kk < cfg.K; ++kk)
        CHECK(a.values(row, kk) == (kk == k ? cfg.xi : 0.0));
    }
  }

  const double free_mass = 1.0 - static_cast<double>(m) * cfg.xi;
  for (Index k = 0; k < cfg.K; ++k) {
    const double tail = a.values.col(k).segment(cfg.K * m, cfg.p - cfg.K * m)
                            .sum();
    CHECK(tail == doctest::Approx(free_mass).epsilon(1e-12));
    CHECK(a.values.col(k).segment(cfg.K * m, cfg.p - cfg.K * m).minCoeff() >
          0.0);
  }
}

TEST_CASE("generation is reproducible from the seed") {
  const SynthConfig cfg = small_config();
  auto r1 = make_stream(9, {stream::kTopicMatrix});
  auto r2 = make_stream(9, {stream::kTopicMatrix});
  auto r3 = make_stream(10, {stream::kTopicMatrix});
  const auto [a1, g1] = generate_A(cfg, r1);
  const auto [a2, g2] = generate_A(cfg, r2);
  const auto [a3, g3] = generate_A(cfg, r3);
  CHECK((a1.values - a2.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a1.values - a3.values).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("sparsification zeroes a fixed count per non-anchor row") {
  SynthConfig cfg = small_config();
  cfg.p = 60;
  cfg.K = 10;
  cfg.anchors_per_topic = 1;
  cfg.xi = 0.05;
  auto a_rng = make_stream(12, {stream::kTopicMatrix});
  const auto [a, anchors] = generate_A(cfg, a_rng);

  SUBCASE("eta zero returns the input bitwise") {
    auto s_rng = make_stream(12, {stream::kSparsify});
    const TopicMatrix same = sparsify_A(a, anchors, 0.0, s_rng);
    CHECK((same.values - a.values).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("eta 0.3 with K=10 floors to three zeros, not two") {
    auto s_rng = make_stream(12, {stream::kSparsify});
    const TopicMatrix sp = sparsify_A(a, anchors, 0.3, s_rng);
    for (Index j = cfg.K; j < cfg.p; ++j) {
      Index zeros = 0;
      for (Index k = 0; k < cfg.K; ++k)
        if (sp.values(j, k) == 0.0) ++zeros;
      CHECK(zeros == 3);
    }
  }

  SUBCASE("half sparsity keeps columns stochastic and anchors intact") {
    auto s_rng = make_stream(12, {stream::kSparsify});
    const TopicMatrix sp = sparsify_A(a, anchors, 0.5, s_rng);
    sp.validate();
    for (Index j = cfg.K; j < cfg.p; ++j) {
      Index zeros = 0;
      for (Index k = 0; k < cfg.K; ++k)
        if (sp.values(j, k) == 0.0) ++zeros;
      CHECK(zeros == 5);
    }
    for (Index k = 0; k < cfg.K; ++k) {
      // Anchor rows are never zeroed; renormalization rescales them.
      CHECK(sp.values(k, k) > 0.0);
      for (Index kk = 0; kk < cfg.K; ++kk)
        if (kk != k) CHECK(sp.values(k, kk) == 0.0);
    }
  }

  SUBCASE("eta out of range is rejected") {
    auto s_rng = make_stream(12, {stream::kSparsify});
    CHECK_THROWS_AS(sparsify_A(a, anchors, 1.0, s_rng), ValidationError);
    CHECK_THROWS_AS(sparsify_A(a, anchors, -0.1, s_rng), ValidationError);
  }
}

TEST_CASE("sparsity decreases as eta grows") {
  SynthConfig cfg = small_config();
  cfg.p = 80;
  cfg.K = 10;
  cfg.anchors_per_topic = 1;
  cfg.xi = 0.05;
  auto a_rng = make_stream(14, {stream::kTopicMatrix});
  const auto [a, anchors] = generate_A(cfg, a_rng);

  double prev = 2.0;
  for (double eta : {0.0, 0.3, 0.6, 0.9}) {
    auto s_rng = make_stream(14, {stream::kSparsify});
    const TopicMatrix sp = sparsify_A(a, anchors, eta, s_rng);
    const double level = sparsity_level(sp, SparsityMode::Exact);
    CHECK(level < prev);
    prev = level;

    // The zeroing pattern makes the support size exact, not just random.
    const Index s = static_cast<Index>(std::floor(eta * 10 + 1e-9));
    const double expected =
        static_cast<double>(10 + 70 * (10 - s)) / static_cast<double>(80 * 10);
    CHECK(level == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("a column supported by one word can lose all mass") {
  // Row 4 carries all of column 1's mass. With eta = 0.99 two of its three
  // entries are zeroed, so scanning a handful of substreams must hit the
  // rejection path.
  Matrix values(4, 3);
  values << 0.0, 0.5, 0.0,
            0.0, 0.0, 0.6,
            0.0, 0.3, 0.2,
            1.0, 0.2, 0.2;
  const TopicMatrix a{values};
  const AnchorPartition anchors{{{0}, {1}, {2}}};

  bool rejected = false;
  for (std::uint64_t seed = 0; seed < 10 && !rejected; ++seed) {
    auto rng = make_stream(seed, {stream::kSparsify});
    try {
      sparsify_A(a, anchors, 0.99, rng);
    } catch (const NumericError& e) {
      rejected = true;
      CHECK(std::string(e.what()).find("column 1") != std::string::npos);
    }
  }
  CHECK(rejected);
}

TEST_CASE("Dirichlet weights form distributions") {
  auto rng = make_stream(31, {stream::kWeights});
  const WeightMatrix w = sample_W_dirichlet(5, 200, 0.3, rng);
  w.validate();
  REQUIRE(w.topic_count() == 5);
  REQUIRE(w.doc_count() == 200);
  for (Index i = 0; i < 200; ++i)
    CHECK(std::abs(w.values.col(i).sum() - 1.0) <= 1e-12);
  CHECK(w.values.minCoeff() >= 0.0);

  SUBCASE("reproducible from the seed") {
    auto r1 = make_stream(31, {stream::kWeights});
    auto r2 = make_stream(31, {stream::kWeights});
    const WeightMatrix w1 = sample_W_dirichlet(5, 200, 0.3, r1);
    const WeightMatrix w2 = sample_W_dirichlet(5, 200, 0.3, r2);
    CHECK((w1.values - w2.values).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("large alpha concentrates the weights at uniform") {
  // Var of one coordinate is (1/K)(1-1/K)/(K*alpha+1); the mean over docs
  // has variance that much smaller. Three sigmas around 1/K.
  const Index k = 5, n = 500;
  const double alpha = 1000.0;
  auto rng = make_stream(32, {stream::kWeights});
  const WeightMatrix w = sample_W_dirichlet(k, n, alpha, rng);
  const double var1 =
      (1.0 / 5.0) * (4.0 / 5.0) / (5.0 * alpha + 1.0) / static_cast<double>(n);
  const double band = 3.0 * std::sqrt(var1);
  for (Index t = 0; t < k; ++t)
    CHECK(std::abs(w.values.row(t).mean() - 0.2) <= band);
}

TEST_CASE("sampled corpora have exact totals and seeded determinism") {
  SynthConfig cfg = small_config();
  auto a_rng = make_stream(40, {stream::kTopicMatrix});
  const auto [a, anchors] = generate_A(cfg, a_rng);
  auto w_rng = make_stream(40, {stream::kWeights});
  const WeightMatrix w = sample_W_dirichlet(cfg.K, cfg.n, 0.3, w_rng);
  Vector lengths(cfg.n);
  for (Index i = 0; i < cfg.n; ++i) lengths(i) = 20.0 + (i % 3) * 10.0;

  auto c_rng = make_stream(40, {stream::kCorpus});
  const CorpusCounts corpus = sample_corpus(a, w, lengths, c_rng);
  corpus.validate();
  for (Index i = 0; i < cfg.n; ++i) {
    CHECK(corpus.counts.col(i).sum() == lengths(i));
    for (Index j = 0; j < cfg.p; ++j)
      CHECK(corpus.counts(j, i) == std::floor(corpus.counts(j, i)));
  }

  SUBCASE("same stream, same corpus; threads do not change it") {
    auto r1 = make_stream(40, {stream::kCorpus});
    const CorpusCounts again = sample_corpus(a, w, lengths, r1);
    CHECK((again.counts - corpus.counts).cwiseAbs().maxCoeff() == 0.0);
    auto r4 = make_stream(40, {stream::kCorpus});
    const CorpusCounts threaded = sample_corpus(a, w, lengths, r4, 4);
    CHECK((threaded.counts - corpus.counts).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("one long document matches its distribution") {
  Matrix id = Matrix::Identity(6, 6);
  const TopicMatrix a{id};
  WeightMatrix w;
  w.values.resize(6, 1);
  w.values << 0.3, 0.25, 0.2, 0.1, 0.1, 0.05;

  const double n_words = 1e5;
  auto rng = make_stream(44, {stream::kCorpus});
  const CorpusCounts doc =
      sample_corpus(a, w, Vector::Constant(1, n_words), rng);
  for (Index j = 0; j < 6; ++j) {
    const double pi = w.values(j, 0);
    const double freq = doc.counts(j, 0) / n_words;
    const double sigma = std::sqrt(pi * (1.0 - pi) / n_words);
    CHECK(std::abs(freq - pi) <= 5.0 * sigma);
  }
}

TEST_CASE("sparsity level counts supports") {
  const TopicMatrix eye{Matrix::Identity(2, 2)};
  CHECK(sparsity_level(eye, SparsityMode::Exact) == 0.5);
  const TopicMatrix dense{Matrix::Constant(2, 2, 0.5)};
  CHECK(sparsity_level(dense, SparsityMode::Exact) == 1.0);

  // Entries under 1e-3 / p are treated as zero in the approximate count.
  Matrix nearly(2, 2);
  nearly << 1.0 - 1e-6, 0.3,
            1e-6,       0.7;
  const TopicMatrix tm{nearly};
  CHECK(sparsity_level(tm, SparsityMode::Exact) == 1.0);
  CHECK(sparsity_level(tm, SparsityMode::Approximate) == 0.75);
}

TEST_CASE("config validation rejects inconsistent settings") {
  SynthConfig ok = small_config();
  CHECK_NOTHROW(ok.validate());

  SynthConfig bad = ok;
  bad.p = ok.K * ok.anchors_per_topic + ok.K - 1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  bad = ok;
  bad.xi = 1.0 / static_cast<double>(ok.anchors_per_topic);
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  bad = ok;
  bad.doc_length = 1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  bad = ok;
  bad.dirichlet_alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  bad = ok;
  bad.eta = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}
