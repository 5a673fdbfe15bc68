#include "stm/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "stm/io.hpp"
#include "stm/model.hpp"
#include "stm/parallel.hpp"
#include "stm/rng.hpp"

namespace stm {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Minimum-cost assignment by shortest augmenting paths with potentials,
// O(K^3). Returns match[row] = column.
std::vector<Index> min_cost_assignment(const Matrix& cost) {
  const Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based with a dummy 0 slot; p[j] = row currently matched to column j.
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<Index> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Index> way(static_cast<std::size_t>(n) + 1, 0);

  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Index> match(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j)
    match[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
  return match;
}

struct RepOutcome {
  std::optional<double> loss;
  std::string error;
};

// One eta or rate grid point: `reps` corpora against a fixed reference A.
SweepResult run_grid_point(const TopicMatrix& a_ref,
                           const AnchorPartition& anchors,
                           const SweepConfig& cfg, Index n_docs,
                           double grid_value, std::uint64_t point_tag) {
  const auto t0 = std::chrono::steady_clock::now();

  SweepResult res;
  res.grid_value = grid_value;
  res.sparsity = sparsity_level(a_ref, SparsityMode::Exact);

  // Parallelism lives at the repetition level; each estimator run stays
  // serial so a repetition's numbers never depend on the worker count.
  StmConfig est_cfg = cfg.estimator;
  est_cfg.threads = 1;

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(cfg.reps));
  parallel_for(cfg.reps, resolve_threads(cfg.threads), [&](Index r) {
    RepOutcome& out = outcomes[static_cast<std::size_t>(r)];
    try {
      auto w_rng = make_stream(
          cfg.seed, {stream::kWeights, point_tag, static_cast<std::uint64_t>(r)});
      const WeightMatrix w = sample_W_dirichlet(
          a_ref.topic_count(), n_docs, cfg.synth.dirichlet_alpha, w_rng);
      auto c_rng = make_stream(
          cfg.seed, {stream::kCorpus, point_tag, static_cast<std::uint64_t>(r)});
      const Vector lengths =
          Vector::Constant(n_docs, static_cast<double>(cfg.synth.doc_length));
      const CorpusCounts corpus = sample_corpus(a_ref, w, lengths, c_rng, 1);
      const EstimationReport rep = run_stm(corpus, anchors, est_cfg);
      out.loss = aligned_l1_loss(rep.a_hat, a_ref).loss;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  std::vector<double> losses;
  for (const auto& out : outcomes) {
    if (out.loss)
      losses.push_back(*out.loss);
    else
      ++res.reps_failed;
  }
  res.reps_completed = static_cast<int>(losses.size());
  if (losses.empty())
    throw NumericError("sweep: every repetition failed at grid value " +
                       format_g17(grid_value) +
                       (outcomes.front().error.empty()
                            ? std::string()
                            : "; first error: " + outcomes.front().error));

  const double sum =
      tree_reduce(losses, [](double a, double b) { return a + b; });
  res.mean_loss = sum / static_cast<double>(losses.size());
  if (losses.size() > 1) {
    std::vector<double> sq(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i) {
      const double d = losses[i] - res.mean_loss;
      sq[i] = d * d;
    }
    const double ssq =
        tree_reduce(std::move(sq), [](double a, double b) { return a + b; });
    res.sd_loss = std::sqrt(ssq / static_cast<double>(losses.size() - 1));
  }
  res.seconds = seconds_since(t0);
  return res;
}

}  // namespace

Alignment aligned_l1_loss(const TopicMatrix& a_hat, const TopicMatrix& a_ref) {
  if (a_hat.word_count() != a_ref.word_count() ||
      a_hat.topic_count() != a_ref.topic_count())
    throw ValidationError("aligned_l1_loss: dimension mismatch");
  const Index k = a_ref.topic_count();

  // cost(ref topic, estimate column) = l1 distance of the columns.
  Matrix cost(k, k);
  for (Index a = 0; a < k; ++a)
    for (Index b = 0; b < k; ++b)
      cost(a, b) = (a_ref.values.col(a) - a_hat.values.col(b)).lpNorm<1>();

  Alignment out;
  out.permutation = min_cost_assignment(cost);
  double total = 0.0;
  for (Index a = 0; a < k; ++a)
    total += cost(a, out.permutation[static_cast<std::size_t>(a)]);
  out.loss = total / static_cast<double>(k);
  return out;
}

std::vector<SweepResult> sweep_sparsity(const SweepConfig& cfg) {
  cfg.synth.validate();
  if (cfg.etas.empty()) throw ValidationError("sweep_sparsity: empty eta grid");
  if (cfg.reps < 1) throw ValidationError("sweep_sparsity: reps must be >= 1");

  auto a_rng = make_stream(cfg.seed, {stream::kTopicMatrix});
  const auto [a_base, anchors] = generate_A(cfg.synth, a_rng);

  std::vector<SweepResult> rows;
  rows.reserve(cfg.etas.size());
  for (std::size_t e = 0; e < cfg.etas.size(); ++e) {
    auto s_rng = make_stream(
        cfg.seed, {stream::kSparsify, static_cast<std::uint64_t>(e)});
    const TopicMatrix a_eta = sparsify_A(a_base, anchors, cfg.etas[e], s_rng);
    rows.push_back(run_grid_point(a_eta, anchors, cfg, cfg.synth.n,
                                  cfg.etas[e], static_cast<std::uint64_t>(e)));
  }
  return rows;
}

RateSweep sweep_rate(const SweepConfig& cfg) {
  cfg.synth.validate();
  if (cfg.factors.empty()) throw ValidationError("sweep_rate: empty factor grid");
  if (cfg.reps < 1) throw ValidationError("sweep_rate: reps must be >= 1");
  for (double f : cfg.factors)
    if (f < 1.0)
      throw ValidationError("sweep_rate: factors must be >= 1");

  auto a_rng = make_stream(cfg.seed, {stream::kTopicMatrix});
  const auto [a_base, anchors] = generate_A(cfg.synth, a_rng);
  auto s_rng = make_stream(cfg.seed, {stream::kSparsify, 0});
  const TopicMatrix a_eta = sparsify_A(a_base, anchors, cfg.synth.eta, s_rng);

  RateSweep sweep;
  sweep.rows.reserve(cfg.factors.size());
  for (std::size_t fi = 0; fi < cfg.factors.size(); ++fi) {
    const Index n_docs = static_cast<Index>(
        std::llround(static_cast<double>(cfg.synth.n) * cfg.factors[fi]));
    const double grid_value =
        static_cast<double>(n_docs) * static_cast<double>(cfg.synth.doc_length);
    sweep.rows.push_back(run_grid_point(a_eta, anchors, cfg, n_docs, grid_value,
                                        static_cast<std::uint64_t>(fi)));
  }

  // Least-squares slope of log(mean loss) on log(nN).
  const std::size_t m = sweep.rows.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> xs(m), ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (sweep.rows[i].mean_loss <= 0.0)
      throw NumericError("sweep_rate: zero mean loss; slope undefined");
    xs[i] = std::log(sweep.rows[i].grid_value);
    ys[i] = std::log(sweep.rows[i].mean_loss);
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0)
    throw ValidationError("sweep_rate: need at least two distinct grid values");
  sweep.slope = sxy / sxx;
  return sweep;
}

std::string sweep_csv(const std::vector<SweepResult>& rows) {
  std::string text = "grid_value,reps,mean_loss,sd_loss,sparsity,seconds\n";
  for (const auto& r : rows) {
    text += format_g17(r.grid_value) + "," + std::to_string(r.reps_completed) +
            "," + format_g17(r.mean_loss) + "," + format_g17(r.sd_loss) + "," +
            format_g17(r.sparsity) + "," + format_g17(r.seconds) + "\n";
  }
  return text;
}

}  // namespace stm
