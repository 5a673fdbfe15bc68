#include "stm/estimator.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "stm/moments.hpp"
#include "stm/parallel.hpp"
#include "stm/simplex_qp.hpp"

namespace stm {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Shared tail of the pipeline: given word means and the R_hat blocks on
// L x L and L x survivors, pick lambda, solve the per-row programs and
// assemble B_hat. `lengths` feeds the lambda grid scale.
BEstimate assemble_B(const Vector& d_x, const Matrix& r_ll,
                     const Matrix& r_lsurv, std::vector<Index> survivors,
                     std::vector<Index> thresholded,
                     const AnchorPartition& anchors, const Vector& lengths,
                     const StmConfig& cfg) {
  const Index p = d_x.size();

  BEstimate est;
  est.moments =
      group_average_moments(r_ll, r_lsurv, anchors, std::move(survivors));
  est.thresholded = std::move(thresholded);

  if (cfg.force_lambda) {
    if (*cfg.force_lambda < 0.0)
      throw ValidationError("estimate_B: forced lambda is negative");
    est.lambda = *cfg.force_lambda;
    est.t_star = -1;
    Eigen::SelfAdjointEigenSolver<Matrix> es(est.moments.m_hat);
    est.diag.lambda_min_m_hat = es.eigenvalues().minCoeff();
  } else {
    const LambdaSelection sel =
        lambda_select(est.moments.m_hat, d_x, anchors, lengths, cfg.c0,
                      cfg.lambda_t_min, cfg.lambda_t_max);
    est.lambda = sel.lambda;
    est.t_star = sel.t_star;
    est.diag.lambda_min_m_hat = sel.lambda_min_m_hat;
  }

  est.b_hat = anchor_rows(anchors, p);

  const auto qp_start = std::chrono::steady_clock::now();
  const Index n_rows = static_cast<Index>(est.moments.lcomp.size());
  std::vector<QpSolution> solutions(static_cast<std::size_t>(n_rows));
  QpOptions qp_opts;
  qp_opts.tol = cfg.qp_tol;
  qp_opts.max_iter = cfg.qp_max_iter;
  parallel_for(n_rows, cfg.threads, [&](Index jj) {
    QpProblem prob;
    prob.m = est.moments.m_hat;
    prob.h = est.moments.h_hat.col(jj);
    prob.lambda = est.lambda;
    solutions[static_cast<std::size_t>(jj)] = solve_simplex_qp(prob, qp_opts);
  });
  for (Index jj = 0; jj < n_rows; ++jj) {
    const Index word = est.moments.lcomp[static_cast<std::size_t>(jj)];
    const QpSolution& s = solutions[static_cast<std::size_t>(jj)];
    est.b_hat.row(word) = s.beta.transpose();
    if (!s.converged) est.diag.qp_nonconverged.push_back(word);
  }
  est.diag.seconds_qp = seconds_since(qp_start);

  for (Index word : est.diag.qp_nonconverged)
    est.diag.warnings.push_back("row program for word " +
                                std::to_string(word + 1) +
                                " stopped at the iteration cap");
  return est;
}

// Full sample path once frequencies exist. Thresholding runs before the
// R_hat blocks so no division by a sub-cutoff word mean ever happens.
BEstimate estimate_from_frequencies(const FreqMatrix& x, const Vector& d_x,
                                    const Vector& lengths,
                                    const AnchorPartition& anchors,
                                    const StmConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const Index n_docs = x.doc_count();
  const Index p = x.vocab_size();
  const double n_bar = harmonic_mean_length(lengths);
  const double cutoff = threshold_cutoff(n_docs, p, n_bar);

  std::vector<Index> thresholded = threshold_set(d_x, n_docs, n_bar, anchors);
  std::vector<char> dropped(static_cast<std::size_t>(p), 0);
  for (Index j : thresholded) dropped[static_cast<std::size_t>(j)] = 1;
  std::vector<Index> survivors;
  for (Index j : anchors.complement(p))
    if (!dropped[static_cast<std::size_t>(j)]) survivors.push_back(j);

  // Anchor rows are assigned unconditionally; a below-cutoff anchor is only
  // a warning because removing it would change the declared partition.
  std::vector<std::string> anchor_warnings;
  for (const auto& g : anchors.groups)
    for (Index i : g)
      if (d_x(i) <= cutoff)
        anchor_warnings.push_back(
            "anchor word " + std::to_string(i + 1) +
            " falls below the frequency cutoff " + std::to_string(cutoff));

  const std::vector<Index> lflat = anchors.flat();
  const Matrix theta_ll =
      cooccurrence_block(x, lengths, lflat, lflat, cfg.threads);
  const Matrix theta_lsurv =
      cooccurrence_block(x, lengths, lflat, survivors, cfg.threads);
  const Matrix r_ll = normalized_cooccurrence(theta_ll, d_x, lflat, lflat);
  const Matrix r_lsurv =
      normalized_cooccurrence(theta_lsurv, d_x, lflat, survivors);
  const double seconds_moments = seconds_since(t0);

  BEstimate est = assemble_B(d_x, r_ll, r_lsurv, std::move(survivors),
                             std::move(thresholded), anchors, lengths, cfg);
  est.diag.seconds_moments = seconds_moments;
  est.diag.threshold_cutoff = cutoff;
  est.diag.harmonic_doc_length = n_bar;
  est.diag.warnings.insert(est.diag.warnings.begin(), anchor_warnings.begin(),
                           anchor_warnings.end());
  est.diag.seconds_total = seconds_since(t0);
  return est;
}

}  // namespace

Matrix anchor_rows(const AnchorPartition& anchors, Index p) {
  anchors.validate(p);
  Matrix b = Matrix::Zero(p, anchors.topic_count());
  for (Index k = 0; k < anchors.topic_count(); ++k)
    for (Index i : anchors.groups[static_cast<std::size_t>(k)]) b(i, k) = 1.0;
  return b;
}

MixingMoments group_average_moments(const Matrix& r_ll, const Matrix& r_lcols,
                                    const AnchorPartition& anchors,
                                    std::vector<Index> cols) {
  const Index k_topics = anchors.topic_count();
  const Index n_anchors = anchors.anchor_count();
  if (r_ll.rows() != n_anchors || r_ll.cols() != n_anchors)
    throw ValidationError("group_average_moments: R_LL block is " +
                          std::to_string(r_ll.rows()) + "x" +
                          std::to_string(r_ll.cols()) + ", expected " +
                          std::to_string(n_anchors) + " anchors");
  if (r_lcols.rows() != n_anchors ||
      r_lcols.cols() != static_cast<Index>(cols.size()))
    throw ValidationError("group_average_moments: R_L,cols block shape mismatch");

  // Offsets of each group inside anchors.flat() ordering.
  std::vector<Index> offset(static_cast<std::size_t>(k_topics) + 1, 0);
  for (Index k = 0; k < k_topics; ++k)
    offset[static_cast<std::size_t>(k) + 1] =
        offset[static_cast<std::size_t>(k)] +
        static_cast<Index>(anchors.groups[static_cast<std::size_t>(k)].size());

  MixingMoments mm;
  mm.m_hat.resize(k_topics, k_topics);
  for (Index ka = 0; ka < k_topics; ++ka)
    for (Index kb = 0; kb < k_topics; ++kb) {
      double sum = 0.0;
      for (Index a = offset[static_cast<std::size_t>(ka)];
           a < offset[static_cast<std::size_t>(ka) + 1]; ++a)
        for (Index b = offset[static_cast<std::size_t>(kb)];
             b < offset[static_cast<std::size_t>(kb) + 1]; ++b)
          sum += r_ll(a, b);
      const double cnt = static_cast<double>(
          (offset[static_cast<std::size_t>(ka) + 1] -
           offset[static_cast<std::size_t>(ka)]) *
          (offset[static_cast<std::size_t>(kb) + 1] -
           offset[static_cast<std::size_t>(kb)]));
      mm.m_hat(ka, kb) = sum / cnt;
    }

  mm.h_hat.resize(k_topics, static_cast<Index>(cols.size()));
  for (Index j = 0; j < mm.h_hat.cols(); ++j)
    for (Index ka = 0; ka < k_topics; ++ka) {
      double sum = 0.0;
      for (Index a = offset[static_cast<std::size_t>(ka)];
           a < offset[static_cast<std::size_t>(ka) + 1]; ++a)
        sum += r_lcols(a, j);
      mm.h_hat(ka, j) =
          sum / static_cast<double>(offset[static_cast<std::size_t>(ka) + 1] -
                                    offset[static_cast<std::size_t>(ka)]);
    }
  mm.lcomp = std::move(cols);
  return mm;
}

double harmonic_mean_length(const Vector& lengths) {
  if (lengths.size() == 0)
    throw ValidationError("harmonic_mean_length: empty lengths");
  double inv_sum = 0.0;
  for (Index i = 0; i < lengths.size(); ++i) {
    if (lengths(i) <= 0.0)
      throw ValidationError("harmonic_mean_length: nonpositive length");
    inv_sum += 1.0 / lengths(i);
  }
  return static_cast<double>(lengths.size()) / inv_sum;
}

double threshold_cutoff(Index n_docs, Index vocab_size, double n_bar) {
  return 7.0 * std::log(static_cast<double>(std::max(n_docs, vocab_size))) /
         (static_cast<double>(n_docs) * n_bar);
}

std::vector<Index> threshold_set(const Vector& d_x, Index n_docs, double n_bar,
                                 const AnchorPartition& anchors) {
  const Index p = d_x.size();
  anchors.validate(p);
  const double cutoff = threshold_cutoff(n_docs, p, n_bar);
  std::vector<char> is_anchor(static_cast<std::size_t>(p), 0);
  for (const auto& g : anchors.groups)
    for (Index j : g) is_anchor[static_cast<std::size_t>(j)] = 1;
  std::vector<Index> out;
  for (Index j = 0; j < p; ++j)
    if (!is_anchor[static_cast<std::size_t>(j)] && d_x(j) <= cutoff)
      out.push_back(j);
  return out;
}

LambdaSelection lambda_select(const Matrix& m_hat, const Vector& d_x,
                              const AnchorPartition& anchors,
                              const Vector& lengths, double c0, int t_min,
                              int t_max) {
  const Index k_topics = anchors.topic_count();
  if (m_hat.rows() != k_topics || m_hat.cols() != k_topics)
    throw ValidationError("lambda_select: M_hat shape does not match partition");
  if (t_min < 0 || t_max < t_min)
    throw ValidationError("lambda_select: bad grid range");

  double min_anchor_freq = std::numeric_limits<double>::infinity();
  for (const auto& g : anchors.groups)
    for (Index i : g) min_anchor_freq = std::min(min_anchor_freq, d_x(i));
  if (min_anchor_freq <= 0.0)
    throw NumericError(
        "lambda_select: an anchor word has zero observed frequency");

  const Index n = lengths.size();
  const Index p = d_x.size();
  double inv_len_mean = 0.0;
  for (Index i = 0; i < n; ++i) inv_len_mean += 1.0 / lengths(i);
  inv_len_mean /= static_cast<double>(n);

  const double k = static_cast<double>(k_topics);
  const double unit =
      c0 * k *
      std::sqrt(k * std::log(static_cast<double>(std::max(n, p))) /
                (min_anchor_freq * static_cast<double>(n)) * inv_len_mean);

  Eigen::SelfAdjointEigenSolver<Matrix> es(m_hat);
  if (es.info() != Eigen::Success)
    throw NumericError("lambda_select: eigendecomposition failed");
  const double lambda_min_m = es.eigenvalues().minCoeff();
  const double eps_inv = 1e-10 * m_hat.trace() / k;

  for (int t = t_min; t <= t_max; ++t) {
    const double lambda = static_cast<double>(t) * unit;
    if (lambda_min_m + lambda > eps_inv) {
      LambdaSelection sel;
      sel.lambda = lambda;
      sel.t_star = t;
      sel.lambda_min_m_hat = lambda_min_m;
      return sel;
    }
  }
  throw NumericError("lambda_select: no t in [" + std::to_string(t_min) + ", " +
                     std::to_string(t_max) +
                     "] makes M_hat + lambda(t) I invertible");
}

BEstimate estimate_B(const CorpusCounts& counts, const AnchorPartition& anchors,
                     const StmConfig& cfg) {
  counts.validate();
  anchors.validate(counts.vocab_size());
  StmConfig cfg_resolved = cfg;
  cfg_resolved.threads = resolve_threads(cfg.threads);

  const FreqMatrix x = doc_frequencies(counts);
  const Vector d_x = word_means(x);
  return estimate_from_frequencies(x, d_x, counts.lengths, anchors,
                                   cfg_resolved);
}

TopicMatrix normalize_to_A(const Vector& d_x, const Matrix& b_hat) {
  if (d_x.size() != b_hat.rows())
    throw ValidationError("normalize_to_A: dimension mismatch");
  Matrix a = d_x.asDiagonal() * b_hat;
  for (Index k = 0; k < a.cols(); ++k) {
    const double s = a.col(k).sum();
    if (s <= 0.0)
      throw NumericError("normalize_to_A: topic " + std::to_string(k + 1) +
                         " has no surviving word mass");
    a.col(k) /= s;
  }
  return TopicMatrix{std::move(a)};
}

EstimationReport run_stm(const CorpusCounts& counts,
                         const AnchorPartition& anchors,
                         const StmConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  counts.validate();
  anchors.validate(counts.vocab_size());
  StmConfig cfg_resolved = cfg;
  cfg_resolved.threads = resolve_threads(cfg.threads);

  const FreqMatrix x = doc_frequencies(counts);
  const Vector d_x = word_means(x);
  BEstimate est = estimate_from_frequencies(x, d_x, counts.lengths, anchors,
                                            cfg_resolved);

  EstimationReport rep;
  rep.a_hat = normalize_to_A(d_x, est.b_hat);
  rep.b_hat = std::move(est.b_hat);
  rep.lambda_used = est.lambda;
  rep.t_star = est.t_star;
  rep.thresholded = std::move(est.thresholded);
  rep.diag = std::move(est.diag);
  rep.diag.seconds_total = seconds_since(t0);
  return rep;
}

EstimationReport run_stm_population(const PopulationMoments& pm,
                                    const AnchorPartition& anchors,
                                    const StmConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const Index p = pm.r.rows();
  anchors.validate(p);

  const std::vector<Index> lflat = anchors.flat();
  const std::vector<Index> lcomp = anchors.complement(p);

  Matrix r_ll(static_cast<Index>(lflat.size()),
              static_cast<Index>(lflat.size()));
  for (std::size_t a = 0; a < lflat.size(); ++a)
    for (std::size_t b = 0; b < lflat.size(); ++b)
      r_ll(static_cast<Index>(a), static_cast<Index>(b)) =
          pm.r(lflat[a], lflat[b]);
  Matrix r_lcomp(static_cast<Index>(lflat.size()),
                 static_cast<Index>(lcomp.size()));
  for (std::size_t a = 0; a < lflat.size(); ++a)
    for (std::size_t b = 0; b < lcomp.size(); ++b)
      r_lcomp(static_cast<Index>(a), static_cast<Index>(b)) =
          pm.r(lflat[a], lcomp[b]);

  StmConfig cfg_pop = cfg;
  cfg_pop.threads = resolve_threads(cfg.threads);
  // No word is thresholded in the population limit, and document lengths
  // only scale the lambda grid. lambda(0) = 0 regardless, so any positive
  // length works here.
  const Vector pseudo_lengths = Vector::Constant(pm.pi.cols(), 2.0);

  BEstimate est = assemble_B(pm.d_pi, r_ll, r_lcomp, lcomp, {}, anchors,
                             pseudo_lengths, cfg_pop);

  EstimationReport rep;
  rep.a_hat = normalize_to_A(pm.d_pi, est.b_hat);
  rep.b_hat = std::move(est.b_hat);
  rep.lambda_used = est.lambda;
  rep.t_star = est.t_star;
  rep.diag = std::move(est.diag);
  rep.diag.seconds_total = seconds_since(t0);
  return rep;
}

}  // namespace stm
