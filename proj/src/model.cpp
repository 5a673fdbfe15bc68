#include "stm/model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace stm {

bool ValidationReport::ok() const {
  if (!separability_ok || !weights_pd_ok) return false;
  for (const auto& c : declared_anchors)
    if (!c.ok()) return false;
  return true;
}

ValidationReport validate_model(const TopicMatrix& a, const WeightMatrix& w,
                                const AnchorPartition& anchors) {
  a.validate();
  w.validate();
  if (a.topic_count() != w.topic_count())
    throw ValidationError("validate_model: A has " +
                          std::to_string(a.topic_count()) + " topics but W has " +
                          std::to_string(w.topic_count()));
  anchors.validate(a.word_count());
  if (anchors.topic_count() != a.topic_count())
    throw ValidationError("validate_model: partition has " +
                          std::to_string(anchors.topic_count()) +
                          " groups but A has " + std::to_string(a.topic_count()) +
                          " topics");

  ValidationReport rep;
  const Index k_topics = a.topic_count();

  // Declared anchors: positive in their own topic, zero in every other.
  for (Index k = 0; k < k_topics; ++k) {
    for (Index j : anchors.groups[static_cast<std::size_t>(k)]) {
      AnchorCheck c;
      c.word = j;
      c.topic = k;
      c.positive_in_topic = a.values(j, k) > 0.0;
      c.zero_elsewhere = true;
      for (Index l = 0; l < k_topics; ++l)
        if (l != k && a.values(j, l) != 0.0) c.zero_elsewhere = false;
      if (!c.ok())
        rep.messages.push_back("word " + std::to_string(j + 1) +
                               " is not an anchor of topic " +
                               std::to_string(k + 1));
      rep.declared_anchors.push_back(c);
    }
  }

  // Separability over all of A, not just the declared rows: does every topic
  // own at least one row supported on it alone?
  rep.topic_has_anchor.assign(static_cast<std::size_t>(k_topics), false);
  for (Index j = 0; j < a.word_count(); ++j) {
    Index support = -1;
    bool single = true;
    for (Index k = 0; k < k_topics; ++k) {
      if (a.values(j, k) > 0.0) {
        if (support >= 0) {
          single = false;
          break;
        }
        support = k;
      }
    }
    if (single && support >= 0)
      rep.topic_has_anchor[static_cast<std::size_t>(support)] = true;
  }
  rep.separability_ok = true;
  for (Index k = 0; k < k_topics; ++k) {
    if (!rep.topic_has_anchor[static_cast<std::size_t>(k)]) {
      rep.separability_ok = false;
      rep.messages.push_back("topic " + std::to_string(k + 1) +
                             " has no anchor word in A");
    }
  }

  const Matrix gram = w.values * w.values.transpose() /
                      static_cast<double>(w.doc_count());
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  rep.lambda_min_w = es.eigenvalues().minCoeff();
  rep.weights_pd_ok = rep.lambda_min_w > 0.0;
  if (!rep.weights_pd_ok)
    rep.messages.push_back("topic-weight second moment is singular (lambda_min = " +
                           std::to_string(rep.lambda_min_w) + ")");
  return rep;
}

PopulationMoments population_moments(const TopicMatrix& a,
                                     const WeightMatrix& w) {
  a.validate();
  w.validate();
  if (a.topic_count() != w.topic_count())
    throw ValidationError("population_moments: topic counts disagree");

  const double n = static_cast<double>(w.doc_count());
  PopulationMoments pm;
  pm.pi = a.values * w.values;
  pm.theta = (pm.pi * pm.pi.transpose()) / n;
  pm.d_pi = pm.pi.rowwise().sum() / n;
  pm.d_w = w.values.rowwise().sum() / n;

  for (Index j = 0; j < pm.d_pi.size(); ++j)
    if (pm.d_pi(j) <= 0.0)
      throw NumericError("population_moments: word " + std::to_string(j + 1) +
                         " has zero expected frequency");

  pm.r = pm.d_pi.cwiseInverse().asDiagonal() * pm.theta *
         pm.d_pi.cwiseInverse().asDiagonal();
  const Matrix w_gram = (w.values * w.values.transpose()) / n;
  pm.m = pm.d_w.cwiseInverse().asDiagonal() * w_gram *
         pm.d_w.cwiseInverse().asDiagonal();
  pm.b = pm.d_pi.cwiseInverse().asDiagonal() * a.values * pm.d_w.asDiagonal();
  return pm;
}

TopicMatrix noise_free_recovery(const PopulationMoments& pm,
                                const AnchorPartition& anchors) {
  const Index p = pm.r.rows();
  const Index k_topics = anchors.topic_count();
  anchors.validate(p);

  const std::vector<Index> lcomp = anchors.complement(p);

  // Group-average R over L x L to read off M, then solve the linear system
  // R_{L^c L} B_L = B_{L^c} M B_L^T B_L for the non-anchor rows of B. With
  // B_L rows equal to basis vectors, B_L^T B_L is diagonal with the group
  // sizes and averaging over groups implements (B_L^T B_L)^{-1} B_L^T.
  Matrix m = Matrix::Zero(k_topics, k_topics);
  for (Index ka = 0; ka < k_topics; ++ka) {
    for (Index kb = 0; kb < k_topics; ++kb) {
      double sum = 0.0;
      Index cnt = 0;
      for (Index i : anchors.groups[static_cast<std::size_t>(ka)])
        for (Index j : anchors.groups[static_cast<std::size_t>(kb)]) {
          sum += pm.r(i, j);
          ++cnt;
        }
      m(ka, kb) = sum / static_cast<double>(cnt);
    }
  }

  Matrix b = Matrix::Zero(p, k_topics);
  for (Index k = 0; k < k_topics; ++k)
    for (Index i : anchors.groups[static_cast<std::size_t>(k)]) b(i, k) = 1.0;

  if (!lcomp.empty()) {
    Matrix group_avg(static_cast<Index>(lcomp.size()), k_topics);
    for (std::size_t jj = 0; jj < lcomp.size(); ++jj) {
      for (Index k = 0; k < k_topics; ++k) {
        double sum = 0.0;
        const auto& g = anchors.groups[static_cast<std::size_t>(k)];
        for (Index i : g) sum += pm.r(lcomp[jj], i);
        group_avg(static_cast<Index>(jj), k) = sum / static_cast<double>(g.size());
      }
    }
    // Rows of B_{L^c} solve beta^T M = avg, i.e. M beta = avg^T (M symmetric).
    Eigen::LDLT<Matrix> solver(m);
    if (solver.info() != Eigen::Success)
      throw NumericError("noise_free_recovery: M is not factorizable");
    const Matrix rows = solver.solve(group_avg.transpose()).transpose();
    for (std::size_t jj = 0; jj < lcomp.size(); ++jj)
      b.row(lcomp[jj]) = rows.row(static_cast<Index>(jj));
  }

  Matrix a_hat = pm.d_pi.asDiagonal() * b;
  for (Index k = 0; k < k_topics; ++k) {
    const double s = a_hat.col(k).sum();
    if (s <= 0.0)
      throw NumericError("noise_free_recovery: topic " + std::to_string(k + 1) +
                         " column has no mass");
    a_hat.col(k) /= s;
  }
  return TopicMatrix{std::move(a_hat)};
}

}  // namespace stm
