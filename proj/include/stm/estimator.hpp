#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stm/model.hpp"
#include "stm/types.hpp"

namespace stm {

struct StmConfig {
  double c0 = 0.01;       // constant in the data-driven lambda grid
  double qp_tol = 1e-10;
  int qp_max_iter = 10000;
  int lambda_t_min = 0;   // first grid point tried; > 0 forces the ridge branch
  int lambda_t_max = 100;
  std::optional<double> force_lambda;  // bypasses the grid entirely
  int threads = 1;
};

/// p x K matrix with row i = e_k for i in L_k; non-anchor rows left at zero
/// as placeholders to be filled by thresholding or the per-row programs.
Matrix anchor_rows(const AnchorPartition& anchors, Index p);

/// K x K mixing moment and the right-hand-side columns of the per-row
/// programs. lcomp lists the non-anchor words h_hat covers, in column order
/// (the surviving words when thresholding ran first).
struct MixingMoments {
  Matrix m_hat;              // K x K
  Matrix h_hat;              // K x |lcomp|
  std::vector<Index> lcomp;
};

/// Averages R_hat within anchor groups: m_hat[a,b] is the mean of r_ll over
/// L_a x L_b, and h_hat[a,j] the mean of r_lcols[., j] over L_a. r_ll rows
/// and columns follow anchors.flat() order; r_lcols columns follow `cols`.
MixingMoments group_average_moments(const Matrix& r_ll, const Matrix& r_lcols,
                                    const AnchorPartition& anchors,
                                    std::vector<Index> cols);

/// n / sum_i (1/N_i); equals N when all documents have the same length.
double harmonic_mean_length(const Vector& lengths);

/// 7 log(max(n, p)) / (n * n_bar).
double threshold_cutoff(Index n_docs, Index vocab_size, double n_bar);

/// Low-frequency non-anchor words: { j in L^c : d_x[j] <= cutoff }, sorted
/// ascending. Anchor rows are never thresholded.
std::vector<Index> threshold_set(const Vector& d_x, Index n_docs, double n_bar,
                                 const AnchorPartition& anchors);

struct LambdaSelection {
  double lambda = 0.0;
  int t_star = 0;
  double lambda_min_m_hat = 0.0;
};

/// Data-driven ridge grid:
///
///   lambda(t) = t * c0 * K * sqrt( K log(n v p) / (min_L d_x * n)
///                                  * n^-1 sum_i 1/N_i )
///
/// returning the smallest t in {t_min, ..., t_max} that makes
/// M_hat + lambda(t) I invertible, i.e. lambda_min above the relative floor
/// 1e-10 trace(M_hat)/K. Throws NumericError when the minimum anchor
/// frequency is zero or the grid is exhausted.
LambdaSelection lambda_select(const Matrix& m_hat, const Vector& d_x,
                              const AnchorPartition& anchors,
                              const Vector& lengths, double c0, int t_min = 0,
                              int t_max = 100);

struct EstimationDiagnostics {
  double lambda_min_m_hat = 0.0;
  double threshold_cutoff = 0.0;
  double harmonic_doc_length = 0.0;
  std::vector<Index> qp_nonconverged;  // word indices whose program hit max_iter
  std::vector<std::string> warnings;
  double seconds_moments = 0.0;
  double seconds_qp = 0.0;
  double seconds_total = 0.0;
};

struct BEstimate {
  Matrix b_hat;  // p x K; anchor rows e_k, thresholded rows zero
  MixingMoments moments;
  std::vector<Index> thresholded;
  double lambda = 0.0;
  int t_star = 0;
  EstimationDiagnostics diag;
};

/// Steps 2-5 of the estimation pipeline: moments, thresholding, lambda grid,
/// per-row simplex programs. Anchor words with zero observed frequency are a
/// NumericError; anchors below the threshold cutoff only record a warning.
BEstimate estimate_B(const CorpusCounts& counts, const AnchorPartition& anchors,
                     const StmConfig& cfg = {});

/// Normalizes D_X B_hat to unit column sums. Throws NumericError, naming the
/// topic, when a column carries no mass.
TopicMatrix normalize_to_A(const Vector& d_x, const Matrix& b_hat);

struct EstimationReport {
  TopicMatrix a_hat;
  Matrix b_hat;
  double lambda_used = 0.0;
  int t_star = 0;  // -1 when lambda was forced
  std::vector<Index> thresholded;
  EstimationDiagnostics diag;
};

/// The full pipeline: frequencies, word means, co-occurrence blocks,
/// estimate_B, column normalization. Deterministic given (counts, anchors,
/// cfg) for any thread count.
EstimationReport run_stm(const CorpusCounts& counts,
                         const AnchorPartition& anchors,
                         const StmConfig& cfg = {});

/// Same pipeline fed with exact population moments instead of sample
/// moments: no thresholding, lambda = 0 unless forced. Recovers A up to
/// solver tolerance on any valid instance.
EstimationReport run_stm_population(const PopulationMoments& pm,
                                    const AnchorPartition& anchors,
                                    const StmConfig& cfg = {});

}  // namespace stm
