#pragma once

#include "qsurf/geometry.hpp"
#include "qsurf/models.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace qsurf {

/// Oracle quantities shared by every replication of a study: the true
/// quantile offsets F^{-1}_{<X,u>}(alpha) and h(u, alpha) on the
/// (direction x level) grid.
struct ReplicationPlan
{
  ModelSpec model;
  DirectionGrid grid;
  std::vector<double> alphas; //!< ascending
  Eigen::MatrixXd true_offset; //!< k x m
  Eigen::MatrixXd true_h;      //!< k x m

  static ReplicationPlan make(ModelSpec model, DirectionGrid grid, std::vector<double> alphas);
};

/// One simulated sample reduced to the quantities every rate study needs.
/// Offsets are observer-free; Y_n - Y is the same seen from any observer.
struct Replication
{
  std::size_t n = 0;
  std::uint64_t rep = 0;
  Eigen::MatrixXd empirical_offset; //!< order statistic of rank ceil(n alpha)
  Eigen::MatrixXd count_le;         //!< #{<X_i,u> <= true offset}

  //! Y_n - Y per (direction, level).
  Eigen::MatrixXd error(const ReplicationPlan& plan) const;
  //! E_n = sqrt(n) (P_n(H(u,alpha)) - alpha).
  Eigen::MatrixXd empirical_process(const ReplicationPlan& plan) const;
  double sup_error(const ReplicationPlan& plan) const;
  //! sup |sqrt(n)(Y_n - Y) + E_n / h|.
  double bk_sup_residual(const ReplicationPlan& plan) const;
};

//! Stream id of replication `rep` at sample size n (rep < 2^24).
std::uint64_t replication_stream(std::size_t n, std::uint64_t rep);

//! Draws sample(model, n, seed, replication_stream(n, rep)) and reduces it.
Replication run_replication(const ReplicationPlan& plan,
                            std::size_t n,
                            std::uint64_t seed,
                            std::uint64_t rep);

/// Exact order statistics at ascending 1-based `ranks` and counts of values
/// <= each ascending threshold, without a full sort when possible.
///
/// Values are bucketed in one pass against windows threshold +- halfwidth;
/// each requested order statistic is then selected inside its window. If a
/// rank falls outside its window, or the windows overlap, the routine sorts
/// instead, so the answer is always exact. `values` is permuted.
void select_order_statistics(std::span<double> values,
                             std::span<const std::size_t> ranks,
                             std::span<const double> thresholds,
                             std::span<const double> halfwidths,
                             std::span<double> stats_out,
                             std::span<std::size_t> counts_out);

} // namespace qsurf
