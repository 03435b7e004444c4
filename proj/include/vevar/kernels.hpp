#pragma once

// Data-parallel loops of the CAVI sweep and the ELBO. Every kernel has a
// serial reference path and an OpenMP path; both write disjoint slots and any
// reduction is summed serially in index order, so results are bitwise
// identical for every thread count.

#include "vevar/engine.hpp"

namespace vevar::kernels {

enum class Exec { Serial, Parallel };

inline Exec exec_for(bool parallel) { return parallel ? Exec::Parallel : Exec::Serial; }

/// q(beta^(s)) for every subject.
void update_betas(const PreparedData& data, VariationalState& state, const Moments& m, Exec exec);

/// All per-edge blocks for every (g, j). Edges are conditionally independent
/// given subject coefficients and variance factors.
void update_edges(const PreparedData& data, VariationalState& state, const Moments& m,
                  const UpdateSchedule& schedule, Exec exec);

/// E[f] and Var[f] for every (g, j) into `m`.
void gather_functions(const PreparedData& data, const VariationalState& state, Moments& m, Exec exec);

/// Sums of per-subject likelihood and entropy terms.
void subject_elbo(const PreparedData& data, const VariationalState& state, ElboTerms& out, Exec exec);

/// Sums of per-edge terms.
void edge_elbo(const PreparedData& data, const VariationalState& state, const Moments& m,
               ElboTerms& out, Exec exec);

/// Number of OpenMP threads the parallel path will use.
int max_threads();
void set_threads(int n);

}  // namespace vevar::kernels
