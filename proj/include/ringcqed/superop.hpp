#pragma once

// Helpers for vectorized density matrices.
//
// Convention: row stacking, vec(rho)[i * D + j] = rho(i, j). With it
// vec(A rho B) = (A kron B^T) vec(rho), so the Hamiltonian part of the
// Liouvillian reads -i (H kron 1 - 1 kron H^T).

#include <optional>

#include "ringcqed/common.hpp"

namespace ringcqed {

using Operator = SparseMatrix;

/// Vectorized generator acting on row-stacked density matrices of dimension D.
struct Superoperator {
    SparseMatrix matrix;
    Eigen::Index hilbert_dim = 0;
    /// Optional integer charge per Hilbert basis state, conserved in the sense
    /// that L never mixes entries rho(i, j) with different q(i) - q(j). Solvers
    /// use it to work in the q(i) = q(j) block; it is verified before use.
    std::vector<int> charges;

    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const { return matrix * v; }
};

/// Entries of vec(rho) with charges[i] == charges[j], with L restricted to them.
struct Sector {
    std::vector<Eigen::Index> indices;  ///< sorted full indices
    SparseMatrix matrix;                ///< restricted generator
    Eigen::Index full_size = 0;

    Eigen::VectorXcd extract(const Eigen::VectorXcd& full) const;
    Eigen::MatrixXcd extract(const Eigen::MatrixXcd& full) const;
    Eigen::VectorXcd embed(const Eigen::VectorXcd& reduced) const;
    Eigen::RowVectorXcd extract_functional(const Eigen::RowVectorXcd& w) const;
};

/// Balanced sector of L when charges are set and L does not couple it to the
/// rest of the space; otherwise an empty optional.
std::optional<Sector> balanced_sector(const Superoperator& l);

SparseMatrix identity_op(Eigen::Index dim);
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);
SparseMatrix to_sparse(const Eigen::MatrixXcd& m);

/// A rho
SparseMatrix spre(const Operator& a);
/// rho B
SparseMatrix spost(const Operator& b);
/// A rho B^dagger
SparseMatrix sandwich(const Operator& a, const Operator& b);
/// -i [H, rho]
SparseMatrix commutator_generator(const Operator& h);
/// J rho J^dagger - {J^dagger J, rho} / 2
SparseMatrix lindblad_dissipator(const Operator& jump);

Eigen::VectorXcd vec(const Eigen::MatrixXcd& rho);
Eigen::MatrixXcd unvec(const Eigen::VectorXcd& v, Eigen::Index dim);

/// Row vector w with Tr(O rho) = w * vec(rho) (plain, non-conjugating product).
Eigen::RowVectorXcd expectation_functional(const Operator& o);
Eigen::RowVectorXcd trace_functional(Eigen::Index dim);

/// Largest absolute entry.
double max_abs(const SparseMatrix& m);
/// Max |H - H^dagger| relative to max |H|.
double hermiticity_defect(const SparseMatrix& h);

}  // namespace ringcqed
