#include "ringcqed/superop.hpp"

#include <algorithm>
#include <cmath>

namespace ringcqed {

SparseMatrix identity_op(Eigen::Index dim) {
    SparseMatrix id(dim, dim);
    id.setIdentity();
    return id;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
    const Eigen::Index br = b.rows();
    const Eigen::Index bc = b.cols();
    for (Eigen::Index ka = 0; ka < a.outerSize(); ++ka) {
        for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia) {
            for (Eigen::Index kb = 0; kb < b.outerSize(); ++kb) {
                for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib) {
                    trips.emplace_back(ia.row() * br + ib.row(), ia.col() * bc + ib.col(),
                                       ia.value() * ib.value());
                }
            }
        }
    }
    SparseMatrix out(a.rows() * br, a.cols() * bc);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

SparseMatrix to_sparse(const Eigen::MatrixXcd& m) {
    std::vector<Triplet> trips;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (m(i, j) != cplx(0.0)) trips.emplace_back(i, j, m(i, j));
    SparseMatrix out(m.rows(), m.cols());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

SparseMatrix spre(const Operator& a) { return kron(a, identity_op(a.rows())); }

SparseMatrix spost(const Operator& b) {
    return kron(identity_op(b.rows()), SparseMatrix(b.transpose()));
}

SparseMatrix sandwich(const Operator& a, const Operator& b) {
    return kron(a, SparseMatrix(b.conjugate()));
}

SparseMatrix commutator_generator(const Operator& h) {
    SparseMatrix out = spre(h) - spost(h);
    return out * cplx(0.0, -1.0);
}

SparseMatrix lindblad_dissipator(const Operator& jump) {
    const SparseMatrix jdj = SparseMatrix(jump.adjoint()) * jump;
    SparseMatrix out = sandwich(jump, jump);
    out -= 0.5 * spre(jdj);
    out -= 0.5 * spost(jdj);
    return out;
}

Eigen::VectorXcd vec(const Eigen::MatrixXcd& rho) {
    const Eigen::Index d = rho.rows();
    Eigen::VectorXcd v(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) v(i * d + j) = rho(i, j);
    return v;
}

Eigen::MatrixXcd unvec(const Eigen::VectorXcd& v, Eigen::Index dim) {
    Eigen::MatrixXcd rho(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) rho(i, j) = v(i * dim + j);
    return rho;
}

Eigen::RowVectorXcd expectation_functional(const Operator& o) {
    const Eigen::Index d = o.rows();
    Eigen::RowVectorXcd w = Eigen::RowVectorXcd::Zero(d * d);
    // Tr(O rho) = sum_ij O(j, i) rho(i, j)
    for (Eigen::Index k = 0; k < o.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(o, k); it; ++it) w(it.col() * d + it.row()) += it.value();
    return w;
}

Eigen::RowVectorXcd trace_functional(Eigen::Index dim) {
    Eigen::RowVectorXcd w = Eigen::RowVectorXcd::Zero(dim * dim);
    for (Eigen::Index i = 0; i < dim; ++i) w(i * dim + i) = 1.0;
    return w;
}

double max_abs(const SparseMatrix& m) {
    double out = 0.0;
    for (Eigen::Index k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) out = std::max(out, std::abs(it.value()));
    return out;
}

double hermiticity_defect(const SparseMatrix& h) {
    const double scale = max_abs(h);
    if (scale == 0.0) return 0.0;
    return max_abs(SparseMatrix(h - SparseMatrix(h.adjoint()))) / scale;
}

}  // namespace ringcqed

namespace ringcqed {

Eigen::VectorXcd Sector::extract(const Eigen::VectorXcd& full) const {
    Eigen::VectorXcd out(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) out(static_cast<Eigen::Index>(k)) = full(indices[k]);
    return out;
}

Eigen::MatrixXcd Sector::extract(const Eigen::MatrixXcd& full) const {
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(indices.size()), full.cols());
    for (std::size_t k = 0; k < indices.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = full.row(indices[k]);
    return out;
}

Eigen::VectorXcd Sector::embed(const Eigen::VectorXcd& reduced) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(full_size);
    for (std::size_t k = 0; k < indices.size(); ++k) out(indices[k]) = reduced(static_cast<Eigen::Index>(k));
    return out;
}

Eigen::RowVectorXcd Sector::extract_functional(const Eigen::RowVectorXcd& w) const {
    Eigen::RowVectorXcd out(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) out(static_cast<Eigen::Index>(k)) = w(indices[k]);
    return out;
}

std::optional<Sector> balanced_sector(const Superoperator& l) {
    const Eigen::Index d = l.hilbert_dim;
    if (static_cast<Eigen::Index>(l.charges.size()) != d) return std::nullopt;
    const Eigen::Index n = d * d;
    std::vector<Eigen::Index> position(static_cast<std::size_t>(n), -1);
    Sector s;
    s.full_size = n;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            if (l.charges[i] == l.charges[j]) {
                position[static_cast<std::size_t>(i * d + j)] = static_cast<Eigen::Index>(s.indices.size());
                s.indices.push_back(i * d + j);
            }
    if (static_cast<Eigen::Index>(s.indices.size()) == n) return std::nullopt;
    std::vector<Triplet> trips;
    for (Eigen::Index k = 0; k < l.matrix.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(l.matrix, k); it; ++it) {
            const Eigen::Index r = position[static_cast<std::size_t>(it.row())];
            const Eigen::Index c = position[static_cast<std::size_t>(it.col())];
            if ((r < 0) != (c < 0)) return std::nullopt;  // couples the sector to the rest
            if (r >= 0) trips.emplace_back(r, c, it.value());
        }
    const auto m = static_cast<Eigen::Index>(s.indices.size());
    s.matrix.resize(m, m);
    s.matrix.setFromTriplets(trips.begin(), trips.end());
    s.matrix.makeCompressed();
    return s;
}

}  // namespace ringcqed
