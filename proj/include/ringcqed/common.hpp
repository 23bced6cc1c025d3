#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ringcqed {

using cplx = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<cplx>;
using Triplet = Eigen::Triplet<cplx>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Rates given in MHz (cyclic) become angular rad/s.
inline constexpr double mhz_to_rad_s(double mhz) { return kTwoPi * 1e6 * mhz; }
inline constexpr double rad_s_to_mhz(double w) { return w / (kTwoPi * 1e6); }

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hilbert dimension over the configured cap.
class CapacityError : public Error {
public:
    CapacityError(const std::string& what, long dim, long cap)
        : Error(what), dimension(dim), cap(cap) {}
    long dimension;
    long cap;
};

/// Configuration field failed validation; `field` is a path like `emitters[2].gamma`.
class ValidationError : public Error {
public:
    ValidationError(std::string field_path, const std::string& what)
        : Error(field_path + ": " + what), field(std::move(field_path)) {}
    std::string field;
};

/// Invalid physical model (non-PSD dissipator, bad parameters).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of an analytic relation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Correlation normalization is undefined (zero intensity in a channel).
class NormalizationError : public Error {
public:
    using Error::Error;
};

/// Adaptive integrator could not make progress.
class StiffnessError : public Error {
public:
    using Error::Error;
};

/// Steady state is not unique; carries a basis of the Liouvillian null space
/// (each entry a row-stacked density-matrix vector) when it could be computed.
class DegenerateSteadyStateError : public Error {
public:
    DegenerateSteadyStateError(const std::string& what, std::vector<Eigen::VectorXcd> basis)
        : Error(what), null_space(std::move(basis)) {}
    std::vector<Eigen::VectorXcd> null_space;
};

}  // namespace ringcqed
