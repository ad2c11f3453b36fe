#pragma once
// Common numeric aliases and the error type shared by all modules.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace latwave {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

enum class ErrorKind {
    DimensionMismatch,
    WrongClass,
    NoConvergence,
    SingularJacobian,
    StepUnderflow,
    RankDeficiency,
    NormalizationViolated,
    IrrationalWavenumber,
    DivisibilityViolation,
    BranchCountMismatch,
    MatchingAmbiguity,
    ContourTooClose,
    ProjectorRankMismatch,
    DerivativeUnavailable,
    BranchMissing,
    AssignmentAmbiguous,
    MultiplicityMismatch,
    NonFiniteState,
    PacketDispersed,
    SchemaError,
    IOError,
    MissingArtifacts,
};

const char* error_kind_name(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace latwave
