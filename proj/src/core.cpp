#include "latwave/core.hpp"

namespace latwave {

const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::WrongClass: return "WrongClass";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::SingularJacobian: return "SingularJacobian";
        case ErrorKind::StepUnderflow: return "StepUnderflow";
        case ErrorKind::RankDeficiency: return "RankDeficiency";
        case ErrorKind::NormalizationViolated: return "NormalizationViolated";
        case ErrorKind::IrrationalWavenumber: return "IrrationalWavenumber";
        case ErrorKind::DivisibilityViolation: return "DivisibilityViolation";
        case ErrorKind::BranchCountMismatch: return "BranchCountMismatch";
        case ErrorKind::MatchingAmbiguity: return "MatchingAmbiguity";
        case ErrorKind::ContourTooClose: return "ContourTooClose";
        case ErrorKind::ProjectorRankMismatch: return "ProjectorRankMismatch";
        case ErrorKind::DerivativeUnavailable: return "DerivativeUnavailable";
        case ErrorKind::BranchMissing: return "BranchMissing";
        case ErrorKind::AssignmentAmbiguous: return "AssignmentAmbiguous";
        case ErrorKind::MultiplicityMismatch: return "MultiplicityMismatch";
        case ErrorKind::NonFiniteState: return "NonFiniteState";
        case ErrorKind::PacketDispersed: return "PacketDispersed";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::IOError: return "IOError";
        case ErrorKind::MissingArtifacts: return "MissingArtifacts";
    }
    return "Unknown";
}

}  // namespace latwave
