#include "cmpairs/error.hpp"

namespace cmpairs {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::parse_error: return "ParseError";
        case Errc::unknown_cluster: return "UnknownCluster";
        case Errc::duplicate_cluster: return "DuplicateCluster";
        case Errc::duplicate_unit: return "DuplicateUnit";
        case Errc::sample_exceeds_size: return "SampleExceedsSize";
        case Errc::empty_cluster: return "EmptyCluster";
        case Errc::odd_cluster_count: return "OddClusterCount";
        case Errc::ragged_covariates: return "RaggedCovariates";
        case Errc::non_binary_treatment: return "NonBinaryTreatment";
        case Errc::non_finite_value: return "NonFiniteValue";
        case Errc::missing_treatment: return "MissingTreatment";
        case Errc::empty_arm: return "EmptyArm";
        case Errc::singular_design: return "SingularDesign";
        case Errc::non_scalar_key: return "NonScalarKey";
        case Errc::invalid_design: return "InvalidDesign";
        case Errc::too_few_pairs: return "TooFewPairs";
        case Errc::too_many_pairs_for_exact: return "TooManyPairsForExact";
        case Errc::bad_b: return "BadB";
        case Errc::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace cmpairs
