#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cmpairs {

/// Failure categories raised by the library. Each maps to a stable name that
/// the command-line tool reports in its error JSON.
enum class Errc {
    parse_error,
    unknown_cluster,
    duplicate_cluster,
    duplicate_unit,
    sample_exceeds_size,
    empty_cluster,
    odd_cluster_count,
    ragged_covariates,
    non_binary_treatment,
    non_finite_value,
    missing_treatment,
    empty_arm,
    singular_design,
    non_scalar_key,
    invalid_design,
    too_few_pairs,
    too_many_pairs_for_exact,
    bad_b,
    invalid_argument,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace cmpairs
