#pragma once

#include "mld/config.hpp"

#include <iosfwd>

namespace mld {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitValidationFailure = 2;

/// Executes one run and writes its artifacts under config.out_dir.
/// Returns 0 on success, 1 on configuration error, 2 on validation failure.
int run(const RunConfig& config, std::ostream& log);

}  // namespace mld
