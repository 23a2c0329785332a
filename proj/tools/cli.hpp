#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gdq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitMissingArtifact = 2;
inline constexpr int kExitInferenceFailure = 3;

/// Runs one `gdq` invocation; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gdq::cli
