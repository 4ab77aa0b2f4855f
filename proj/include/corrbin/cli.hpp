// Command-line front end: gen, check, bounds, verify, bench.
//
// Exit codes: 0 success, 1 IO failure, 2 infeasible input, 3 a verification
// or benchmark check failed, 64 usage error.

#ifndef CORRBIN_CLI_HPP
#define CORRBIN_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "corrbin/constraints.hpp"
#include "corrbin/core.hpp"
#include "corrbin/generators.hpp"

namespace corrbin::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitCheckFailed = 3;
inline constexpr int kExitUsage = 64;

/// Environment variable naming the directory for default output files.
inline constexpr const char* kOutputDirEnv = "CORRBIN_OUTPUT_DIR";

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Serialization helpers, exposed for tests and tools.

nlohmann::json report_to_json(const FeasibilityReport& report);
nlohmann::json spec_to_json(const CorrelationSpec& spec);
CorrelationSpec spec_from_json(const nlohmann::json& j, std::size_t m);

/// Sidecar metadata written next to generated samples.
nlohmann::json sample_metadata(const SampleMatrix& samples, const GenerationPlan& plan, bool header,
                               const std::string& format);

/// CSV: optional header x1,...,xm, then one 0/1 row per sample, '\n' line ends.
std::string samples_to_csv(const SampleMatrix& samples, bool header);
std::string samples_to_json(const SampleMatrix& samples);

/// Parses a square CSV correlation matrix; checks symmetry to 1e-12 and symmetrizes.
Matrix parse_matrix_csv(const std::string& text);

/// Comma/whitespace separated numbers.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace corrbin::cli

#endif  // CORRBIN_CLI_HPP
