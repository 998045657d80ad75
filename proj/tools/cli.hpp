#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace qlab::cli {

/// Seed from QLAB_SEED, if set and valid. Read once by main.
std::optional<std::uint64_t> seed_from_environment();

/// Runs one command line (without the program name). Returns 0 on success,
/// 1 on a domain error and 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        std::optional<std::uint64_t> env_seed = std::nullopt);

}  // namespace qlab::cli
