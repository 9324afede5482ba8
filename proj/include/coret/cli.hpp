#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>

#include "coret/embedding.hpp"

namespace coret::cli {

// Seed used by every subcommand when --seed is not given.
inline constexpr std::uint64_t kDefaultSeed = 0;

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2 };

// Embedder spec: "toy" (fresh parameters from the seed), "toy:<params-file>"
// or "provider:<URL>".
std::unique_ptr<Embedder> make_embedder(const std::string& spec, std::uint64_t seed);

// Runs one subcommand. Results go to `out` unless written to files;
// diagnostics and usage text go to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace coret::cli
