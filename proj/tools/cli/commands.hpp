#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "flexac/localization.hpp"
#include "flexac/toymodel.hpp"
#include "run_config.hpp"

namespace flexac::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNumericError = 3;

/// Runs cfg.command. Results go to cfg.output_dir / cfg.output_file (and, for
/// the metric commands, to `out`). Throws flexac::Error on failure.
void run_command(const RunConfig& cfg, std::ostream& out);

/// Loads a TOYM1 file or builds "seed:<seed>:<vocab>:<dim>:<layers>:<mlp>".
ToyModel resolve_model(const std::string& spec);

std::vector<TokenPair> load_token_pairs(const std::string& path);

/// write-temp-then-rename
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace flexac::cli
