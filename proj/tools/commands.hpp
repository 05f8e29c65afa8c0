#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace pinnrc::cli {

// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // I/O or unexpected errors
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;

/// Environment variable naming the default output root.
inline constexpr const char* kOutputEnv = "PINN_RC_OUT";

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // overrides config and env
  std::optional<std::uint64_t> seed;         // overrides train.seed
};

int cmd_forward(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_inverse(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_synth(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_compare(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);

struct GradcheckCommandOptions {
  std::optional<std::uint64_t> seed;
  bool inject_fault = false;  // corrupt one backward entry; the check must fail
};

int cmd_gradcheck(const GradcheckCommandOptions& opts, std::ostream& out);

}  // namespace pinnrc::cli
