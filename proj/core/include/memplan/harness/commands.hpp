#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace memplan::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitRuntimeError = 2;

struct CommonOptions {
  std::filesystem::path config;
  std::optional<std::string> mode;  // overrides the configured judge mode
};

struct EpisodeCommand {
  CommonOptions common;
  std::filesystem::path tasks;
  std::string task_id;
};

struct EvalCommand {
  CommonOptions common;
  std::filesystem::path tasks;
};

struct TtlCommand {
  CommonOptions common;
  std::filesystem::path tasks;
  std::optional<std::size_t> stop_after_steps;
};

struct MemCommand {
  CommonOptions common;
  std::string action;  // inspect, score, clear
  std::string question;
  std::optional<std::string> caption;
  std::optional<std::string> bucket;
  bool dry_run = false;
  bool json = false;
};

struct StageCommand {
  CommonOptions common;
  std::filesystem::path tasks;
  std::filesystem::path archive;  // contexts archive (stage 2 and collection)
};

struct VerifyCommand {
  std::vector<std::filesystem::path> manifests;
};

// Each command prints its results to `out`, diagnostics to `err`, and
// returns an exit status: 0 ok, 1 user error, 2 runtime error.
int cmd_episode(const EpisodeCommand& cmd, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalCommand& cmd, std::ostream& out, std::ostream& err);
int cmd_ttl(const TtlCommand& cmd, std::ostream& out, std::ostream& err);
int cmd_mem(const MemCommand& cmd, std::ostream& out, std::ostream& err);
int cmd_stage1(const StageCommand& cmd, std::ostream& out, std::ostream& err);
int cmd_collect_contexts(const StageCommand& cmd, std::ostream& out, std::ostream& err);
int cmd_stage2(const StageCommand& cmd, std::ostream& out, std::ostream& err);
int cmd_export_verify(const VerifyCommand& cmd, std::ostream& out, std::ostream& err);

}  // namespace memplan::harness
