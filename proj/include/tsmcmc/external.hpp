#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "tsmcmc/generators.hpp"

namespace tsmcmc {

struct ExternalSourceConfig {
  std::vector<std::string> command;  // executable followed by its arguments
  int handshake_timeout_ms = 5000;
  int proposal_timeout_ms = 5000;

  void validate() const;
};

/// Child process with its stdin/stdout connected to pipes; stderr is
/// inherited. Reads are line-oriented with a deadline.
class ChildProcess {
 public:
  explicit ChildProcess(const std::vector<std::string>& command);
  ~ChildProcess();

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  /// Writes `line` plus '\n'. Throws ChildExit if the pipe is closed.
  void write_line(const std::string& line);
  /// Next '\n'-terminated line without the terminator. Throws Timeout or ChildExit.
  std::string read_line(std::chrono::milliseconds timeout);

  /// Closes stdin, waits up to `grace` for exit, then kills. Returns the exit
  /// status (-1 when killed or already reaped).
  int terminate(std::chrono::milliseconds grace);

  bool running();
  int pid() const noexcept { return pid_; }

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  bool reaped_ = false;
  int exit_status_ = -1;
};

/// Proposal source served by an external process over the line-delimited
/// JSON protocol (hello/ready, propose/proposal, shutdown). One request is in
/// flight at a time; a child that exits is restarted once per source.
class ExternalSource final : public ProposalSource {
 public:
  ExternalSource(ExternalSourceConfig cfg, std::size_t dims, std::size_t context_len);
  ~ExternalSource() override;

  std::size_t dims() const override { return dims_; }
  std::size_t context_len() const override { return context_len_; }
  Vector propose(const Matrix& context, RandomStream& rng) override;
  nlohmann::json describe() const override;

  std::size_t restarts() const noexcept { return restarts_; }
  /// Sends shutdown and returns the child's exit status.
  int shutdown();

 private:
  void start();
  Vector request(const Matrix& context, std::uint64_t seed);

  ExternalSourceConfig cfg_;
  std::size_t dims_;
  std::size_t context_len_;
  std::unique_ptr<ChildProcess> child_;
  std::uint64_t next_id_ = 0;
  std::size_t restarts_ = 0;
};

std::unique_ptr<ExternalSource> spawn_external(const ExternalSourceConfig& cfg, std::size_t dims,
                                               std::size_t context_len);

}  // namespace tsmcmc
