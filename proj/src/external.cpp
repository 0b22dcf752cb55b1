#include "tsmcmc/external.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace tsmcmc {

using nlohmann::json;

void ExternalSourceConfig::validate() const {
  if (command.empty() || command.front().empty()) throw Error(ErrorCode::InvalidArgument, "external command is empty");
  if (handshake_timeout_ms <= 0 || proposal_timeout_ms <= 0) {
    throw Error(ErrorCode::InvalidArgument, "external timeouts must be positive");
  }
}

namespace {

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

void ignore_sigpipe() {
  struct sigaction sa {};
  sa.sa_handler = SIG_IGN;
  ::sigaction(SIGPIPE, &sa, nullptr);
}

}  // namespace

ChildProcess::ChildProcess(const std::vector<std::string>& command) {
  if (command.empty()) throw Error(ErrorCode::SpawnError, "empty command");
  ignore_sigpipe();
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(ErrorCode::SpawnError, std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(ErrorCode::SpawnError, std::strerror(errno));
  }
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw Error(ErrorCode::SpawnError, std::strerror(errno));
  }

  std::vector<char*> argv;
  for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
    throw Error(ErrorCode::SpawnError, std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execvp(argv[0], argv.data());
    const int err = errno;
    [[maybe_unused]] auto n = ::write(err_pipe[1], &err, sizeof err);
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  // exec succeeded iff the close-on-exec error pipe reads EOF.
  int child_errno = 0;
  ssize_t got;
  do {
    got = ::read(err_pipe[0], &child_errno, sizeof child_errno);
  } while (got < 0 && errno == EINTR);
  ::close(err_pipe[0]);
  if (got == static_cast<ssize_t>(sizeof child_errno)) {
    ::waitpid(pid_, nullptr, 0);
    reaped_ = true;
    close_fd(to_child_);
    close_fd(from_child_);
    throw Error(ErrorCode::SpawnError, "cannot execute '" + command.front() + "': " + std::strerror(child_errno));
  }
}

ChildProcess::~ChildProcess() { terminate(std::chrono::milliseconds(200)); }

void ChildProcess::write_line(const std::string& line) {
  if (to_child_ < 0) throw Error(ErrorCode::ChildExit, "child stdin is closed");
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::ChildExit, std::string("write to child failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ChildProcess::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (from_child_ < 0) throw Error(ErrorCode::ChildExit, "child stdout is closed");
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw Error(ErrorCode::Timeout, "no reply within " + std::to_string(timeout.count()) + " ms");
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::ProtocolError, std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::ChildExit, std::string("read from child failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      close_fd(from_child_);
      throw Error(ErrorCode::ChildExit, "child closed its stdout");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

bool ChildProcess::running() {
  if (reaped_ || pid_ < 0) return false;
  int status = 0;
  const pid_t r = ::waitpid(pid_, &status, WNOHANG);
  if (r == pid_) {
    reaped_ = true;
    exit_status_ = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return false;
  }
  return true;
}

int ChildProcess::terminate(std::chrono::milliseconds grace) {
  close_fd(to_child_);
  if (pid_ >= 0 && !reaped_) {
    const auto deadline = std::chrono::steady_clock::now() + grace;
    while (running() && std::chrono::steady_clock::now() < deadline) ::usleep(2000);
    if (!reaped_) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
      reaped_ = true;
      exit_status_ = -1;
    }
  }
  close_fd(from_child_);
  return exit_status_;
}

ExternalSource::ExternalSource(ExternalSourceConfig cfg, std::size_t dims, std::size_t context_len)
    : cfg_(std::move(cfg)), dims_(dims), context_len_(context_len) {
  cfg_.validate();
  if (dims_ < 1 || context_len_ < 1) throw Error(ErrorCode::InvalidArgument, "dims and context_len must be >= 1");
  start();
}

ExternalSource::~ExternalSource() {
  try {
    shutdown();
  } catch (...) {
  }
}

void ExternalSource::start() {
  child_ = std::make_unique<ChildProcess>(cfg_.command);
  const json hello = {{"type", "hello"}, {"version", 1}, {"dims", dims_}, {"context_len", context_len_}};
  child_->write_line(hello.dump());
  const std::string line = child_->read_line(std::chrono::milliseconds(cfg_.handshake_timeout_ms));
  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::exception&) {
    throw Error(ErrorCode::ProtocolError, "handshake reply is not JSON: " + line);
  }
  if (!reply.is_object() || reply.value("type", "") != "ready") {
    throw Error(ErrorCode::ProtocolError, "expected ready, got: " + line);
  }
  if (reply.value("version", -1) != 1) throw Error(ErrorCode::HandshakeMismatch, "protocol version mismatch: " + line);
  const auto rd = reply.value("dims", std::int64_t{-1});
  const auto rp = reply.value("context_len", std::int64_t{-1});
  if (rd != static_cast<std::int64_t>(dims_) || rp != static_cast<std::int64_t>(context_len_)) {
    throw Error(ErrorCode::HandshakeMismatch, "child advertises dims=" + std::to_string(rd) + " context_len=" +
                                                  std::to_string(rp) + ", run needs dims=" + std::to_string(dims_) +
                                                  " context_len=" + std::to_string(context_len_));
  }
}

Vector ExternalSource::request(const Matrix& context, std::uint64_t seed) {
  const std::uint64_t id = next_id_++;
  json rows = json::array();
  const Eigen::Index first = context.rows() - static_cast<Eigen::Index>(context_len_);
  for (Eigen::Index t = first; t < context.rows(); ++t) {
    json row = json::array();
    for (Eigen::Index j = 0; j < context.cols(); ++j) row.push_back(context(t, j));
    rows.push_back(std::move(row));
  }
  const json msg = {{"type", "propose"}, {"id", id}, {"context", std::move(rows)}, {"seed", seed}};
  child_->write_line(msg.dump());
  const std::string line = child_->read_line(std::chrono::milliseconds(cfg_.proposal_timeout_ms));
  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::exception&) {
    throw Error(ErrorCode::ProtocolError, "proposal reply is not JSON: " + line);
  }
  if (!reply.is_object() || reply.value("type", "") != "proposal") {
    throw Error(ErrorCode::ProtocolError, "expected proposal, got: " + line);
  }
  if (!reply.contains("id") || !reply["id"].is_number_unsigned() || reply["id"].get<std::uint64_t>() != id) {
    throw Error(ErrorCode::ProtocolError, "proposal id mismatch (expected " + std::to_string(id) + "): " + line);
  }
  const auto& value = reply.contains("value") ? reply["value"] : json();
  if (!value.is_array() || value.size() != dims_) {
    throw Error(ErrorCode::ProtocolError, "proposal value must be an array of " + std::to_string(dims_) + " reals");
  }
  Vector out(static_cast<Eigen::Index>(dims_));
  for (std::size_t j = 0; j < dims_; ++j) {
    if (!value[j].is_number()) throw Error(ErrorCode::ProtocolError, "proposal value holds a non-number");
    const double v = value[j].get<double>();
    if (!std::isfinite(v)) throw Error(ErrorCode::ProtocolError, "proposal value is not finite");
    out(static_cast<Eigen::Index>(j)) = v;
  }
  return out;
}

Vector ExternalSource::propose(const Matrix& context, RandomStream& rng) {
  check_context(context, dims_, context_len_);
  const std::uint64_t seed = rng.next_u64();
  if (!child_) throw Error(ErrorCode::ChildExit, "external source was shut down");
  try {
    return request(context, seed);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ChildExit || restarts_ >= 1) throw;
    ++restarts_;
    child_->terminate(std::chrono::milliseconds(100));
    start();
    return request(context, seed);
  }
}

int ExternalSource::shutdown() {
  if (!child_) return -1;
  try {
    child_->write_line(json{{"type", "shutdown"}}.dump());
  } catch (const Error&) {
  }
  const int status = child_->terminate(std::chrono::milliseconds(2000));
  child_.reset();
  return status;
}

nlohmann::json ExternalSource::describe() const {
  return {{"kind", "external"},
          {"command", cfg_.command},
          {"handshake_timeout_ms", cfg_.handshake_timeout_ms},
          {"proposal_timeout_ms", cfg_.proposal_timeout_ms},
          {"restarts", restarts_}};
}

std::unique_ptr<ExternalSource> spawn_external(const ExternalSourceConfig& cfg, std::size_t dims,
                                               std::size_t context_len) {
  return std::make_unique<ExternalSource>(cfg, dims, context_len);
}

}  // namespace tsmcmc
