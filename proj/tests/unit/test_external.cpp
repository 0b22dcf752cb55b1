#include <doctest.h>

#include <chrono>
#include <filesystem>

#include "oracles.hpp"
#include "tsmcmc/error.hpp"
#include "tsmcmc/external.hpp"

#ifndef FAKE_ADAPTER
#error "FAKE_ADAPTER must point at the test adapter executable"
#endif

using namespace tsmcmc;

namespace {
ExternalSourceConfig adapter(std::vector<std::string> extra = {}, int timeout_ms = 2000) {
  ExternalSourceConfig cfg;
  cfg.command = {FAKE_ADAPTER};
  cfg.command.insert(cfg.command.end(), extra.begin(), extra.end());
  cfg.handshake_timeout_ms = timeout_ms;
  cfg.proposal_timeout_ms = timeout_ms;
  return cfg;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

Matrix context() {
  Matrix c(2, 3);
  c << 1, 2, 3, 4, 5, 6;
  return c;
}
}  // namespace

TEST_CASE("handshake, proposals and clean shutdown") {
  auto src = spawn_external(adapter(), 3, 2);
  RandomStream rng(1);
  const Vector q = src->propose(context(), rng);
  REQUIRE(q.size() == 3);
  CHECK(std::abs(q(0) - 4) <= 1e-3);
  CHECK(std::abs(q(2) - 6) <= 1e-3);
  CHECK(src->shutdown() == 0);
  CHECK(code_of([&] { src->propose(context(), rng); }) == ErrorCode::ChildExit);
}

TEST_CASE("seeded proposals are identical across sessions") {
  std::vector<Vector> first, second;
  for (auto* out : {&first, &second}) {
    auto src = spawn_external(adapter(), 3, 2);
    RandomStream rng(99);
    for (int i = 0; i < 100; ++i) out->push_back(src->propose(context(), rng));
    CHECK(src->shutdown() == 0);
  }
  for (int i = 0; i < 100; ++i) REQUIRE(first[i] == second[i]);
}

TEST_CASE("handshake mismatches") {
  CHECK(code_of([] { spawn_external(adapter({"--dims", "2"}), 3, 2); }) == ErrorCode::HandshakeMismatch);
  CHECK(code_of([] { spawn_external(adapter({"--version", "2"}), 3, 2); }) == ErrorCode::HandshakeMismatch);
  CHECK(code_of([] { spawn_external(adapter({"--silent"}, 200), 3, 2); }) == ErrorCode::Timeout);
}

TEST_CASE("spawn failure is reported") {
  ExternalSourceConfig cfg;
  cfg.command = {"/nonexistent/adapter-binary"};
  CHECK(code_of([&] { spawn_external(cfg, 3, 2); }) == ErrorCode::SpawnError);
  cfg.command.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("proposal timeouts and protocol violations") {
  RandomStream rng(1);
  {
    auto src = spawn_external(adapter({"--delay-ms", "1000"}, 150), 3, 2);
    const auto t0 = std::chrono::steady_clock::now();
    CHECK(code_of([&] { src->propose(context(), rng); }) == ErrorCode::Timeout);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::milliseconds(900));
  }
  {
    auto src = spawn_external(adapter({"--malformed"}), 3, 2);
    CHECK(code_of([&] { src->propose(context(), rng); }) == ErrorCode::ProtocolError);
  }
  {
    auto src = spawn_external(adapter({"--wrong-id"}), 3, 2);
    CHECK(code_of([&] { src->propose(context(), rng); }) == ErrorCode::ProtocolError);
  }
  {
    auto src = spawn_external(adapter(), 3, 2);
    CHECK(code_of([&] { src->propose(Matrix::Zero(1, 3), rng); }) == ErrorCode::ContextTooShort);
  }
}

TEST_CASE("a crashed child is restarted once") {
  const auto dir = oracle::temp_dir("restart");
  const auto marker = (dir / "crashed").string();
  RandomStream rng(4);
  auto src = spawn_external(adapter({"--exit-after", "3", "--crash-marker", marker}), 3, 2);
  for (int i = 0; i < 10; ++i) src->propose(context(), rng);
  CHECK(src->restarts() == 1);
  CHECK(src->shutdown() == 0);

  auto always = spawn_external(adapter({"--exit-after", "0"}), 3, 2);
  CHECK(code_of([&] { always->propose(context(), rng); }) == ErrorCode::ChildExit);
  CHECK(always->restarts() == 1);
}
