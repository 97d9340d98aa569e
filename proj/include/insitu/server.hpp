// SPDX-License-Identifier: Apache-2.0
/**
 * @file   server.hpp
 * @brief  Live labelling session over line-delimited JSON on TCP.
 *
 * Client to server:
 *   {"type":"control","action":"start"|"stop","mechanism":<name or index>}
 *   {"type":"input","t_ms":<int>,"kind":<input kind>,"value":<int or label name>}
 *   {"type":"sensor","t_ms":<int>,"v":[ax,ay,az,gx,gy,gz,mx,my,mz]}
 * Server to client:
 *   {"type":"state","label":<int|-1>,"led":"green"|"yellow"|"red"|"off","recording":<bool>}
 *   {"type":"error","msg":<string>}
 *
 * A state frame follows every accepted control or input message; sensor
 * frames are absorbed silently. Control messages may carry an optional t_ms.
 * Client timestamps are rebased onto one monotone timeline: a backwards jump
 * is absorbed into an offset so that later deltas are preserved.
 * On stop the fused stream is written as the standard CSV. When the client
 * sent no sensor frames, frames are synthesised from the gait model of the
 * label in force at each instant.
 */
#pragma once

#include <insitu/mechanisms.hpp>
#include <insitu/simulator.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace insitu {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0; // 0 picks a free port
  std::filesystem::path output = "session.csv";
  MechanismConfig mechanism_config{};
  double rate_hz = 50.0;
  std::uint64_t seed = 1;
  GaitParams gait = GaitParams::defaults();
};

struct SessionSummary {
  std::vector<LabelEvent> events; // every emission, in order
  std::vector<std::string> errors;
  std::vector<std::filesystem::path> written;
  std::size_t messages = 0;
};

/// Protocol state machine without any I/O; one instance per connection.
class ProtocolSession {
public:
  explicit ProtocolSession(ServerOptions options);

  /// Handles one line and returns the frames to send back (zero or one).
  std::vector<std::string> handle_line(const std::string &line);
  /// End of input: an active recording is stopped and written.
  void finish();

  const SessionSummary &summary() const { return summary_; }
  bool recording() const { return recording_; }

private:
  std::int64_t rebase(std::int64_t client_t);
  std::string state_frame() const;
  void start(MechanismId id, std::int64_t t);
  void stop(std::int64_t t);
  void record(const Emission &e);

  ServerOptions options_;
  SessionSummary summary_;
  std::optional<Mechanism> mechanism_;
  bool recording_ = false;
  std::int64_t offset_ = 0;
  std::int64_t last_t_ = 0;
  bool have_t_ = false;
  std::int64_t start_t_ = 0;
  std::vector<SensorFrame> frames_;
  std::vector<LabelEvent> session_events_;
  int sessions_ = 0;
};

std::string error_frame(const std::string &msg);

/// Listening socket; construction binds, so a busy port fails immediately.
class Server {
public:
  explicit Server(ServerOptions options);
  ~Server();
  Server(const Server &) = delete;
  Server &operator=(const Server &) = delete;

  int port() const { return port_; }
  /// Accepts one connection and serves it until the client disconnects.
  /// Reading, processing and writing run on three threads joined by queues.
  SessionSummary serve_one();

private:
  ServerOptions options_;
  int fd_ = -1;
  int port_ = 0;
};

} // namespace insitu
