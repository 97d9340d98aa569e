// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/golden.hpp>
#include <insitu/server.hpp>

#include <json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

namespace insitu {

namespace {

using nlohmann::json;

constexpr std::size_t kMaxLine = 1 << 20;

/// Unbounded FIFO; pop() returns nullopt once closed and drained.
template <typename T> class BlockingQueue {
public:
  void push(T v) {
    {
      std::lock_guard lock(mu_);
      q_.push_back(std::move(v));
    }
    cv_.notify_one();
  }
  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return closed_ || !q_.empty(); });
    if (q_.empty())
      return std::nullopt;
    T v = std::move(q_.front());
    q_.pop_front();
    return v;
  }

private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> q_;
  bool closed_ = false;
};

MechanismId mechanism_from_json(const json &j) {
  if (j.is_string())
    return parse_mechanism(j.get<std::string>());
  if (j.is_number_integer()) {
    const auto i = j.get<int>();
    if (i < 0 || i >= static_cast<int>(kAllMechanisms.size()))
      throw Error("mechanism index out of range");
    return kAllMechanisms[static_cast<std::size_t>(i)];
  }
  throw Error("mechanism must be a name or an index");
}

std::string sys_error(const std::string &what) {
  return what + ": " + std::strerror(errno);
}

} // namespace

std::string error_frame(const std::string &msg) {
  return nlohmann::ordered_json{{"type", "error"}, {"msg", msg}}.dump();
}

ProtocolSession::ProtocolSession(ServerOptions options) : options_(std::move(options)) {}

std::int64_t ProtocolSession::rebase(std::int64_t client_t) {
  std::int64_t t = client_t + offset_;
  if (have_t_ && t < last_t_) {
    offset_ += last_t_ - t;
    t = last_t_;
  }
  have_t_ = true;
  last_t_ = t;
  return t;
}

std::string ProtocolSession::state_frame() const {
  const int label = mechanism_ ? label_code(mechanism_->current_label()) : kUnlabelled;
  const Led led = mechanism_ ? mechanism_->led() : Led::Off;
  const bool rec = mechanism_ && recording_ && mechanism_->state().recording;
  return nlohmann::ordered_json{{"type", "state"},
              {"label", label},
              {"led", std::string(led_name(led))},
              {"recording", rec}}
    .dump();
}

void ProtocolSession::record(const Emission &e) {
  if (!e)
    return;
  summary_.events.push_back(*e);
  session_events_.push_back(*e);
}

void ProtocolSession::start(MechanismId id, std::int64_t t) {
  mechanism_.emplace(id, options_.mechanism_config);
  recording_ = true;
  start_t_ = t;
  frames_.clear();
  session_events_.clear();
  record(mechanism_->step({t, InputKind::Start, 0}));
}

void ProtocolSession::stop(std::int64_t t) {
  record(mechanism_->flush(t));
  record(mechanism_->step({t, InputKind::Stop, 0}));
  recording_ = false;
  ++sessions_;

  std::vector<SensorFrame> frames = frames_;
  if (frames.empty()) {
    std::mt19937_64 rng(mix_seed(options_.seed, static_cast<std::uint64_t>(sessions_)));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double period = 1000.0 / options_.rate_hz;
    std::size_t ev = 0;
    ActivityLabel act = ActivityLabel::Walking;
    for (std::int64_t k = 0;; ++k) {
      const auto ft = start_t_ + std::llround(static_cast<double>(k) * period);
      if (ft > t)
        break;
      while (ev < session_events_.size() && session_events_[ev].t_ms <= ft)
        act = session_events_[ev++].label;
      const auto &g = options_.gait[act];
      auto ch = gait_channels(g, options_.gait.heading, static_cast<double>(ft - start_t_) / 1000.0);
      for (std::size_t c = 0; c < kNumChannels; ++c)
        ch[c] += g.noise_sigma[c] * normal(rng);
      frames.push_back(quantize(SensorFrame::from_channels(ft, ch)));
    }
  }

  StreamBundle bundle;
  bundle.meta.user_id = "live";
  bundle.meta.mechanism = mechanism_->id();
  bundle.meta.sample_rate_hz = options_.rate_hz;
  bundle.samples = fuse(frames, session_events_);
  bundle.events = session_events_;

  auto path = options_.output;
  if (std::filesystem::is_directory(path)) {
    char name[32];
    std::snprintf(name, sizeof name, "session_%03d.csv", sessions_);
    path /= name;
  } else if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  emit_csv(bundle, out);
  if (!out)
    throw Error("failed to write " + path.string());
  summary_.written.push_back(path);
}

std::vector<std::string> ProtocolSession::handle_line(const std::string &line) {
  ++summary_.messages;
  auto fail = [this](const std::string &msg) {
    summary_.errors.push_back(msg);
    return std::vector<std::string>{error_frame(msg)};
  };

  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception &) {
    return fail("malformed JSON");
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    return fail("message needs a string \"type\" field");

  try {
    const auto type = j["type"].get<std::string>();
    if (type == "control") {
      const auto action = j.at("action").get<std::string>();
      const std::int64_t t =
        j.contains("t_ms") ? rebase(j["t_ms"].get<std::int64_t>()) : last_t_;
      if (action == "start") {
        if (recording_)
          return fail("already recording; send stop first");
        start(mechanism_from_json(j.at("mechanism")), t);
      } else if (action == "stop") {
        if (!recording_)
          return fail("not recording");
        stop(t);
      } else {
        return fail("unknown control action '" + action + "'");
      }
      return {state_frame()};
    }
    if (type == "input") {
      if (!recording_)
        return fail("no active recording; send a start control first");
      auto e = input_from_json(j);
      e.t_ms = rebase(e.t_ms);
      record(mechanism_->step(e));
      return {state_frame()};
    }
    if (type == "sensor") {
      const auto &v = j.at("v");
      if (!v.is_array() || v.size() != kNumChannels)
        return fail("sensor frame needs 9 values");
      std::array<double, kNumChannels> ch{};
      for (std::size_t c = 0; c < kNumChannels; ++c) {
        if (!v[c].is_number())
          return fail("sensor values must be numbers");
        ch[c] = v[c].get<double>();
      }
      const auto t = rebase(j.at("t_ms").get<std::int64_t>());
      if (recording_ && (frames_.empty() || t > frames_.back().t_ms))
        frames_.push_back(quantize(SensorFrame::from_channels(t, ch)));
      return {};
    }
    return fail("unknown message type '" + type + "'");
  } catch (const json::exception &e) {
    return fail(std::string("bad message: ") + e.what());
  } catch (const Error &e) {
    return fail(e.what());
  }
}

void ProtocolSession::finish() {
  if (recording_)
    stop(last_t_);
}

Server::Server(ServerOptions options) : options_(std::move(options)) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0)
    throw Error(sys_error("socket"));
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(options_.port));
  if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw Error("invalid listen address '" + options_.host + "'");
  }
  if (::bind(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) < 0 ||
      ::listen(fd_, 1) < 0) {
    const auto msg = sys_error("cannot listen on " + options_.host + ":" +
                               std::to_string(options_.port));
    ::close(fd_);
    throw Error(msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr *>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Server::~Server() {
  if (fd_ >= 0)
    ::close(fd_);
}

SessionSummary Server::serve_one() {
  const int client = ::accept(fd_, nullptr, nullptr);
  if (client < 0)
    throw Error(sys_error("accept"));

  BlockingQueue<std::string> inbox;
  BlockingQueue<std::string> outbox;
  ProtocolSession session(options_);

  std::thread reader([&] {
    std::string buf;
    char chunk[4096];
    for (;;) {
      const auto n = ::recv(client, chunk, sizeof chunk, 0);
      if (n <= 0)
        break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t pos;
      while ((pos = buf.find('\n')) != std::string::npos) {
        std::string line = buf.substr(0, pos);
        buf.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r')
          line.pop_back();
        if (!line.empty())
          inbox.push(std::move(line));
      }
      if (buf.size() > kMaxLine) {
        outbox.push(error_frame("line too long"));
        buf.clear();
      }
    }
    if (!buf.empty())
      inbox.push(std::move(buf));
    inbox.close();
  });

  std::thread writer([&] {
    while (auto frame = outbox.pop()) {
      frame->push_back('\n');
      std::size_t sent = 0;
      while (sent < frame->size()) {
        const auto n = ::send(client, frame->data() + sent, frame->size() - sent, MSG_NOSIGNAL);
        if (n <= 0)
          break;
        sent += static_cast<std::size_t>(n);
      }
    }
  });

  std::string fatal;
  try {
    while (auto line = inbox.pop())
      for (auto &f : session.handle_line(*line))
        outbox.push(std::move(f));
    session.finish();
  } catch (const std::exception &e) {
    fatal = e.what();
  }
  outbox.close();
  writer.join();
  ::shutdown(client, SHUT_RDWR);
  reader.join();
  ::close(client);
  if (!fatal.empty())
    throw Error("session aborted: " + fatal);
  return session.summary();
}

} // namespace insitu
