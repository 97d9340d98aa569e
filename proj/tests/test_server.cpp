// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/golden.hpp>
#include <insitu/server.hpp>

#include <gtest/gtest.h>

#include <json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <future>
#include <thread>

using namespace insitu;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string &name) {
  auto dir = fs::temp_directory_path() / ("insitu_server_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Sends every line, half-closes, then reads frames until the server hangs up.
std::vector<json> talk(int port, const std::vector<std::string> &lines) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  if (::connect(fd, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0) {
    ::close(fd);
    throw std::runtime_error("connect failed");
  }
  std::string payload;
  for (const auto &l : lines)
    payload += l + "\n";
  std::size_t sent = 0;
  while (sent < payload.size()) {
    const auto n = ::send(fd, payload.data() + sent, payload.size() - sent, MSG_NOSIGNAL);
    if (n <= 0)
      break;
    sent += static_cast<std::size_t>(n);
  }
  ::shutdown(fd, SHUT_WR);

  std::string buf;
  char chunk[4096];
  for (ssize_t n; (n = ::recv(fd, chunk, sizeof chunk, 0)) > 0;)
    buf.append(chunk, static_cast<std::size_t>(n));
  ::close(fd);

  std::vector<json> frames;
  std::size_t pos;
  while ((pos = buf.find('\n')) != std::string::npos) {
    frames.push_back(json::parse(buf.substr(0, pos)));
    buf.erase(0, pos + 1);
  }
  return frames;
}

struct Served {
  SessionSummary summary;
  std::vector<json> frames;
};

Served serve(ServerOptions opt, const std::vector<std::string> &lines) {
  Server server(std::move(opt));
  auto done = std::async(std::launch::async, [&] { return server.serve_one(); });
  auto frames = talk(server.port(), lines);
  return {done.get(), std::move(frames)};
}

std::string input_line(std::int64_t t, const std::string &kind, const json &value) {
  return json{{"type", "input"}, {"t_ms", t}, {"kind", kind}, {"value", value}}.dump();
}

std::string control(const std::string &action, std::int64_t t, const json &mechanism = "app") {
  return json{{"type", "control"}, {"action", action}, {"mechanism", mechanism}, {"t_ms", t}}
    .dump();
}

} // namespace

TEST(Protocol, TapWalkingLabelsEverythingAfterIt) {
  const auto dir = scratch("tap");
  ServerOptions opt;
  opt.output = dir / "live.csv";
  const auto served = serve(opt, {control("start", 0), input_line(1000, "tap", "walking"),
                                  control("stop", 3000)});
  ASSERT_EQ(served.summary.written.size(), 1u);
  ASSERT_EQ(served.frames.size(), 3u);
  EXPECT_EQ(served.frames[1].at("label"), 1);
  EXPECT_EQ(served.frames[1].at("recording"), true);
  EXPECT_EQ(served.frames[2].at("recording"), false);

  std::ifstream in(served.summary.written[0]);
  const auto bundle = parse_csv(in);
  ASSERT_GT(bundle.samples.size(), 100u);
  for (const auto &s : bundle.samples) {
    if (s.frame.t_ms >= 1000)
      EXPECT_EQ(label_code(s.label), 1) << s.frame.t_ms;
    else
      EXPECT_FALSE(s.label.has_value()) << s.frame.t_ms;
  }
  fs::remove_all(dir);
}

TEST(Protocol, ForceRampEchoesGreenYellowRed) {
  ProtocolSession session(ServerOptions{.output = scratch("ramp") / "ramp.csv"});
  auto frames = session.handle_line(control("start", 0, "touch"));
  std::vector<std::string> leds;
  for (int k = 0; k <= 9; ++k) {
    // dwell on each force long enough for the hold to elapse
    for (std::int64_t dt : {0, 250}) {
      const auto out = session.handle_line(input_line(k * 500 + dt, "force", k * 100));
      ASSERT_EQ(out.size(), 1u);
      const auto led = json::parse(out[0]).at("led").get<std::string>();
      if (leds.empty() || leds.back() != led)
        leds.push_back(led);
    }
  }
  EXPECT_EQ(leds, (std::vector<std::string>{"off", "green", "yellow", "red"}));
  session.finish();
  EXPECT_EQ(session.summary().events.back().label, ActivityLabel::Upstairs);
}

TEST(Protocol, MalformedLinesGetAnErrorFrameAndTheSessionGoesOn) {
  const auto dir = scratch("malformed");
  ServerOptions opt;
  opt.output = dir / "s.csv";
  const auto served =
    serve(opt, {"{not json", control("start", 0), R"({"type":"sensor","t_ms":5,"v":[1,2]})",
                R"({"type":"banana"})", input_line(10, "tap", 2), control("stop", 500)});
  ASSERT_EQ(served.frames.size(), 6u);
  EXPECT_EQ(served.frames[0].at("type"), "error");
  EXPECT_EQ(served.frames[1].at("type"), "state");
  EXPECT_EQ(served.frames[2].at("type"), "error");
  EXPECT_EQ(served.frames[3].at("type"), "error");
  EXPECT_EQ(served.frames[4].at("label"), 2);
  EXPECT_EQ(served.summary.errors.size(), 3u);
  EXPECT_EQ(served.summary.written.size(), 1u);
  fs::remove_all(dir);
}

TEST(Protocol, StateFrameKeyOrder) {
  ProtocolSession session(ServerOptions{.output = scratch("order") / "o.csv"});
  const auto out = session.handle_line(control("start", 0, 2));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], R"({"type":"state","label":-1,"led":"off","recording":true})");
  EXPECT_EQ(error_frame("x"), R"({"type":"error","msg":"x"})");
  EXPECT_EQ(session.handle_line(control("start", 1)).size(), 1u);
  EXPECT_EQ(session.summary().errors.size(), 1u);
}

TEST(Protocol, BackwardsClockIsRebased) {
  ProtocolSession session(ServerOptions{.output = scratch("rebase") / "r.csv"});
  session.handle_line(control("start", 1000, "three_buttons"));
  session.handle_line(input_line(1500, "button_down", 0));
  // the client clock restarts; later deltas survive
  session.handle_line(input_line(10, "button_down", 2));
  session.handle_line(input_line(110, "button_down", 1));
  const auto &ev = session.summary().events;
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_EQ(ev[0].t_ms, 1500);
  EXPECT_EQ(ev[1].t_ms, 1500);
  EXPECT_EQ(ev[2].t_ms, 1600);
}

TEST(Protocol, ForwardedSensorFramesAreStored) {
  const auto dir = scratch("sensor");
  ProtocolSession session(ServerOptions{.output = dir / "f.csv"});
  session.handle_line(control("start", 0, "app"));
  session.handle_line(input_line(0, "tap", 0));
  for (int k = 0; k < 5; ++k)
    EXPECT_TRUE(session
                  .handle_line(json{{"type", "sensor"},
                                    {"t_ms", 20 * k},
                                    {"v", {k, 0, 9.81, 0, 0, 0, 20, 0, -40}}}
                                 .dump())
                  .empty());
  session.handle_line(control("stop", 100));
  std::ifstream in(session.summary().written.at(0));
  const auto bundle = parse_csv(in);
  ASSERT_EQ(bundle.samples.size(), 5u);
  EXPECT_EQ(bundle.samples[3].frame.accel[0], 3.0);
  EXPECT_EQ(label_code(bundle.samples[4].label), 0);
  fs::remove_all(dir);
}

TEST(Server, GoldenVectorsOverTheWire) {
  const auto dir = scratch("golden");
  int files = 0;
  for (const auto &entry : fs::directory_iterator(INSITU_GOLDEN_DIR)) {
    const auto g = load_golden(entry.path());
    const auto inputs = golden_inputs(g);
    ASSERT_FALSE(inputs.empty());

    std::int64_t stop_t = inputs.back().t_ms;
    for (const auto &s : g.steps)
      if (auto *f = std::get_if<GoldenFlush>(&s))
        stop_t = f->t_ms;

    std::vector<std::string> lines{control("start", inputs.front().t_ms,
                                           std::string(mechanism_name(g.mechanism)))};
    for (const auto &in : inputs) {
      auto j = input_to_json(in);
      j["type"] = "input";
      lines.push_back(j.dump());
    }
    lines.push_back(control("stop", stop_t));

    ServerOptions opt;
    opt.output = dir / (entry.path().stem().string() + ".csv");
    const auto served = serve(opt, lines);
    EXPECT_TRUE(served.summary.errors.empty()) << entry.path();
    EXPECT_EQ(served.summary.events, golden_expected(g)) << entry.path();
    ++files;
  }
  EXPECT_GE(files, 6);
  fs::remove_all(dir);
}

TEST(Server, BusyPortFailsAtStartup) {
  Server first(ServerOptions{});
  ServerOptions opt;
  opt.port = first.port();
  EXPECT_THROW(Server{opt}, Error);
  opt.port = 0;
  opt.host = "not an address";
  EXPECT_THROW(Server{opt}, Error);
}
