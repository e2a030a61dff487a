// Drives the real `asap serve` binary: startup, a short session, shutdown on
// SIGINT, and restart from the event log.

#include <gtest/gtest.h>

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "asap/service/event_log.hpp"
#include "asap/service/http_api.hpp"

extern char** environ;

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

class Child {
 public:
  explicit Child(std::vector<std::string> args) {
    int fds[2];
    if (::pipe(fds) != 0) throw std::runtime_error("pipe failed");
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDERR_FILENO);
    posix_spawn_file_actions_addclose(&actions, fds[0]);
    args.insert(args.begin(), ASAP_CLI_PATH);
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    if (posix_spawn(&pid_, ASAP_CLI_PATH, &actions, nullptr, argv.data(), environ) != 0) {
      throw std::runtime_error("spawn failed");
    }
    posix_spawn_file_actions_destroy(&actions);
    ::close(fds[1]);
    out_ = fds[0];
  }
  ~Child() {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
    ::close(out_);
  }

  // Reads output until `needle` shows up or the timeout passes.
  bool wait_for(const std::string& needle, int timeout_ms = 10000) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (output_.find(needle) == std::string::npos) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                            deadline - std::chrono::steady_clock::now())
                            .count();
      if (left <= 0) return false;
      pollfd p{out_, POLLIN, 0};
      if (::poll(&p, 1, static_cast<int>(left)) <= 0) return false;
      char buf[512];
      const auto got = ::read(out_, buf, sizeof buf);
      if (got <= 0) return output_.find(needle) != std::string::npos;
      output_.append(buf, static_cast<std::size_t>(got));
    }
    return true;
  }

  // Kills the child if it is still running after `limit`.
  int wait_exit(std::chrono::seconds limit = std::chrono::seconds(30)) {
    int status = 0;
    const auto deadline = std::chrono::steady_clock::now() + limit;
    while (::waitpid(pid_, &status, WNOHANG) == 0) {
      if (std::chrono::steady_clock::now() > deadline) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    pid_ = -1;
    char buf[512];
    for (ssize_t got; (got = ::read(out_, buf, sizeof buf)) > 0;) {
      output_.append(buf, static_cast<std::size_t>(got));
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  void signal(int sig) { ::kill(pid_, sig); }
  const std::string& output() const { return output_; }

 private:
  pid_t pid_ = -1;
  int out_ = -1;
  std::string output_;
};

int port_from(const std::string& output) {
  const auto at = output.find("listening on 127.0.0.1:");
  if (at == std::string::npos) return -1;
  return std::stoi(output.substr(at + std::string("listening on 127.0.0.1:").size()));
}

TEST(ServeProcessTest, InterruptFlushesSessionsAndRestartRestoresThem) {
  const fs::path log = fs::temp_directory_path() / "asap_serve_process.jsonl";
  fs::remove(log);
  std::string id;
  double mean_before = 0.0;
  {
    Child server({"serve", "--host", "127.0.0.1", "--port", "0", "--log", log.string()});
    ASSERT_TRUE(server.wait_for("\n")) << server.output();
    const int port = port_from(server.output());
    ASSERT_GT(port, 0) << server.output();

    httplib::Client client("127.0.0.1", port);
    auto res = client.Post("/sessions", R"({"conditions":["a","b","c"],"seed":3})",
                           "application/json");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 201);
    id = json::parse(res->body)["id"];
    for (int k = 0; k < 3; ++k) {
      auto next = client.Get("/sessions/" + id + "/next");
      ASSERT_TRUE(next);
      const auto pair = json::parse(next->body);
      json body = {{"pair_id", pair["pair_id"]}, {"choice", "first"}};
      ASSERT_EQ(client.Post("/sessions/" + id + "/outcomes", body.dump(), "application/json")
                    ->status,
                200);
    }
    mean_before = json::parse(client.Get("/sessions/" + id + "/scale")->body)["conditions"][0]
                      ["mean"];

    server.signal(SIGINT);
    EXPECT_EQ(server.wait_exit(), 0) << server.output();
    EXPECT_NE(server.output().find("stopped"), std::string::npos);
  }

  const auto events = asap::service::EventLog::read(log);
  ASSERT_EQ(events.size(), 7u);
  EXPECT_EQ(events[0]["event"], "create");
  EXPECT_EQ(events[6]["event"], "outcome");

  Child again({"serve", "--host", "127.0.0.1", "--port", "0", "--log", log.string()});
  ASSERT_TRUE(again.wait_for("\n")) << again.output();
  EXPECT_NE(again.output().find("1 restored"), std::string::npos) << again.output();
  httplib::Client client("127.0.0.1", port_from(again.output()));
  auto res = client.Get("/sessions/" + id + "/scale");
  ASSERT_TRUE(res);
  const auto scale = json::parse(res->body);
  EXPECT_EQ(scale["trials"], 3);
  EXPECT_EQ(scale["conditions"][0]["mean"].get<double>(), mean_before);
  again.signal(SIGTERM);
  EXPECT_EQ(again.wait_exit(), 0);
  fs::remove(log);
}

TEST(ServeProcessTest, PortInUseExitsWithFailure) {
  asap::service::SessionManager sessions;
  asap::service::HttpOptions options;
  options.host = "127.0.0.1";
  options.port = 0;
  asap::service::HttpApi holder(sessions, options);
  const int port = holder.bind();

  Child server({"serve", "--host", "127.0.0.1", "--port", std::to_string(port), "--log", ""});
  EXPECT_EQ(server.wait_exit(), 1);
  EXPECT_NE(server.output().find("cannot listen"), std::string::npos) << server.output();
}

TEST(ServeProcessTest, BadStaticDirectoryExitsWithFailure) {
  Child server({"serve", "--port", "0", "--log", "", "--static", "/nonexistent/asap/ui"});
  EXPECT_EQ(server.wait_exit(), 1);
}

TEST(ServeProcessTest, ServesStaticAssets) {
  const fs::path dir = fs::temp_directory_path() / "asap_serve_static";
  fs::create_directories(dir);
  {
    std::ofstream(dir / "index.html") << "<p>ui</p>";
  }
  Child server({"serve", "--host", "127.0.0.1", "--port", "0", "--log", "", "--static",
                dir.string()});
  ASSERT_TRUE(server.wait_for("\n")) << server.output();
  httplib::Client client("127.0.0.1", port_from(server.output()));
  auto res = client.Get("/");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "<p>ui</p>");
  server.signal(SIGINT);
  EXPECT_EQ(server.wait_exit(), 0);
  fs::remove_all(dir);
}

}  // namespace
