/* Copyright 2026 The nuclass Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "process.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>

#include <fmt/format.h>

#include "error.hpp"

extern char** environ;

namespace nuclass {

std::string command_line(const std::vector<std::string>& argv) {
  std::string out;
  for (const auto& a : argv) {
    if (!out.empty()) out += ' ';
    const bool plain = !a.empty() && a.find_first_not_of(
                                         "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_./=:,+%") ==
                                         std::string::npos;
    if (plain) {
      out += a;
    } else {
      out += '\'';
      for (char c : a) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
      out += '\'';
    }
  }
  return out;
}

namespace {

// Closes a descriptor on scope exit.
struct Fd {
  int fd = -1;
  ~Fd() {
    if (fd >= 0) ::close(fd);
  }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

struct SpawnActions {
  posix_spawn_file_actions_t a;
  SpawnActions() { posix_spawn_file_actions_init(&a); }
  ~SpawnActions() { posix_spawn_file_actions_destroy(&a); }
};

}  // namespace

void run_process(const std::vector<std::string>& argv,
                 const std::function<void(std::span<const unsigned char>)>& on_stdout, std::string* stderr_text) {
  if (argv.empty()) throw EnvironmentError("empty command line");
  const std::string cmd = command_line(argv);

  int out_pipe[2];
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw EnvironmentError(fmt::format("pipe failed: {}", std::strerror(errno)));
  Fd out_read{out_pipe[0]}, out_write{out_pipe[1]};
  // stderr goes to an unlinked temp file so a chatty child cannot block on a full pipe.
  char err_name[] = "/tmp/nuclass-stderr-XXXXXX";
  Fd err_fd{::mkostemp(err_name, O_CLOEXEC)};
  if (err_fd.fd < 0) throw EnvironmentError(fmt::format("mkstemp failed: {}", std::strerror(errno)));
  ::unlink(err_name);

  SpawnActions actions;
  posix_spawn_file_actions_addopen(&actions.a, 0, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_adddup2(&actions.a, out_write.fd, 1);
  posix_spawn_file_actions_adddup2(&actions.a, err_fd.fd, 2);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = 0;
  const int rc = ::posix_spawnp(&pid, args[0], &actions.a, nullptr, args.data(), environ);
  if (rc != 0)
    throw EnvironmentError(fmt::format("cannot run '{}' ({}); command: {}", argv[0], std::strerror(rc), cmd));
  out_write.reset();

  std::array<unsigned char, 1 << 16> buf;
  for (;;) {
    const ssize_t n = ::read(out_read.fd, buf.data(), buf.size());
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    if (on_stdout) {
      try {
        on_stdout(std::span<const unsigned char>(buf.data(), static_cast<std::size_t>(n)));
      } catch (...) {
        // Closing the pipe makes the child exit on its next write.
        out_read.reset();
        int status = 0;
        ::waitpid(pid, &status, 0);
        throw;
      }
    }
  }
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }

  std::string err;
  ::lseek(err_fd.fd, 0, SEEK_SET);
  for (;;) {
    const ssize_t n = ::read(err_fd.fd, buf.data(), buf.size());
    if (n <= 0) break;
    err.append(reinterpret_cast<const char*>(buf.data()), static_cast<std::size_t>(n));
  }
  if (stderr_text) *stderr_text = err;
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    // posix_spawnp may report a missing program only through exit status 127.
    if (WIFEXITED(status) && WEXITSTATUS(status) == 127)
      throw EnvironmentError(fmt::format("cannot run '{}'; command: {}", argv[0], cmd));
    while (!err.empty() && (err.back() == '\n' || err.back() == '\r')) err.pop_back();
    if (err.size() > 2000) err = "..." + err.substr(err.size() - 2000);
    throw IoError(fmt::format("command failed ({}): {}\n{}",
                              WIFEXITED(status) ? fmt::format("exit {}", WEXITSTATUS(status)) : "killed", cmd, err));
  }
}

}  // namespace nuclass
