#include "restyle/exec.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

extern char** environ;

namespace restyle {

namespace fs = std::filesystem;

namespace {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset();
    fd_ = std::exchange(o.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read;
  Fd write;
};

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw SpawnFailure(std::string("pipe: ") + std::strerror(errno));
  return {Fd(fds[0]), Fd(fds[1])};
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "restyle-run-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw SpawnFailure(std::string("mkdtemp: ") + std::strerror(errno));
    path_ = tmpl;
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

bool is_executable(const fs::path& p) {
  std::error_code ec;
  return fs::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
}

// Writes to a pipe whose reader exited must fail with EPIPE instead of
// killing the whole process.
void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::vector<std::string> child_environment() {
  std::vector<std::string> env;
  for (char** e = environ; e && *e; ++e) {
    std::string_view kv(*e);
    if (kv.starts_with("PYTHONHASHSEED=") || kv.starts_with("PYTHONDONTWRITEBYTECODE=") ||
        kv.starts_with("PYTHONIOENCODING=")) {
      continue;
    }
    env.emplace_back(kv);
  }
  env.emplace_back("PYTHONHASHSEED=0");
  env.emplace_back("PYTHONDONTWRITEBYTECODE=1");
  env.emplace_back("PYTHONIOENCODING=utf-8");
  return env;
}

}  // namespace

std::string resolve_interpreter(const ExecConfig& config) {
  std::string name = config.interpreter;
  if (name.empty()) {
    const char* env = std::getenv("RESTYLE_PYTHON");
    name = env && *env ? env : "python3";
  }
  if (name.find('/') != std::string::npos) {
    if (!is_executable(name)) throw InterpreterNotFound("interpreter not found: " + name);
    return name;
  }
  const char* path = std::getenv("PATH");
  std::stringstream dirs(path ? path : "/usr/local/bin:/usr/bin:/bin");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    fs::path candidate = fs::path(dir.empty() ? "." : dir) / name;
    if (is_executable(candidate)) return candidate.string();
  }
  throw InterpreterNotFound("interpreter not found on PATH: " + name);
}

Outcome run_program(std::string_view source, const TestCase& test, const ExecConfig& config) {
  ignore_sigpipe();
  std::string interpreter = resolve_interpreter(config);
  TempDir dir;
  fs::path script = dir.path() / "main.py";
  {
    std::ofstream out(script, std::ios::binary);
    out.write(source.data(), static_cast<std::streamsize>(source.size()));
    if (!out) throw SpawnFailure("cannot write " + script.string());
  }

  // Everything the child touches is prepared before fork.
  std::vector<std::string> args = {interpreter, "main.py"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  std::vector<std::string> env = child_environment();
  std::vector<char*> envp;
  for (auto& e : env) envp.push_back(e.data());
  envp.push_back(nullptr);
  std::string workdir = dir.path().string();
  rlim_t mem = static_cast<rlim_t>(config.memory_limit_mb) << 20;

  Pipe in = make_pipe();
  Pipe out = make_pipe();
  Pipe err = make_pipe();
  Pipe status = make_pipe();  // carries errno if exec fails

  auto start = std::chrono::steady_clock::now();
  pid_t pid = ::fork();
  if (pid < 0) throw SpawnFailure(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::signal(SIGPIPE, SIG_DFL);
    if (::chdir(workdir.c_str()) != 0 || ::dup2(in.read.get(), 0) < 0 ||
        ::dup2(out.write.get(), 1) < 0 || ::dup2(err.write.get(), 2) < 0) {
      int e = errno;
      [[maybe_unused]] auto n = ::write(status.write.get(), &e, sizeof e);
      ::_exit(127);
    }
    if (mem > 0) {
      rlimit lim{mem, mem};
      ::setrlimit(RLIMIT_AS, &lim);
    }
    ::execve(argv[0], argv.data(), envp.data());
    int e = errno;
    [[maybe_unused]] auto n = ::write(status.write.get(), &e, sizeof e);
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  in.read.reset();
  out.write.reset();
  err.write.reset();
  status.write.reset();

  int exec_errno = 0;
  if (::read(status.read.get(), &exec_errno, sizeof exec_errno) == sizeof exec_errno) {
    ::waitpid(pid, nullptr, 0);
    throw SpawnFailure("exec " + interpreter + ": " + std::strerror(exec_errno));
  }

  Outcome result;
  std::size_t written = 0;
  if (test.input.empty()) in.write.reset();
  ::fcntl(in.write.get(), F_SETFL, O_NONBLOCK);
  auto deadline = start + std::chrono::milliseconds(config.timeout_ms);
  char buf[65536];
  bool killed = false;
  while (out.read.get() >= 0 || err.read.get() >= 0) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      break;
    }
    pollfd fds[3];
    int n = 0;
    int idx_out = -1, idx_err = -1, idx_in = -1;
    if (out.read.get() >= 0) {
      idx_out = n;
      fds[n++] = {out.read.get(), POLLIN, 0};
    }
    if (err.read.get() >= 0) {
      idx_err = n;
      fds[n++] = {err.read.get(), POLLIN, 0};
    }
    if (in.write.get() >= 0) {
      idx_in = n;
      fds[n++] = {in.write.get(), POLLOUT, 0};
    }
    auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1;
    int rc = ::poll(fds, n, static_cast<int>(wait));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    auto drain = [&](int idx, Fd& fd, std::string& sink) {
      if (idx < 0 || !(fds[idx].revents & (POLLIN | POLLHUP | POLLERR))) return;
      ssize_t got = ::read(fd.get(), buf, sizeof buf);
      if (got <= 0) {
        if (got < 0 && errno == EINTR) return;
        fd.reset();
        return;
      }
      sink.append(buf, static_cast<std::size_t>(got));
    };
    drain(idx_out, out.read, result.output);
    drain(idx_err, err.read, result.errors);
    if (idx_in >= 0 && (fds[idx_in].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t put = ::write(in.write.get(), test.input.data() + written, test.input.size() - written);
      if (put > 0) written += static_cast<std::size_t>(put);
      if (put < 0 && errno != EAGAIN && errno != EINTR) in.write.reset();
      if (written == test.input.size()) in.write.reset();
    }
    if (result.output.size() + result.errors.size() > config.max_output_bytes) {
      ::kill(-pid, SIGKILL);
      killed = true;
      break;
    }
  }
  if (result.timed_out) ::kill(-pid, SIGKILL);
  int wstatus = 0;
  // The child may close its pipes and keep running.
  while (true) {
    pid_t r = ::waitpid(pid, &wstatus, WNOHANG);
    if (r == pid || (r < 0 && errno != EINTR)) break;
    if (std::chrono::steady_clock::now() >= deadline && !result.timed_out) {
      result.timed_out = true;
      ::kill(-pid, SIGKILL);
    }
    ::usleep(1000);
  }
  // Grandchildren left in the group go with it.
  ::kill(-pid, SIGKILL);
  result.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (WIFEXITED(wstatus)) {
    result.exit_status = WEXITSTATUS(wstatus);
  } else if (WIFSIGNALED(wstatus)) {
    result.exit_status = 128 + WTERMSIG(wstatus);
  }
  if (killed && !result.timed_out) result.errors += "\n[restyle] output limit exceeded\n";
  return result;
}

std::string normalize_output(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    std::size_t keep = line.find_last_not_of(" \t\r\f\v");
    out.append(line.substr(0, keep == std::string_view::npos ? 0 : keep + 1));
    out.push_back('\n');
    pos = eol + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string to_string(const Verdict& v) {
  switch (v.kind) {
    case Verdict::Kind::Equivalent: return "equivalent";
    case Verdict::Kind::Diverged: return "diverged(" + std::to_string(v.case_index) + ")";
    case Verdict::Kind::OriginalFailed: return "original-failed(" + std::to_string(v.case_index) + ")";
  }
  return "?";
}

Verdict equivalent(std::string_view original, std::string_view transformed,
                   const std::vector<TestCase>& cases, const ExecConfig& config) {
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Outcome a = run_program(original, cases[i], config);
    if (a.timed_out) return {Verdict::Kind::OriginalFailed, i, "original timed out"};
    if (a.exit_status != 0) {
      return {Verdict::Kind::OriginalFailed, i, "original exited with " + std::to_string(a.exit_status)};
    }
    if (cases[i].expected_output && !outputs_match(a.output, *cases[i].expected_output)) {
      return {Verdict::Kind::OriginalFailed, i, "original output differs from expected"};
    }
    if (transformed == original) continue;
    Outcome b = run_program(transformed, cases[i], config);
    if (b.timed_out) return {Verdict::Kind::Diverged, i, "transformed timed out"};
    if (b.exit_status != a.exit_status) {
      return {Verdict::Kind::Diverged, i, "transformed exited with " + std::to_string(b.exit_status)};
    }
    if (!outputs_match(a.output, b.output)) return {Verdict::Kind::Diverged, i, "output differs"};
  }
  return {};
}

std::vector<TestCase> load_test_cases(const std::string& dir) {
  std::vector<TestCase> cases;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return cases;
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".in") inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  for (const auto& p : inputs) {
    TestCase c{p.stem().string(), slurp(p), std::nullopt};
    fs::path expected = p;
    expected.replace_extension(".out");
    if (fs::is_regular_file(expected, ec)) c.expected_output = slurp(expected);
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace restyle
