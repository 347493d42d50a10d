#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cstring>
#include <mutex>

#include "symdl/error.hpp"
#include "symdl/smt.hpp"

namespace symdl {

namespace {

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { signal(SIGPIPE, SIG_IGN); });
}

bool is_verdict_line(const std::string& line) {
  return line == "sat" || line == "unsat" || line == "unknown";
}

// Last verdict token in the buffer, if any line holds one.
std::string find_verdict(const std::string& buf) {
  std::string verdict;
  size_t start = 0;
  while (start <= buf.size()) {
    size_t end = buf.find('\n', start);
    if (end == std::string::npos) end = buf.size();
    std::string line = buf.substr(start, end - start);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    size_t ltrim = line.find_first_not_of(' ');
    if (ltrim != std::string::npos) line = line.substr(ltrim);
    if (is_verdict_line(line)) verdict = line;
    if (end == buf.size()) break;
    start = end + 1;
  }
  return verdict;
}

std::string collect_errors(const std::string& buf) {
  std::string out;
  size_t pos = 0;
  while ((pos = buf.find("(error", pos)) != std::string::npos) {
    size_t end = buf.find('\n', pos);
    if (end == std::string::npos) end = buf.size();
    if (!out.empty()) out += "; ";
    out += buf.substr(pos, end - pos);
    pos = end;
  }
  return out;
}

// True once the buffer holds one balanced s-expression (ignoring leading
// whitespace or stray lines before the first paren).
bool balanced_sexpr(const std::string& buf) {
  int depth = 0;
  bool started = false;
  for (char c : buf) {
    if (c == '(') {
      ++depth;
      started = true;
    } else if (c == ')') {
      --depth;
      if (started && depth == 0) return true;
    }
  }
  return false;
}

std::optional<u256> parse_model_value(const std::string& tok) {
  if (tok.size() > 2 && tok[0] == '#' && tok[1] == 'x') {
    return parse_hex_const("0x" + tok.substr(2));
  }
  if (tok.size() > 2 && tok[0] == '#' && tok[1] == 'b') {
    u256 v = 0;
    for (size_t i = 2; i < tok.size(); ++i) {
      if (tok[i] != '0' && tok[i] != '1') return std::nullopt;
      v <<= 1;
      v += static_cast<unsigned>(tok[i] - '0');
    }
    return v;
  }
  if (tok.size() > 2 && tok.substr(0, 2) == "bv") {
    u256 v = 0;
    for (size_t i = 2; i < tok.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return std::nullopt;
      v *= 10;
      v += static_cast<unsigned>(tok[i] - '0');
    }
    return v;
  }
  return std::nullopt;
}

// Parses ((v1 <val>) (v2 <val>) ...) into name -> value pairs. Values are
// #x..., #b..., or (_ bvN W).
bool parse_get_value(const std::string& text,
                     std::vector<std::pair<std::string, std::string>>& out) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (c == '(' || c == ')') {
      if (!cur.empty()) {
        tokens.push_back(cur);
        cur.clear();
      }
      tokens.push_back(std::string(1, c));
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) {
        tokens.push_back(cur);
        cur.clear();
      }
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) tokens.push_back(cur);

  size_t i = 0;
  if (i >= tokens.size() || tokens[i] != "(") return false;
  ++i;
  while (i < tokens.size() && tokens[i] == "(") {
    ++i;
    if (i >= tokens.size()) return false;
    std::string name = tokens[i++];
    std::optional<u256> value;
    if (i < tokens.size() && tokens[i] == "(") {
      // (_ bvN W)
      ++i;
      if (i < tokens.size() && tokens[i] == "_") ++i;
      if (i >= tokens.size()) return false;
      value = parse_model_value(tokens[i++]);
      if (i < tokens.size() && tokens[i] != ")") ++i;  // width
      if (i >= tokens.size() || tokens[i] != ")") return false;
      ++i;
    } else {
      if (i >= tokens.size()) return false;
      value = parse_model_value(tokens[i++]);
    }
    if (!value) return false;
    if (i >= tokens.size() || tokens[i] != ")") return false;
    ++i;
    out.emplace_back(name, canonical_hex(*value));
  }
  return i < tokens.size() && tokens[i] == ")";
}

}  // namespace

SolverProcess::SolverProcess(std::string command) : command_(std::move(command)) {
  ignore_sigpipe_once();
}

SolverProcess::~SolverProcess() { kill_child(); }

void SolverProcess::spawn() {
  int to_pipe[2] = {-1, -1};
  int from_pipe[2] = {-1, -1};
  if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0) {
    fail(errc::solver, "cannot create solver pipes: " + std::string(strerror(errno)));
  }
  pid_t pid = fork();
  if (pid < 0) {
    fail(errc::solver, "cannot fork solver process: " + std::string(strerror(errno)));
  }
  if (pid == 0) {
    dup2(to_pipe[0], STDIN_FILENO);
    dup2(from_pipe[1], STDOUT_FILENO);
    close(to_pipe[0]);
    close(to_pipe[1]);
    close(from_pipe[0]);
    close(from_pipe[1]);
    std::string cmd = "exec " + command_;
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_pipe[0]);
  close(from_pipe[1]);
  pid_ = pid;
  to_child_ = to_pipe[1];
  from_child_ = from_pipe[0];
}

void SolverProcess::kill_child() {
  if (pid_ < 0) return;
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = -1;
  from_child_ = -1;
  kill(pid_, SIGKILL);
  int status = 0;
  waitpid(pid_, &status, 0);
  pid_ = -1;
}

bool SolverProcess::write_all(const std::string& data) {
  size_t off = 0;
  while (off < data.size()) {
    ssize_t n = write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<size_t>(n);
  }
  return true;
}

SolverProcess::ReadStatus SolverProcess::read_until(
    std::string& buf, const std::function<bool(const std::string&)>& stop,
    std::chrono::steady_clock::time_point deadline) {
  while (!stop(buf)) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return ReadStatus::timeout;
    int remaining = static_cast<int>(
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
    struct pollfd pfd = {from_child_, POLLIN, 0};
    int rv = poll(&pfd, 1, std::max(remaining, 1));
    if (rv == 0) return ReadStatus::timeout;
    if (rv < 0) {
      if (errno == EINTR) continue;
      return ReadStatus::eof;
    }
    char chunk[4096];
    ssize_t n = read(from_child_, chunk, sizeof(chunk));
    if (n == 0) return ReadStatus::eof;
    if (n < 0) {
      if (errno == EINTR) continue;
      return ReadStatus::eof;
    }
    buf.append(chunk, static_cast<size_t>(n));
  }
  return ReadStatus::ok;
}

SmtResultData SolverProcess::solve(const std::string& text,
                                   const std::vector<std::string>& free_vars,
                                   const std::string& logic, int timeout_ms) {
  if (pid_ < 0) spawn();
  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);

  std::string request = "(reset)\n";
  request += "(set-option :print-success false)\n";
  request += "(set-option :produce-models true)\n";
  request += "(set-logic " + logic + ")\n";
  request += text;
  request += "(check-sat)\n";

  if (!write_all(request)) {
    // One respawn attempt; a dead child from a previous timeout is expected.
    kill_child();
    spawn();
    if (!write_all(request)) {
      kill_child();
      return {"unknown", {}, "solver process rejected the query stream"};
    }
  }

  std::string buf;
  ReadStatus rs = read_until(
      buf, [](const std::string& b) { return !find_verdict(b).empty(); }, deadline);
  if (rs == ReadStatus::timeout) {
    kill_child();
    return {"timeout", {}, ""};
  }
  if (rs == ReadStatus::eof) {
    kill_child();
    std::string diag = collect_errors(buf);
    return {"unknown", {}, diag.empty() ? "solver process exited unexpectedly" : diag};
  }
  std::string verdict = find_verdict(buf);
  std::string diag = collect_errors(buf);

  SmtResultData result;
  result.status = verdict;
  result.diagnostic = diag;
  if (verdict != "sat" || free_vars.empty()) return result;

  std::string gv = "(get-value (";
  for (size_t i = 0; i < free_vars.size(); ++i) {
    if (i) gv += ' ';
    gv += free_vars[i];
  }
  gv += "))\n";
  if (!write_all(gv)) {
    kill_child();
    return {"unknown", {}, "solver process died before model extraction"};
  }
  std::string mb;
  rs = read_until(mb, balanced_sexpr, deadline);
  if (rs != ReadStatus::ok) {
    kill_child();
    if (rs == ReadStatus::timeout) return {"timeout", {}, ""};
    return {"unknown", {}, "solver process died during model extraction"};
  }
  size_t first = mb.find('(');
  std::vector<std::pair<std::string, std::string>> model;
  if (first == std::string::npos || !parse_get_value(mb.substr(first), model)) {
    return {"unknown", {}, "unparsable model response: " + mb};
  }
  result.model = std::move(model);
  return result;
}

}  // namespace symdl
