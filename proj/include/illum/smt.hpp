#pragma once

// SMT-LIB 2 emission (QF_LRA) and a small subprocess runner for an external
// solver that reads a script on stdin.

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <sstream>

#include "illum/formula.hpp"

namespace illum {

enum class Quantifier { ForAll, Exists };

namespace smt_detail {

// Decimal digits of an unsigned integer held as a little-endian digit vector.
inline void mul_small(std::vector<int>& digits, int k) {
  int carry = 0;
  for (auto& d : digits) {
    int v = d * k + carry;
    d = v % 10;
    carry = v / 10;
  }
  while (carry) {
    digits.push_back(carry % 10);
    carry /= 10;
  }
}

inline std::string to_string(const std::vector<int>& digits) {
  std::string s;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) s.push_back(static_cast<char>('0' + *it));
  return s;
}

inline std::vector<int> from_u64(std::uint64_t v) {
  std::vector<int> d;
  do {
    d.push_back(static_cast<int>(v % 10));
    v /= 10;
  } while (v);
  return d;
}

}  // namespace smt_detail

/// Exact SMT-LIB rendering of a finite double: "5.0", "(- 5.0)", "(/ 3.0 8.0)".
inline std::string smt_real(double v) {
  if (!std::isfinite(v)) throw Error("smt_real: non-finite value");
  bool neg = std::signbit(v) && v != 0.0;
  double a = std::fabs(v);
  int exp = 0;
  double frac = std::frexp(a, &exp);  // a = frac * 2^exp, frac in [0.5,1)
  auto mant = static_cast<std::uint64_t>(std::ldexp(frac, 53));
  int e = exp - 53;  // a = mant * 2^e
  if (mant == 0) e = 0;
  while (mant != 0 && (mant & 1u) == 0 && e < 0) {
    mant >>= 1;
    ++e;
  }
  std::string body;
  if (e >= 0) {
    auto d = smt_detail::from_u64(mant);
    for (int i = 0; i < e; ++i) smt_detail::mul_small(d, 2);
    body = smt_detail::to_string(d) + ".0";
  } else {
    std::vector<int> den{1};
    for (int i = 0; i < -e; ++i) smt_detail::mul_small(den, 2);
    body = "(/ " + std::to_string(mant) + ".0 " + smt_detail::to_string(den) + ".0)";
  }
  return neg ? "(- " + body + ")" : body;
}

inline std::string smt_symbol(VarIndex v) { return "v" + std::to_string(v); }

inline std::string smt_formula(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      const Atom& a = f.atom_value();
      std::vector<std::string> parts;
      for (const auto& t : a.terms) parts.push_back("(* " + smt_real(t.coeff) + " " + smt_symbol(t.var) + ")");
      parts.push_back(smt_real(a.constant));
      std::string lhs;
      if (parts.size() == 1) {
        lhs = parts[0];
      } else {
        lhs = "(+";
        for (const auto& p : parts) lhs += " " + p;
        lhs += ")";
      }
      return std::string("(") + relation_symbol(a.rel) + " " + lhs + " 0.0)";
    }
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      bool is_and = f.kind() == Formula::Kind::And;
      if (f.children().empty()) return is_and ? "true" : "false";
      if (f.children().size() == 1) return smt_formula(f.children()[0]);
      std::string s = is_and ? "(and" : "(or";
      for (const auto& c : f.children()) s += " " + smt_formula(c);
      return s + ")";
    }
    case Formula::Kind::Not:
      return "(not " + smt_formula(f.children().front()) + ")";
  }
  return "true";
}

/// Script whose check-sat answers "unsat" iff the ForAll query holds, or
/// "sat" iff the Exists query holds. Deterministic for equal inputs.
inline std::string emit_smtlib(Quantifier q, const Formula& f, const Box& b) {
  std::ostringstream os;
  os << "(set-logic QF_LRA)\n";
  std::vector<VarIndex> vars = b.vars();
  for (auto v : f.free_vars())
    if (b.find(v) == nullptr) vars.push_back(v);
  std::sort(vars.begin(), vars.end());
  for (auto v : vars) os << "(declare-fun " << smt_symbol(v) << " () Real)\n";
  for (std::size_t k = 0; k < b.dim(); ++k) {
    os << "(assert (<= " << smt_real(b.axis(k).lo) << " " << smt_symbol(b.var(k)) << "))\n";
    os << "(assert (<= " << smt_symbol(b.var(k)) << " " << smt_real(b.axis(k).hi) << "))\n";
  }
  if (q == Quantifier::ForAll)
    os << "(assert (not " << smt_formula(f) << "))\n";
  else
    os << "(assert " << smt_formula(f) << ")\n";
  os << "(check-sat)\n(exit)\n";
  return os.str();
}

struct SmtConfig {
  std::string command;  // e.g. "z3 -in -smt2"
  int timeout_ms = 10000;
};

enum class SmtAnswer { Sat, Unsat, Unknown };

struct SmtResult {
  SmtAnswer answer = SmtAnswer::Unknown;
  std::string diagnostic;
};

inline std::vector<std::string> split_command(const std::string& cmd) {
  std::istringstream is(cmd);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

/// Runs the solver with `script` on stdin. Failures and timeouts come back as
/// Unknown with a diagnostic rather than exceptions.
inline SmtResult run_smt(const SmtConfig& cfg, const std::string& script) {
  auto argv_s = split_command(cfg.command);
  if (argv_s.empty()) return {SmtAnswer::Unknown, "smt: empty command"};
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) return {SmtAnswer::Unknown, "smt: pipe failed"};
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    return {SmtAnswer::Unknown, "smt: pipe failed"};
  }
  pid_t pid = fork();
  if (pid < 0) return {SmtAnswer::Unknown, "smt: fork failed"};
  if (pid == 0) {
    dup2(in_pipe[0], 0);
    dup2(out_pipe[1], 1);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    std::vector<char*> argv;
    for (auto& s : argv_s) argv.push_back(s.data());
    argv.push_back(nullptr);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  // Scripts are small; a single blocking write fits in the pipe buffer, but
  // loop anyway. SIGPIPE is ignored so a dead solver cannot kill us.
  struct sigaction ign {}, old {};
  ign.sa_handler = SIG_IGN;
  sigaction(SIGPIPE, &ign, &old);
  std::size_t off = 0;
  while (off < script.size()) {
    ssize_t w = write(in_pipe[1], script.data() + off, script.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      break;
    }
    off += static_cast<std::size_t>(w);
  }
  close(in_pipe[1]);
  sigaction(SIGPIPE, &old, nullptr);

  std::string out;
  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(cfg.timeout_ms);
  bool timed_out = false;
  char buf[4096];
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd p{out_pipe[0], POLLIN, 0};
    int r = poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) {
      timed_out = r == 0;
      break;
    }
    ssize_t n = read(out_pipe[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  close(out_pipe[0]);
  if (timed_out) kill(pid, SIGKILL);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out) return {SmtAnswer::Unknown, "smt: timeout after " + std::to_string(cfg.timeout_ms) + " ms"};
  if (WIFEXITED(status) && WEXITSTATUS(status) == 127) return {SmtAnswer::Unknown, "smt: cannot execute '" + argv_s[0] + "'"};

  std::istringstream is(out);
  std::string first;
  is >> first;
  if (first == "sat") return {SmtAnswer::Sat, {}};
  if (first == "unsat") return {SmtAnswer::Unsat, {}};
  return {SmtAnswer::Unknown, "smt: solver said '" + out.substr(0, 200) + "'"};
}

}  // namespace illum
