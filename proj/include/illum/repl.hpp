#pragma once

// Line-oriented front end. Outside a question the prompt accepts a question
// or a command; inside one it accepts the responses ma, la, b, history <t>,
// ignore <pred>, aps [ma|la].

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "illum/question.hpp"
#include "illum/session.hpp"

namespace illum {

struct ReplOptions {
  std::size_t page_lines = 0;  // 0 disables paging
  bool echo = false;           // echo input lines (for transcripts of piped input)
};

class Repl {
 public:
  Repl(Session& s, std::istream& in, std::ostream& out, ReplOptions opt = {})
      : s_(s), in_(in), out_(out), opt_(opt) {}

  /// Returns the number of rejected inputs.
  std::size_t run() {
    std::string line;
    while (prompt(), std::getline(in_, line)) {
      if (opt_.echo) out_ << line << '\n';
      line = trim(line);
      if (line.empty()) continue;
      if (!s_.active() && (line == "quit" || line == "exit")) break;
      try {
        handle(line);
      } catch (const Session::ValidationError& e) {
        ++errors_;
        out_ << "error: invalid question\n";
        for (const auto& v : e.violations) out_ << "  " << v << '\n';
      } catch (const Error& e) {
        ++errors_;
        out_ << "error: " << e.what() << '\n';
      }
    }
    if (opt_.echo) out_ << '\n';
    return errors_;
  }

 private:
  static std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
  }

  void prompt() { out_ << (s_.active() ? "(ma|la|b|history t|ignore p|aps)> " : "question> ") << std::flush; }

  void handle(const std::string& line) {
    std::istringstream ss(line);
    std::string cmd;
    ss >> cmd;
    std::string arg;
    std::getline(ss, arg);
    arg = trim(arg);
    if (cmd == "help") {
      help();
      return;
    }
    if (cmd == "complete") {
      for (const auto& c : complete_question(arg, s_.pack())) out_ << c << '\n';
      return;
    }
    if (!s_.active()) {
      s_.ask(parse_question(line));
      show();
      return;
    }
    Response r;
    if (cmd == "ma") r = Response::more();
    else if (cmd == "la") r = Response::less();
    else if (cmd == "b" || cmd == "exit") r = Response::exit();
    else if (cmd == "history") r = Response::history(std::stoul(arg.empty() ? "x" : arg));
    else if (cmd == "ignore") r = Response::ignore(arg);
    else if (cmd == "aps") r = Response::aps(arg != "la");
    else if (is_question(cmd)) throw Error("finish the current question first (respond b)");
    else throw Error("unknown response '" + cmd + "'; type help");
    const auto& st = s_.respond(r);
    if (st.terminal) {
      out_ << "done.\n";
      return;
    }
    if (!st.dropped.empty()) out_ << "(dropped " << st.dropped << ")\n";
    show();
  }

  static bool is_question(const std::string& w) {
    for (const auto& k : question_keywords())
      if (w == k.text) return true;
    return false;
  }

  void help() {
    out_ << "questions:\n";
    for (const auto& k : question_keywords()) out_ << "  " << k.text << " <dnf>?\n";
    out_ << "  <dnf> is p, and(p, q), joined with ' or '\n"
            "responses: ma, la, b, history <t>, ignore <pred>, aps [ma|la]\n"
            "other: complete <partial question>, help, quit\n";
  }

  void show() {
    const auto& st = s_.current();
    std::vector<std::string> lines;
    char head[96];
    std::snprintf(head, sizeof head, "t=%zu eps=%g boxes=%zu", st.id, st.params.epsilon, st.reach.pairs.size());
    lines.emplace_back(head);
    if (!st.message.empty()) {
      lines.push_back(st.message);
    } else {
      std::istringstream d(render_description(st.description, s_.pack()));
      std::string l;
      while (std::getline(d, l)) lines.push_back(l);
    }
    page(lines);
  }

  void page(const std::vector<std::string>& lines) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      out_ << lines[i] << '\n';
      if (opt_.page_lines > 0 && (i + 1) % opt_.page_lines == 0 && i + 1 < lines.size()) {
        out_ << "--more-- (enter: next page, q: stop) " << std::flush;
        std::string k;
        if (!std::getline(in_, k) || trim(k) == "q") return;
      }
    }
  }

  Session& s_;
  std::istream& in_;
  std::ostream& out_;
  ReplOptions opt_;
  std::size_t errors_ = 0;
};

}  // namespace illum
