#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace test_support {

struct LatexScan {
  bool balanced = true;
  std::string problem;
  // \begin/\end events and the annotation commands, in source order.
  std::vector<std::string> events;
};

// Brace and environment balance. The body of a verbatim-like environment
// is skipped up to its \end tag.
inline LatexScan scan_latex(std::string_view s, const std::vector<std::string>& verbatim_envs = {"bibtexannotation"}) {
  LatexScan r;
  std::vector<char> braces;
  std::vector<std::string> envs;
  auto fail = [&](std::string msg) {
    if (r.balanced) r.problem = std::move(msg);
    r.balanced = false;
  };
  auto read_group = [&](std::size_t& i) {
    std::string name;
    if (i < s.size() && s[i] == '{') {
      const auto close = s.find('}', i);
      if (close == std::string_view::npos) return name;
      name = std::string(s.substr(i + 1, close - i - 1));
      i = close + 1;
    }
    return name;
  };
  for (std::size_t i = 0; i < s.size();) {
    const char c = s[i];
    if (c == '%') {
      const auto nl = s.find('\n', i);
      i = nl == std::string_view::npos ? s.size() : nl + 1;
    } else if (c == '{') {
      braces.push_back('{');
      ++i;
    } else if (c == '}') {
      if (braces.empty()) fail("unmatched } at " + std::to_string(i));
      else braces.pop_back();
      ++i;
    } else if (c == '\\') {
      ++i;
      if (i >= s.size()) break;
      if (!std::isalpha(static_cast<unsigned char>(s[i]))) {
        ++i;
        continue;
      }
      std::string cmd;
      while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) cmd += s[i++];
      if (cmd == "begin" || cmd == "end") {
        const std::string env = read_group(i);
        r.events.push_back("\\" + cmd + "{" + env + "}");
        if (cmd == "begin") {
          envs.push_back(env);
          bool verbatim = false;
          for (const auto& v : verbatim_envs) verbatim = verbatim || v == env;
          if (verbatim) {
            const std::string tag = "\\end{" + env + "}";
            const auto end = s.find(tag, i);
            if (end == std::string_view::npos) {
              fail("unterminated " + env);
              break;
            }
            i = end;
          }
        } else if (envs.empty() || envs.back() != env) {
          fail("\\end{" + env + "} does not close the open environment");
        } else {
          envs.pop_back();
        }
      } else if (cmd == "hypertarget" || cmd == "citationtitle" || cmd == "onlineversion" || cmd == "relatedpaper") {
        r.events.push_back("\\" + cmd);
      }
    } else {
      ++i;
    }
  }
  if (!braces.empty()) fail("unclosed {");
  if (!envs.empty()) fail("unclosed environment " + envs.back());
  return r;
}

}  // namespace test_support
