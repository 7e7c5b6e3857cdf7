#pragma once

// Runs the dgn executable as a child process and captures its output.

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "dgn/io.hpp"

namespace dgn::testing {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char ch : s) q += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
  return q + "'";
}

inline CliResult run_cli(const std::filesystem::path& binary, const std::vector<std::string>& args,
                         const std::filesystem::path& scratch) {
  const auto out_path = scratch / "cli.stdout";
  const auto err_path = scratch / "cli.stderr";
  std::string cmd = shell_quote(binary.string());
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " >" + shell_quote(out_path.string()) + " 2>" + shell_quote(err_path.string());
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

// Value of a "key=value" line in CLI output, or "" when absent.
inline std::string field(const std::string& output, const std::string& key) {
  const std::string needle = key + "=";
  std::size_t pos = 0;
  while (pos < output.size()) {
    const std::size_t end = output.find('\n', pos);
    const std::string line = output.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    if (line.rfind(needle, 0) == 0) return line.substr(needle.size());
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return "";
}

// Relative path -> file contents for every regular file under `root`.
inline std::vector<std::pair<std::string, std::string>> snapshot_tree(const std::filesystem::path& root) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file())
      files.emplace_back(std::filesystem::relative(e.path(), root).string(), read_file(e.path()));
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace dgn::testing
