#ifndef LENBIAS_TESTS_TEST_SUPPORT_HPP
#define LENBIAS_TESTS_TEST_SUPPORT_HPP

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lenbias/corpus.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("lenbias-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

/// "p0 p1 ... p<n-1>" with the given prefix; empty string for n == 0.
inline std::string words(const std::string& prefix, int n) {
  std::string text;
  for (int i = 0; i < n; ++i) {
    if (i) text += ' ';
    text += prefix + std::to_string(i);
  }
  return text;
}

/// Pair with the requested token counts; the two sides use disjoint
/// vocabularies, so jaccard overlap is 0 unless texts are overridden.
inline lenbias::PairExample make_pair(std::string id, int len_a, int len_b,
                                      int label) {
  lenbias::PairExample ex;
  ex.id = std::move(id);
  ex.a = lenbias::make_text(words("a", len_a));
  ex.b = lenbias::make_text(words("b", len_b));
  ex.label = label;
  return ex;
}

struct PairRow {
  int len_a;
  int len_b;
  int label;
};

inline lenbias::PairDataset make_pair_dataset(std::string name,
                                              const std::vector<PairRow>& rows) {
  lenbias::PairDataset ds;
  ds.name = std::move(name);
  for (std::size_t i = 0; i < rows.size(); ++i)
    ds.examples.push_back(make_pair("p" + std::to_string(i), rows[i].len_a,
                                    rows[i].len_b, rows[i].label));
  return ds;
}

/// Gold/prediction vectors realizing the given confusion counts, in
/// tp, fp, tn, fn block order.
inline void fill_confusion(long tp, long fp, long tn, long fn,
                           std::vector<int>& gold, std::vector<int>& pred) {
  gold.clear();
  pred.clear();
  for (long i = 0; i < tp; ++i) { gold.push_back(1); pred.push_back(1); }
  for (long i = 0; i < fp; ++i) { gold.push_back(0); pred.push_back(1); }
  for (long i = 0; i < tn; ++i) { gold.push_back(0); pred.push_back(0); }
  for (long i = 0; i < fn; ++i) { gold.push_back(1); pred.push_back(0); }
}

struct CliResult {
  int code = -1;
  std::string output;
};

inline std::string shell_quote(const std::string& s) {
  std::string quoted = "'";
  for (char c : s) {
    if (c == '\'')
      quoted += "'\\''";
    else
      quoted += c;
  }
  quoted += "'";
  return quoted;
}

/// Runs the built CLI with the given arguments, capturing stdout+stderr.
/// With a non-empty cwd the command runs from that directory, so relative
/// input paths (and therefore the echoed configs) are reproducible.
inline CliResult run_cli(const std::vector<std::string>& args,
                         const fs::path& scratch, const fs::path& cwd = {}) {
  static std::atomic<int> counter{0};
  fs::path capture =
      scratch / ("cli-capture-" + std::to_string(counter++) + ".txt");
  std::string cmd;
  if (!cwd.empty()) cmd += "cd " + shell_quote(cwd.string()) + " && ";
  cmd += shell_quote(LENBIAS_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " > " + shell_quote(capture.string()) + " 2>&1";
  int status = std::system(cmd.c_str());
  CliResult result;
  if (status != -1 && WIFEXITED(status)) result.code = WEXITSTATUS(status);
  result.output = read_file(capture);
  return result;
}

}  // namespace testsupport

#endif  // LENBIAS_TESTS_TEST_SUPPORT_HPP
