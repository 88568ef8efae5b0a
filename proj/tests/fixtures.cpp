#include "fixtures.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <stdexcept>

#include "natex/util.hpp"

namespace fs = std::filesystem;

namespace fixtures {

namespace {
std::atomic<int> g_dir_counter{0};
}

TempDir::TempDir() {
  fs::path base = fs::temp_directory_path();
  int n = g_dir_counter.fetch_add(1);
  path_ = (base / ("natex_test_" + std::to_string(::getpid()) + "_" + std::to_string(n))).string();
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string TempDir::write(const std::string& rel, const std::string& content) const {
  fs::path full = fs::path(path_) / rel;
  fs::create_directories(full.parent_path());
  natex::util::write_file(full.string(), content);
  return full.string();
}

std::string sample_java() {
  return R"(package demo.sample;

// totals and limits
public class Tally {
    static final int LIMIT = 64;

    static int accumulate(int[] values, int count) {
        int total = 0;
        for (int i = 0; i < count; i++) {
            total = total + values[i];
        }
        return total;
    }

    static double scale(double base, double factor) {
        double result = base * factor + 0.5;
        if (result > LIMIT) {
            result = LIMIT * 1.0;
        }
        return result;
    }

    static boolean inRange(int x, int lo, int hi) {
        return lo <= x && x <= hi;
    }

    static int area(int width, int height, int border) {
        int inner = (width - border) * (height - border);
        return inner + border * 4;
    }

    /* string handling */
    static String label(String name, int index) {
        String prefix = "item ";
        char sep = ':';
        return prefix + name + sep + index;
    }
}
)";
}

std::vector<natex::frontend::Token> lex(const std::string& source) {
  natex::frontend::LexError err;
  auto toks = natex::frontend::tokenize(source, &err);
  if (!toks)
    throw std::runtime_error("fixture source failed to lex: " + err.message + " at line " +
                             std::to_string(err.line));
  return *toks;
}

}  // namespace fixtures
