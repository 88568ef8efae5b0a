#pragma once

#include <string>
#include <vector>

#include "natex/lexer.hpp"

namespace fixtures {

// Unique scratch directory under the system temp root; removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  // writes content at path()/rel (parent dirs created), returns the full path
  std::string write(const std::string& rel, const std::string& content) const;

 private:
  std::string path_;
};

// Small legal Java compilation unit exercising most token kinds and several
// transformable expressions.
std::string sample_java();

// Tokenize or abort the test.
std::vector<natex::frontend::Token> lex(const std::string& source);

}  // namespace fixtures
