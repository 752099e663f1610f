#pragma once

#include "fptbound/model.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fpt::test {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ModelFile load(const std::string& name) {
  return parse_model_file(read_file(std::string(FPTBOUND_MODEL_DIR) + "/" + name));
}

inline const char* model1_text() {
  return "species M D\ninit M=0 D=0\nrate lam=100\nrate del=0.2\n"
         "reaction 0 -> M @ lam\nreaction 2 M -> D @ del\n";
}

}  // namespace fpt::test
