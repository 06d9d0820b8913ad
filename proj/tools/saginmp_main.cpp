#include <string>
#include <vector>

#include "saginmp/harness.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return saginmp::run_cli(args);
}
