#include <string>
#include <vector>

#include "dstg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dstg::cmd_dispatch(args);
}
