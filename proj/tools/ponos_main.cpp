#include <string>
#include <vector>

#include "ponos/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ponos::cli_main(std::move(args));
}
