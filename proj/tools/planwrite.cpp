#include <string>
#include <vector>

#include "planwrite/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return planwrite::cli::dispatch(std::move(args));
}
