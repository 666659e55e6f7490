#include <string>
#include <vector>

#include "voxtherm/cli.hpp"

int main(int argc, char** argv) {
  return voxtherm::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
