#include <string>
#include <vector>

#include "idealgames/cli.hpp"

int main(int argc, char** argv) {
  return idealgames::run_cli(std::vector<std::string>(argv, argv + argc));
}
