#include <string>
#include <vector>

#include "ecgvae/cli.hpp"

int main(int argc, char** argv) {
  return ecgvae::cli_dispatch(std::vector<std::string>(argv, argv + argc));
}
