#include <iostream>

#include <torch/torch.h>

#include "aero/cli.hpp"

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  return aero::cli::dispatch(argc, argv, std::cout, std::cerr);
}
