#include <iostream>

#include "uvgrasp_cli/cli.hpp"

int
main(int argc, char** argv)
{
  return uvgrasp::cli::run(argc, argv, std::cout, std::cerr);
}
