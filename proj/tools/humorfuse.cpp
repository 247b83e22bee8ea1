#include <iostream>

#include "humorfuse/app.hpp"

int main(int argc, char** argv) {
  return humorfuse::run_cli(argc, argv, std::cout, std::cerr);
}
