#include <iostream>

#include "kfhe/bench.hpp"

int main(int argc, char** argv) { return kfhe::run_cli(argc, argv, std::cout, std::cerr); }
