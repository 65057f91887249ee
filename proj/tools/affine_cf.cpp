#include <affinecf/cli.hpp>

#include <iostream>

int main(int argc, char** argv) { return affinecf::cli::runCli(argc, argv, std::cout, std::cerr); }
