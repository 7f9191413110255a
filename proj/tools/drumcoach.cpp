#include <iostream>

#include "drumcoach/cli.hpp"

int main(int argc, char** argv) {
    return drumcoach::cli::run_cli(argc, argv, {std::cin, std::cout, std::cerr});
}
