#include <iostream>
#include <string>
#include <vector>

#include "aptsim/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return aptsim::cli::run(std::move(args), std::cout, std::cerr);
}
