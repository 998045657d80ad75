#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    const auto seed = qlab::cli::seed_from_environment();
    return qlab::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr, seed);
}
