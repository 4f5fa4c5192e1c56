#include "vfphase/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return vfphase::cli::run(argc, argv, std::cout, std::cerr);
}
