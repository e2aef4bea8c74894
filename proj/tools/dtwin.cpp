#include "dtwin/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return dtwin::run_cli(argc, argv, std::cout, std::cerr);
}
