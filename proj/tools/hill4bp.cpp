#include "hill4bp/cli.hpp"

int main(int argc, char **argv)
{
    return hill4bp::cli::main(argc, argv);
}
