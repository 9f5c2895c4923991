#include "srl/cli.hpp"

int main(int argc, char** argv)
{
    srl::cli::NumericBackend backend;
    return srl::cli::run(argc, argv, backend);
}
