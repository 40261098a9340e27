#include "fpl/cli_io.hpp"

int main(int argc, char** argv) { return fpl::run_cli(argc, argv); }
