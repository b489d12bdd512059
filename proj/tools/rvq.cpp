#include "rvq/cli.hpp"

int main(int argc, char** argv) { return rvq::cli::run_cli(argc, argv); }
