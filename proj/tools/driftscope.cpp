#include "driftscope/cli.hpp"

int main(int argc, char** argv) { return driftscope::cli::run_cli(argc, argv); }
