#include "udabench/cli/commands.hpp"

int main(int argc, char** argv) { return udabench::cli::run_cli(argc, argv); }
