#include "commands.hpp"

int main(int argc, char** argv) { return hold::cli::run_cli(argc, argv); }
