#include "mmw2s/cli/commands.hpp"

int main(int argc, char** argv) { return mmw2s::run_cli(argc, argv); }
