#include "mcqn_cli/cli.hpp"

int main(int argc, char** argv) { return mcqn::cli::run(argc, argv); }
