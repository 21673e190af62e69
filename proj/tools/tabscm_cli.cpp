#include "tabscm/cli.hpp"

int main(int argc, char** argv) { return tabscm::cli::main(argc, argv); }
