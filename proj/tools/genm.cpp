#include "genm/cli.hpp"

int main(int argc, char** argv) { return genm::cli::run(argc, argv); }
