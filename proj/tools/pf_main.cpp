#include "pf/cli.hpp"

int main(int argc, char** argv) { return pf::cli::run_main(argc, argv); }
