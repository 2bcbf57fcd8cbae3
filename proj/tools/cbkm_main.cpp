#include "cbkm/cli.hpp"

int main(int argc, char** argv) { return cbkm::cli::run_cli(argc, argv); }
