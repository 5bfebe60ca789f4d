#include "ntssl/cli.hpp"

int main(int argc, char** argv) { return ntssl::cli::run_cli(argc, argv); }
