#include "qjwork/cli.hpp"

int main(int argc, char** argv) { return qjwork::cli::main(argc, argv); }
