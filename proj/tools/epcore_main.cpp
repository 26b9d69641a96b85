#include "epcore/cli.hpp"

int main(int argc, char** argv) { return epcore::cli::run(argc, argv); }
