#include "agcml/cli.hpp"

int main(int argc, char** argv) { return agcml::cli::main(argc, argv); }
