#include "sensefit/cli.hpp"

int main(int argc, char** argv) { return sensefit::cli::main_entry(argc, argv); }
