#include "scar/cli.hpp"

int main(int argc, char** argv) { return scar::run_cli(argc, argv); }
