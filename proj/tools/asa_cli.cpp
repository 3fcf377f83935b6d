#include "asa/cli.hpp"

int main(int argc, char** argv) { return asa::run_cli(argc, argv); }
