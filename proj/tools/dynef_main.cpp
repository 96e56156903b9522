#include "dynef/cli.hpp"

int main(int argc, char** argv) { return dynef::run_cli(argc, argv); }
