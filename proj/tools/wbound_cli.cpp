#include "wbound/cli.hpp"

int main(int argc, char** argv) { return wbound::run_cli(argc, argv); }
