#include "stm/cli.hpp"

int main(int argc, char** argv) { return stm::run_cli(argc, argv); }
