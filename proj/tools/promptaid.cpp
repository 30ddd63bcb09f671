#include "promptaid/cli.hpp"

int main(int argc, char** argv) { return promptaid::run_cli(argc, argv); }
