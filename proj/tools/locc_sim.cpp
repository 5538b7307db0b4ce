#include "locc/scenarios.hpp"

int main(int argc, char** argv) { return locc::run_cli(argc, argv); }
