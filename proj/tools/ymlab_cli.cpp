#include "ymlab/harness.hpp"

int main(int argc, char** argv) { return ymlab::run_command(argc, argv); }
