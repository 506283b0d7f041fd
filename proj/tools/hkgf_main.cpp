#include "hkgf/cli.hpp"

int main(int argc, char** argv) { return hkgf::run_cli(argc, argv); }
