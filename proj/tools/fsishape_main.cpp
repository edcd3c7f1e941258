#include "fsishape/config.hpp"

int main(int argc, char** argv) { return fsi::run_cli(argc, argv); }
