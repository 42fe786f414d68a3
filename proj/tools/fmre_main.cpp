#include "fmre/harness.hpp"

int main(int argc, char** argv) { return fmre::cli_main(argc, argv); }
