#include "limsup/cli.hpp"

int main(int argc, char** argv) { return limsup::cli::run(argc, argv); }
