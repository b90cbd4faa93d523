#include "hiersample/cli.hpp"

int main(int argc, char** argv) { return hiersample::cli::run(argc, argv); }
