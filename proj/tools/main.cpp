#include "cli.hpp"

int main(int argc, char** argv) { return copp::cli::run({argv, argv + argc}); }
