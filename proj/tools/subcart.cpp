#include "subcart/cli.hpp"

int main(int argc, char ** argv) { return subcart::run(argc, argv); }
