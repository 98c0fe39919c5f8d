#include "greenedge/cli.hpp"

int main(int argc, char** argv) {
  return greenedge::runCli(argc, argv);
}
