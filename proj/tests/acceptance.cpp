#include "ksos/cli.hpp"
int main() { return 0; }
