#include "ksos/cli.hpp"
#include <catch2/catch_amalgamated.hpp>
TEST_CASE("placeholder", "[wip]") { CHECK(true); }
