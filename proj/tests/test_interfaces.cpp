#include "catch_amalgamated.hpp"
#include "rdsel/rdsel.hpp"

TEST_CASE("placeholder interfaces") { REQUIRE(true); }
