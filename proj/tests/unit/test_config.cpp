#include <limits>
#include <sstream>

#include "doctest.h"
#include "graphaug/config.hpp"
#include "graphaug/errors.hpp"
#include "graphaug/rng.hpp"

using namespace graphaug;

TEST_SUITE("config") {
  TEST_CASE("parse, query and write") {
    std::stringstream in(
        "# comment\n"
        "top = 1\n"
        "[train]\n"
        "  lr = 0.01  \n"
        "; another\n"
        "hops = 0, 1, 2\n"
        "\n"
        "[data]\n"
        "path = a b.txt\n");
    const auto kv = KeyValueConfig::parse(in);
    CHECK(kv.get("", "top") == "1");
    CHECK(kv.get("train", "lr") == "0.01");
    CHECK(kv.get("data", "path") == "a b.txt");
    CHECK_FALSE(kv.get("data", "missing").has_value());
    CHECK(kv.get_or("data", "missing", "x") == "x");
    CHECK(kv.sections() == std::vector<std::string>{"", "train", "data"});
    CHECK(kv.keys("train") == std::vector<std::string>{"lr", "hops"});
    CHECK(split_list(*kv.get("train", "hops")) == std::vector<std::string>{"0", "1", "2"});
    std::stringstream out;
    kv.write(out);
    CHECK(KeyValueConfig::parse(out) == kv);
  }

  TEST_CASE("malformed lines carry line numbers") {
    std::stringstream a("[train]\nno equals here\n");
    try {
      KeyValueConfig::parse(a);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    std::stringstream b("[train\n");
    CHECK_THROWS_AS(KeyValueConfig::parse(b), ParseError);
    CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/graphaug.cfg"), ParseError);
  }

  TEST_CASE("numbers") {
    for (double v : {0.1, 1e-7, 0.9, 1.0 / 3.0, -2.5e300, std::numeric_limits<double>::denorm_min()})
      CHECK(parse_double(format_double(v), "v") == v);
    CHECK(parse_int("42", "n") == 42);
    CHECK_THROWS_AS(parse_double("0.1x", "v"), ConfigError);
    CHECK_THROWS_AS(parse_int("4.2", "n"), ConfigError);
    CHECK_THROWS_AS(parse_int("", "n"), ConfigError);
  }

  TEST_CASE("seed derivation") {
    CHECK(derive_seed(1, "masks", 0) == derive_seed(1, "masks", 0));
    CHECK(derive_seed(1, "masks", 0) != derive_seed(1, "masks", 1));
    CHECK(derive_seed(1, "masks", 0) != derive_seed(2, "masks", 0));
    CHECK(derive_seed(1, "masks", 0) != derive_seed(1, "gumbel", 0));
  }
}
