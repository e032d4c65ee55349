#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "deflab/config.hpp"
#include "deflab/errors.hpp"

using namespace deflab;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return config_from_raw(parse_flat_config(in));
}

}  // namespace

TEST_CASE("flat config grammar") {
  const auto c = parse(
      "# comment\n"
      "name = \"a # not a comment\"\n"
      "model = bessel3   # trailing\n"
      "utility = \"log\"\n"
      "tests = [\"budget_saturation\", foc]\n"
      "checkpoints = 0, 2.5, 5\n"
      "n_paths = 2048\n"
      "convention = kappa\n"
      "y = 0.25\n");
  CHECK(c.name == "a # not a comment");
  CHECK(c.model == "bessel3");
  CHECK(c.utility == "log");
  CHECK(c.tests == std::vector<std::string>{"budget_saturation", "foc"});
  CHECK(c.checkpoints == std::vector<double>{0.0, 2.5, 5.0});
  CHECK(c.n_paths == 2048);
  CHECK(c.convention == Convention::KappaForm);
  REQUIRE(c.y);
  CHECK(*c.y == 0.25);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse("bogus_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("x = 1\nx = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("[table]\n"), ConfigError);
  CHECK_THROWS_AS(parse("x 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("n_paths = -3\n"), ConfigError);
  CHECK_THROWS_AS(parse("alpha = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse("tests = [primal\n"), ConfigError);
}

TEST_CASE("validation re-checks module preconditions") {
  CHECK_NOTHROW(parse("utility = log\n").validate());
  CHECK_THROWS_AS(parse("tests = [nonsense]\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse("x = -1\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse("p = 1.5\n").validate(), DomainError);
  CHECK_THROWS_AS(parse("checkpoints = [0, 3.33333]\nt_max = 10\nsteps = 10\n").validate(), std::exception);
  CHECK_THROWS_AS(parse("alpha = 0.05\nlambda = 0.4\np = 0.5\n").validate(), InfiniteDualError);
  CHECK_THROWS_AS(parse("strategy = merton\nmodel = bessel3\n").validate(), ConfigError);
}

TEST_CASE("seed precedence: flag, then environment, then config") {
  unsetenv("DEFLATOR_LAB_SEED");
  CHECK(resolve_seed(5, std::nullopt) == 5);
  setenv("DEFLATOR_LAB_SEED", "77", 1);
  CHECK(resolve_seed(5, std::nullopt) == 77);
  CHECK(resolve_seed(5, std::uint64_t{9}) == 9);
  setenv("DEFLATOR_LAB_SEED", "x1", 1);
  CHECK_THROWS_AS(resolve_seed(5, std::nullopt), ConfigError);
  unsetenv("DEFLATOR_LAB_SEED");
}
