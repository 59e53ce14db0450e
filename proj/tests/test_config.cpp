#include <doctest.h>

#include "dnas/config.hpp"

using namespace dnas;

TEST_CASE("config files parse sections, comments and values") {
  ConfigFile cfg = ConfigFile::parse(
      "# top comment\n"
      "[data]\n"
      "classes = 8   # inline comment\n"
      "image_size = 64\n"
      "\n"
      "[train-teacher]\n"
      "learning_rate = 0.002\n"
      "schedule = cosine\n"
      "deterministic = true\n");
  CHECK(cfg.get_int("data", "classes", 0) == 8);
  CHECK(cfg.get_int("data", "image_size", 0) == 64);
  CHECK(cfg.get_double("train-teacher", "learning_rate", 0.0) == doctest::Approx(0.002));
  CHECK(cfg.get_str("train-teacher", "schedule", "") == "cosine");
  CHECK(cfg.get_bool("train-teacher", "deterministic", false));
  CHECK(cfg.get_int("data", "missing", 42) == 42);
  cfg.reject_unknown();
}

TEST_CASE("unconsumed keys are reported as unknown") {
  ConfigFile cfg = ConfigFile::parse("[data]\nclasses = 8\nclases = 9\n");
  CHECK(cfg.get_int("data", "classes", 0) == 8);
  CHECK_THROWS_WITH_AS(cfg.reject_unknown(),
                       doctest::Contains("unknown config keys: data.clases"), InvalidInput);
}

TEST_CASE("malformed config lines are rejected with location info") {
  CHECK_THROWS_AS(ConfigFile::parse("[data\nclasses = 8\n"), InvalidInput);
  CHECK_THROWS_AS(ConfigFile::parse("classes 8\n"), InvalidInput);
  CHECK_THROWS_AS(ConfigFile::parse("[data]\nclasses = 8\nclasses = 9\n"), InvalidInput);
}

TEST_CASE("typed getters validate their values") {
  ConfigFile cfg = ConfigFile::parse("[a]\nx = hello\ny = 1.5\nz = maybe\n");
  CHECK_THROWS_AS(cfg.get_int("a", "x", 0), InvalidInput);
  CHECK_THROWS_AS(cfg.get_int("a", "y", 0), InvalidInput);
  CHECK_THROWS_AS(cfg.get_bool("a", "z", false), InvalidInput);
  CHECK(cfg.get_double("a", "y", 0.0) == doctest::Approx(1.5));
}

TEST_CASE("missing config files are reported") {
  CHECK_THROWS_AS(ConfigFile::load("/nonexistent/dnas.cfg"), InvalidInput);
}
