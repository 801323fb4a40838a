#include <gtest/gtest.h>

#include <fstream>

#include "ymmb/pipeline.hpp"

using namespace ymmb;

TEST(Config, ParsesSectionsAndTypes) {
  const std::string text =
      "seed = 42\n"
      "backend = \"wilson\"  # comment\n"
      "\n"
      "[cascade]\n"
      "eps_shoot = 5e-5\n"
      "sweep_samples = 32\n"
      "[survey]\n"
      "ascent = false\n";
  const Config c = Config::parse(text, pipeline_config_keys());
  EXPECT_EQ(c.integer("seed", 0), 42);
  EXPECT_EQ(c.string("backend", ""), "wilson");
  EXPECT_DOUBLE_EQ(c.number("cascade.eps_shoot", 0.0), 5e-5);
  EXPECT_DOUBLE_EQ(c.number("seed", 0.0), 42.0);
  EXPECT_FALSE(c.boolean("survey.ascent", true));
  EXPECT_EQ(c.integer("h.starts", 7), 7);
  EXPECT_FALSE(c.has("h.starts"));
}

TEST(Config, UnknownKeyReportsLine) {
  try {
    Config::parse("seed = 1\n\n[cascade]\neps_shot = 1e-4\n", pipeline_config_keys());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 4);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("cascade.eps_shot"), std::string::npos);
  }
}

TEST(Config, MalformedInput) {
  const auto& keys = pipeline_config_keys();
  EXPECT_THROW(Config::parse("seed\n", keys), ConfigError);
  EXPECT_THROW(Config::parse("seed = \n", keys), ConfigError);
  EXPECT_THROW(Config::parse("seed = 1\nseed = 2\n", keys), ConfigError);
  EXPECT_THROW(Config::parse("[cascade\n", keys), ConfigError);
  EXPECT_THROW(Config::parse("backend = \"wilson\n", keys), ConfigError);
  EXPECT_THROW(Config::parse("seed = 1x\n", keys), ConfigError);
}

TEST(Config, TypeMismatchReportsLine) {
  const Config c = Config::parse("\nseed = 1.5\n", pipeline_config_keys());
  try {
    c.integer("seed", 0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(Config, QuotedHashIsNotComment) {
  const Config c = Config::parse("backend = \"a#b\"\n", pipeline_config_keys());
  EXPECT_EQ(c.string("backend", ""), "a#b");
}

TEST(Config, LoadMissingFile) { EXPECT_THROW(Config::load("/nonexistent/ymmb.cfg", {}), ConfigError); }

TEST(Config, LoadFromFile) {
  const std::string path = ::testing::TempDir() + "ymmb_cfg_test.cfg";
  std::ofstream(path) << "[flow]\ntol_g = 1e-9\n";
  const Config c = Config::load(path, pipeline_config_keys());
  EXPECT_DOUBLE_EQ(c.number("flow.tol_g", 0.0), 1e-9);
}

TEST(Config, AppliesToPipelineOptions) {
  const Config c = Config::parse(
      "seed = 9\n[survey]\nstarts = 12\n[flow]\ntol_g = 1e-7\n[cascade]\ndelta_match = 5e-5\n[h]\nattempts = 3\n",
      pipeline_config_keys());
  const HomologyOptions o = options_from_config(c);
  EXPECT_EQ(o.seed, 9u);
  EXPECT_EQ(o.survey.n_starts, 12);
  EXPECT_DOUBLE_EQ(o.survey.flow.tol_g, 1e-7);
  EXPECT_DOUBLE_EQ(o.cascade.flow.tol_g, 1e-7);
  EXPECT_DOUBLE_EQ(o.cascade.delta_match, 5e-5);
  EXPECT_EQ(o.h.attempts, 3);
  EXPECT_EQ(o.cascade.h.attempts, 3);
}

TEST(Substream, IndependentAndReproducible) {
  auto a1 = substream(1, "survey"), a2 = substream(1, "survey");
  auto b = substream(1, "h-choice"), c = substream(2, "survey");
  const auto x = a1();
  EXPECT_EQ(x, a2());
  EXPECT_NE(x, b());
  EXPECT_NE(x, c());
}
