#include <gtest/gtest.h>

#include <sstream>

#include "run_config.hpp"

using namespace exclab::cli;

namespace {

int error_line(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  try {
    parse_config(in, c);
  } catch (const ConfigError& e) {
    return e.line;
  }
  return -1;
}

}  // namespace

TEST(Config, ParsesSectionsListsAndComments) {
  std::istringstream in(
      "# run\n[model]\nN = 32, 64  # two sizes\ntheta=1\nalpha = 0.1\n\n[kernel]\ntype = lj\ngamma = 2.5\n"
      "[schedule]\ntimes = 0.02,0.1\n[ensemble]\nreplicas = 7\nmaster_seed = 18446744073709551615\n[output]\nplots = no\n");
  RunConfig c;
  parse_config(in, c);
  EXPECT_EQ(c.N, (std::vector<int>{32, 64}));
  EXPECT_EQ(c.theta, std::vector<double>{1.0});
  EXPECT_EQ(c.alpha, 0.1);
  EXPECT_EQ(c.beta, 0.8);  // default kept
  EXPECT_EQ(c.kernel, "lj");
  EXPECT_EQ(c.gamma, 2.5);
  EXPECT_EQ(c.times, (std::vector<double>{0.02, 0.1}));
  EXPECT_EQ(c.replicas, 7u);
  EXPECT_EQ(c.master_seed, 18446744073709551615ULL);
  EXPECT_FALSE(c.plots);
}

TEST(Config, ErrorsCarryTheLine) {
  EXPECT_EQ(error_line("[model]\nN = 8\nfoo = 1\n"), 3);
  EXPECT_EQ(error_line("[model]\n\n\n[output]\ncolour = red\n"), 5);
  EXPECT_EQ(error_line("[models]\n"), 1);
  EXPECT_EQ(error_line("N = 8\n"), 1);
  EXPECT_EQ(error_line("[model]\nN = eight\n"), 2);
  EXPECT_EQ(error_line("[model]\nN = 1\n"), 2);
  EXPECT_EQ(error_line("[model]\nN 8\n"), 2);
  EXPECT_EQ(error_line("[model]\nN = 8\nN = 9\n"), 3);
  EXPECT_EQ(error_line("[kernel]\ntype = levy\n"), 2);
  EXPECT_EQ(error_line("[ensemble]\nmaster_seed = -4\n"), 2);
  EXPECT_EQ(error_line("[schedule]\ntimes = 0.1, -1\n"), 2);
  EXPECT_EQ(error_line("[model]\nN = 8\n"), -1);
}

TEST(Config, ResolvedCopyRoundTrips) {
  RunConfig c;
  c.N = {16, 128};
  c.theta = {-0.5, 1.0 / 3.0};
  c.alpha = 0.1 + 0.2;
  c.profile_b = 0.7;
  c.times = {0.1, 1e-3};
  c.kernel = "lj";
  c.gamma = 1.5;
  c.master_seed = 99;
  c.mode = "lazy";
  c.plots = false;
  RunConfig d;
  std::istringstream in(format_config(c));
  parse_config(in, d);
  EXPECT_EQ(format_config(d), format_config(c));
  EXPECT_EQ(d.theta[1], 1.0 / 3.0);
  EXPECT_EQ(d.alpha, 0.1 + 0.2);
  EXPECT_FALSE(d.profile_a.has_value());
  EXPECT_EQ(*d.profile_b, 0.7);
}
