#include <gtest/gtest.h>

#include "squidqct/config.hpp"

using namespace squidqct;

namespace {

const char* kRing = R"(# ring
capacitance_f = 1e-13
inductance_h = 3e-10
resistance_ohm = 100
beta = 2
drive_current_a = 0.9e-6
drive_omega_ratio = 1
bias_flux_phi0 = 0.5
)";

std::string message_of(const std::string& text) {
  try {
    circuit_from_config(KeyValueConfig::parse(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ParsesCommentsAndWhitespace) {
  const auto cfg = KeyValueConfig::parse("  a = 1 \n# b = 2\n\n c=hello world\r\n");
  EXPECT_TRUE(cfg.has("a"));
  EXPECT_FALSE(cfg.has("b"));
  EXPECT_EQ(cfg.require("c"), "hello world");
  EXPECT_DOUBLE_EQ(cfg.number("a"), 1.0);
  EXPECT_EQ(cfg.keys().size(), 2u);
}

TEST(Config, Errors) {
  EXPECT_THROW(KeyValueConfig::parse("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse("just text\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse(" = 3\n"), ConfigError);
  const auto cfg = KeyValueConfig::parse("x = 1.5e\nn = -3\n");
  EXPECT_THROW(cfg.number("x"), ConfigError);
  EXPECT_THROW(cfg.integer_or("n", 0), ConfigError);
  EXPECT_THROW(cfg.require("missing"), ConfigError);
  EXPECT_THROW(KeyValueConfig::load("/nonexistent/dir/file.cfg"), IoError);
}

TEST(Config, ResolvesReferenceRing) {
  const auto r = circuit_from_config(KeyValueConfig::parse(kRing));
  const auto d = derive(r.scaled);
  EXPECT_NEAR(d.beta, 2.0, 1e-12);
  EXPECT_NEAR(d.omega, 1.0, 1e-12);
  EXPECT_NEAR(d.phi_x, 0.5, 1e-15);
  EXPECT_EQ(r.scaling.a, 1.0);
}

TEST(Config, DriveRatioUsesUnscaledResonance) {
  const auto r = circuit_from_config(KeyValueConfig::parse(std::string(kRing) + "scale_a = 100\n"));
  EXPECT_NEAR(derive(r.scaled).omega, 1.0, 1e-12);
  EXPECT_NEAR(derive(r.scaled).j_coeff / derive(r.base).j_coeff, 10.0, 1e-10);
}

TEST(Config, MutuallyExclusiveKeys) {
  EXPECT_EQ(message_of(std::string(kRing) + "critical_current_a = 1e-6\n"),
            "keys 'beta' and 'critical_current_a' are mutually exclusive");
  EXPECT_EQ(message_of(std::string(kRing) + "drive_omega_rad_s = 1e11\n"),
            "keys 'drive_omega_rad_s' and 'drive_omega_ratio' are mutually exclusive");
}

TEST(Config, MissingKeyIsNamed) {
  EXPECT_EQ(message_of("inductance_h = 3e-10\nresistance_ohm = 100\nbeta = 2\ndrive_omega_ratio = 1\n"),
            "missing required key 'capacitance_f'");
}

TEST(Config, UnknownKeyIsNamed) {
  const auto cfg = KeyValueConfig::parse(std::string(kRing) + "capacitence_f = 1\n");
  try {
    cfg.require_known(circuit_keys());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "unknown key 'capacitence_f'");
  }
}

TEST(Config, RoundTripsThroughText) {
  const auto cfg = KeyValueConfig::parse(kRing);
  const auto again = KeyValueConfig::parse(cfg.to_text());
  EXPECT_EQ(again.keys(), cfg.keys());
  for (const auto& k : cfg.keys()) EXPECT_EQ(again.require(k), cfg.require(k));
}
