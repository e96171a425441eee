#include "ddspc/scenario.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace ddspc {
namespace {

TEST(Scenario, PresetValues) {
  const auto s = preset("scalar");
  EXPECT_EQ(s.name, "scalar-gaussian");
  EXPECT_EQ(s.ocp.N, 25);
  EXPECT_DOUBLE_EQ(s.A(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(s.noise.params(0), 0.25);
  EXPECT_DOUBLE_EQ(s.ocp.eps_x, 0.2);
  EXPECT_EQ(s.data.T, 150);
  EXPECT_EQ(s.basis(true).last_index(), 26);

  const auto a = preset("aircraft");
  EXPECT_EQ(a.ocp.N, 10);
  EXPECT_EQ(a.basis(false).last_index(), 40);
  EXPECT_DOUBLE_EQ(a.initial.value(3), -400.0);
  EXPECT_DOUBLE_EQ(a.ocp.R(0, 0), 5188.25);
  EXPECT_THROW(preset("nope"), ConfigError);
  for (const auto& n : preset_names()) EXPECT_NO_THROW(preset(n).validate());
}

TEST(Scenario, RoundTrip) {
  for (const auto& n : preset_names()) {
    const auto s = preset(n);
    for (bool annotate : {false, true}) {
      std::ostringstream out;
      write_scenario(s, out, annotate);
      const auto back = parse_scenario(out.str());
      EXPECT_EQ(back.name, s.name);
      EXPECT_EQ(back.A, s.A);
      EXPECT_EQ(back.B, s.B);
      EXPECT_EQ(back.ocp.Q, s.ocp.Q);
      EXPECT_EQ(back.ocp.R, s.ocp.R);
      EXPECT_EQ(back.ocp.N, s.ocp.N);
      EXPECT_EQ(back.ocp.state_box.lower, s.ocp.state_box.lower);
      EXPECT_EQ(back.ocp.state_box.upper, s.ocp.state_box.upper);
      EXPECT_EQ(back.noise.params, s.noise.params);
      EXPECT_EQ(back.data.T, s.data.T);
      EXPECT_EQ(back.data.seed, s.data.seed);
      EXPECT_EQ(back.run.runs, s.run.runs);
      std::ostringstream again;
      write_scenario(back, again, annotate);
      EXPECT_EQ(again.str(), out.str());
    }
  }
}

TEST(Scenario, AnnotatedOutputCarriesOrigins) {
  std::ostringstream out;
  write_scenario(preset("aircraft"), out, true);
  const std::string text = out.str();
  std::istringstream in(text);
  std::string ln;
  int values = 0;
  int annotated = 0;
  while (std::getline(in, ln)) {
    if (ln.find(": ") == std::string::npos || ln.back() == ':') continue;
    ++values;
    if (ln.find(" # ") != std::string::npos) ++annotated;
  }
  EXPECT_GT(values, 10);
  EXPECT_EQ(values, annotated);
}

TEST(Scenario, OverridesOnPreset) {
  const auto s = parse_scenario("preset: scalar-uniform\nocp:\n  N: 10\ndata:\n  T: 90\n");
  EXPECT_EQ(s.noise.kind, NoiseSpec::Kind::UniformBox);
  EXPECT_EQ(s.ocp.N, 10);
  EXPECT_EQ(s.data.T, 90);
  EXPECT_DOUBLE_EQ(s.ocp.eps_x, 0.2);
}

TEST(Scenario, ErrorsNameLineAndField) {
  try {
    parse_scenario("preset: scalar\nocp:\n  N: -3\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("ocp.N"), std::string::npos) << msg;
  }
  try {
    parse_scenario("preset: scalar\nnoise:\n  kind: cauchy\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("noise.kind"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_scenario("ocp: [1, 2"), ConfigError);
  EXPECT_THROW(parse_scenario("preset: scalar\nsystem:\n  A: [[1, 2]]\n"), ConfigError);
}

}  // namespace
}  // namespace ddspc
