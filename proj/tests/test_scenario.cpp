#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "dynamb/error.hpp"
#include "dynamb/scenario.hpp"

using namespace dynamb;

namespace {

const std::string kConfigDir = DYNAMB_CONFIG_DIR;

Json toy_doc() { return read_json_file(kConfigDir + "/toy2.json"); }

std::string config_error(const Json& doc) {
  try {
    parse_study(doc);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    return e.what();
  }
  ADD_FAILURE() << "expected a config error";
  return "";
}

}  // namespace

TEST(Config, ShippedStudiesLoad) {
  const StudyConfig toy = load_study(kConfigDir + "/toy2.json");
  EXPECT_EQ(toy.scenario.sys.d(), 2);
  EXPECT_EQ(toy.scenario.sys.q(), 2);
  EXPECT_EQ(toy.coverage.N, 20);
  EXPECT_EQ(toy.coverage.trials, 200);
  EXPECT_FALSE(toy.dispatch.has_value());
  EXPECT_DOUBLE_EQ(toy.scenario.noise.rho_xi0, 1.0);
  EXPECT_DOUBLE_EQ(toy.scenario.noise.rho_w, 0.02);

  const StudyConfig bat = load_study(kConfigDir + "/battery.json");
  EXPECT_EQ(bat.scenario.sys.d(), 6);
  EXPECT_EQ(bat.scenario.sys.r(), 3);
  EXPECT_EQ(bat.scenario.cells.size(), 3u);
  ASSERT_TRUE(bat.dispatch.has_value());
  EXPECT_EQ(bat.dispatch->N.size(), bat.dispatch->radii.size());
  // Initial box is 0.2 x 0.45 per cell; the half-diameter takes the wider side.
  EXPECT_NEAR(bat.scenario.noise.rho_xi0, 0.225, 1e-12);
}

TEST(Config, UnknownKeyNamesItsPath) {
  Json doc = toy_doc();
  doc["coverage"]["trails"] = 5;
  const std::string msg = config_error(doc);
  EXPECT_NE(msg.find("coverage"), std::string::npos) << msg;
  EXPECT_NE(msg.find("trails"), std::string::npos) << msg;

  Json top = toy_doc();
  top["extra"] = 1;
  EXPECT_NE(config_error(top).find("extra"), std::string::npos);
}

TEST(Config, MissingAndMistypedKeys) {
  Json doc = toy_doc();
  doc.erase("ell");
  EXPECT_NE(config_error(doc).find("ell"), std::string::npos);

  Json typed = toy_doc();
  typed["p"] = "two";
  EXPECT_NE(config_error(typed).find("p"), std::string::npos);

  Json both = toy_doc();
  both["cells"] = Json::object();
  config_error(both);
}

TEST(Config, LawOutsideSupportRejected) {
  Json doc = toy_doc();
  doc["initial"]["support"]["hi"] = Json::array({0.5, 1.0});
  EXPECT_NE(config_error(doc).find("initial"), std::string::npos);
}

TEST(Config, ProcessNoiseRequiredWhenGHasColumns) {
  Json doc = toy_doc();
  doc.erase("process_noise");
  EXPECT_NE(config_error(doc).find("process_noise"), std::string::npos);
}

TEST(Config, OverridesApplyBeforeParsing) {
  Json doc = toy_doc();
  apply_override(doc, "coverage.N=7");
  apply_override(doc, "radius.split=equal");
  apply_override(doc, "name=renamed");
  const StudyConfig cfg = parse_study(doc);
  EXPECT_EQ(cfg.coverage.N, 7);
  EXPECT_EQ(cfg.scenario.split, SplitPolicy::Equal);
  EXPECT_EQ(cfg.name, "renamed");
  EXPECT_THROW(apply_override(doc, "noequals"), Error);
  EXPECT_THROW(apply_override(doc, "a..b=1"), Error);
  // A typo in an override path is still caught by strict parsing.
  Json typo = toy_doc();
  apply_override(typo, "coverage.trails=3");
  config_error(typo);
}

TEST(Config, SyntaxErrorReportsLineAndColumn) {
  const std::string path = testing::TempDir() + "broken.json";
  {
    std::ofstream out(path);
    out << "{\n  \"name\": \"x\",\n  \"ell\": ,\n}\n";
  }
  try {
    read_json_file(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  std::remove(path.c_str());
  EXPECT_THROW(read_json_file(path), Error);
}
