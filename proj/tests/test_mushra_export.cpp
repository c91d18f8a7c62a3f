#include <gtest/gtest.h>

#include <fstream>

#include "aero/mushra_export.hpp"
#include "aero/resample.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace aero;
using aero::testing::temp_dir;
using nlohmann::json;

namespace {

json valid_manifest() {
  return json::parse(R"({
    "scale": "0-100",
    "items": [
      {"id": "p360_001", "reference": "audio/p360_001/reference.wav", "anchor": "audio/p360_001/anchor.wav",
       "systems": [{"name": "aero", "path": "audio/p360_001/aero.wav"},
                   {"name": "sinc", "path": "audio/p360_001/sinc.wav"}]}
    ]
  })");
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(SessionManifest, JsonRoundTrip) {
  auto m = mushra::session_manifest_from_json(valid_manifest());
  ASSERT_EQ(m.items.size(), 1u);
  EXPECT_EQ(m.items[0].systems[1].name, "sinc");
  EXPECT_EQ(mushra::session_manifest_from_json(mushra::to_json(m)), m);
  EXPECT_TRUE(mushra::validate_session_manifest(mushra::to_json(m)).empty());
}

TEST(SessionManifest, SchemaViolationsAreListed) {
  auto j = valid_manifest();
  j["items"][0].erase("anchor");
  j["items"][0]["systems"][1]["name"] = "has space";
  j["extra"] = 1;
  const auto errors = mushra::validate_session_manifest(j);
  EXPECT_TRUE(any_contains(errors, "missing 'anchor'"));
  EXPECT_TRUE(any_contains(errors, "systems[1].name"));
  EXPECT_TRUE(any_contains(errors, "extra"));
  EXPECT_THROW(mushra::session_manifest_from_json(j), std::invalid_argument);

  auto dup = valid_manifest();
  dup["items"].push_back(dup["items"][0]);
  EXPECT_TRUE(any_contains(mushra::validate_session_manifest(dup), "duplicate id"));

  auto empty = valid_manifest();
  empty["items"][0]["systems"] = json::array();
  EXPECT_FALSE(mushra::validate_session_manifest(empty).empty());

  auto scale = valid_manifest();
  scale["scale"] = "1-5";
  EXPECT_FALSE(mushra::validate_session_manifest(scale).empty());
}

TEST(SessionManifest, MissingFilesReportedWithBaseDir) {
  const auto dir = temp_dir("mushra_files");
  const auto errors = mushra::validate_session_manifest(valid_manifest(), dir);
  EXPECT_EQ(errors.size(), 4u);
  EXPECT_TRUE(any_contains(errors, "anchor"));
  std::filesystem::remove_all(dir);
}

TEST(SessionManifest, ShippedSchemaMatchesEmbedded) {
  std::ifstream in(std::filesystem::path(AERO_SOURCE_DIR) / "schema" / "session_manifest.schema.json");
  ASSERT_TRUE(in.good());
  EXPECT_EQ(json::parse(in), mushra::session_manifest_schema());
}

TEST(MushraExport, WritesStimuliAndManifest) {
  const auto dir = temp_dir("mushra_export");
  for (const auto* sub : {"ref", "aero", "sinc"}) std::filesystem::create_directories(dir / sub / "spk");
  for (int i = 0; i < 2; ++i) {
    const auto name = std::filesystem::path("spk") / ("utt " + std::to_string(i) + ".wav");
    auto ref = aero::testing::noise(16000, 16000, 10 + i);
    dsp::write_wav(dir / "ref" / name, ref);
    dsp::write_wav(dir / "aero" / name, aero::testing::noise(16000, 16000, 20 + i));
    auto shorter = aero::testing::noise(16000, 15990, 30 + i);
    dsp::write_wav(dir / "sinc" / name, shorter);
  }
  mushra::ExportRequest req{dir / "ref", {{"aero", dir / "aero"}, {"sinc", dir / "sinc"}}, dir / "out"};
  const auto m = mushra::mushra_export(req);
  ASSERT_EQ(m.items.size(), 2u);
  EXPECT_EQ(m.items[0].id, "spk_utt_0");
  EXPECT_EQ(m.items[0].systems.size(), 2u);

  std::ifstream in(dir / "out" / "session.json");
  const auto j = json::parse(in);
  EXPECT_TRUE(mushra::validate_session_manifest(j, dir / "out").empty());
  EXPECT_EQ(mushra::session_manifest_from_json(j), m);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "session.schema.json"));

  // Stimuli share the reference length; the anchor is band-limited.
  const auto ref = dsp::read_wav(dir / "out" / m.items[0].reference);
  const auto sinc = dsp::read_wav(dir / "out" / m.items[0].systems[1].path);
  EXPECT_EQ(sinc.size(), ref.size());
  const auto anchor = dsp::read_wav(dir / "out" / m.items[0].anchor);
  EXPECT_EQ(anchor.size(), ref.size());
  const auto tone = dsp::lowpass_filter(aero::testing::sine(6000, 16000, 16000), 3500);
  EXPECT_LT(aero::testing::tone_amplitude(tone.samples, 6000, 16000), 0.01 * 0.5);
  std::filesystem::remove_all(dir);
}

TEST(MushraExport, MissingSystemOutputFails) {
  const auto dir = temp_dir("mushra_missing");
  std::filesystem::create_directories(dir / "ref");
  std::filesystem::create_directories(dir / "aero");
  dsp::write_wav(dir / "ref" / "a.wav", aero::testing::noise(16000, 1600, 1));
  dsp::write_wav(dir / "ref" / "b.wav", aero::testing::noise(16000, 1600, 2));
  dsp::write_wav(dir / "aero" / "a.wav", aero::testing::noise(16000, 1600, 3));
  mushra::ExportRequest req{dir / "ref", {{"aero", dir / "aero"}}, dir / "out"};
  try {
    mushra::mushra_export(req);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("b.wav"), std::string::npos) << e.what();
  }
  req.systems = {{"reference", dir / "aero"}};
  EXPECT_THROW(mushra::mushra_export(req), std::invalid_argument);
  std::filesystem::remove_all(dir);
}
