#include <gtest/gtest.h>

#include <set>

#include "blurgeom/holonomy.hpp"
#include "blurgeom/synth.hpp"

using namespace blurgeom;

namespace {

SynthConfig tiny(std::uint64_t seed) {
  SynthConfig c;
  c.seed = seed;
  c.n = 12;
  c.record_count = 30;
  c.probe_count = 737;
  return c;
}

double mean_distance(const Dataset& d) {
  double s = 0.0;
  for (const auto& r : d.records) s += clover_holonomy(to_geometry(r)).H.distance_from_identity();
  return s / static_cast<double>(d.records.size());
}

}  // namespace

TEST(Synth, SameSeedSameBytes) {
  const auto a = serialize(synthesize(tiny(1)).dataset);
  const auto b = serialize(synthesize(tiny(1)).dataset);
  const auto c = serialize(synthesize(tiny(2)).dataset);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(sha256_hex(a), sha256_hex(b));
  EXPECT_EQ(sha256_hex(a).size(), 64u);
}

TEST(Synth, Sha256KnownAnswer) {
  const std::string abc = "abc";
  const std::vector<std::uint8_t> bytes(abc.begin(), abc.end());
  EXPECT_EQ(sha256_hex(bytes), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Synth, OutputValidates) {
  for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
    SynthConfig c = tiny(seed);
    c.planted = PlantedStructure{};
    EXPECT_TRUE(check_dataset(synthesize(c).dataset).ok()) << seed;
  }
}

TEST(Synth, ProbeFamilyHasNoDuplicates) {
  const Dataset d = synthesize(tiny(4)).dataset;
  std::set<std::string> labels;
  for (const auto& p : d.probes) labels.insert(p.label);
  EXPECT_EQ(labels.size(), 737u);
}

TEST(Synth, ConfidentProfileNearlyFlat) {
  SynthConfig loud = tiny(5), quiet = tiny(5);
  loud.blur = BlurProfile::uncertain();
  quiet.blur = BlurProfile::confident();
  const double ratio = mean_distance(synthesize(quiet).dataset) / mean_distance(synthesize(loud).dataset);
  EXPECT_LT(ratio, 1e-4);
}

TEST(Synth, ChargelessProfileHasNoSecondToken) {
  SynthConfig c = tiny(6);
  c.blur = BlurProfile::chargeless();
  for (const auto& r : synthesize(c).dataset.records) EXPECT_EQ(r.p2, 0.0f);
}

TEST(Synth, PlantedMembership) {
  SynthConfig c = tiny(7);
  c.record_count = 100;
  c.planted = PlantedStructure{};
  const SynthResult r = synthesize(c);
  EXPECT_EQ(r.planted.left_ear.size() + r.planted.right_ear.size(), 8u);
  EXPECT_EQ(r.planted.greedy_line.size() + r.planted.branch_line.size(), 16u);
  EXPECT_GT(r.planted.q_scale, 0.0);
  EXPECT_NEAR(r.planted.left_direction.dot(r.planted.line_direction), 0.0, 1e-12);
}

TEST(Synth, NamedProfiles) {
  EXPECT_EQ(BlurProfile::named("uncertain").p1_lo, 0.5);
  EXPECT_THROW(BlurProfile::named("sharp"), Error);
}

TEST(Synth, ConfigValidation) {
  SynthConfig c = tiny(1);
  c.n = 3;
  EXPECT_THROW(synthesize(c), Error);
  c = tiny(1);
  c.probe_count = 800;
  EXPECT_THROW(synthesize(c), Error);
  c = tiny(1);
  c.planted = PlantedStructure{};
  c.planted->ear_fraction = 0.7;
  c.planted->line_fraction = 0.5;
  EXPECT_THROW(synthesize(c), Error);
}

TEST(Synth, SummaryMatchesFile) {
  const auto path = std::filesystem::temp_directory_path() / "blurgeom_unit_synth.bhg";
  const DatasetSummary s = synth(tiny(8), path);
  EXPECT_EQ(s.sha256, sha256_hex(read_file(path)));
  EXPECT_EQ(s.bytes, std::filesystem::file_size(path));
  EXPECT_EQ(s.record_count, 30u);
  EXPECT_GT(s.mean_charge, 0.0);
}
