#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "blurgeom/dataset.hpp"
#include "blurgeom/synth.hpp"
#include "support.hpp"

using namespace blurgeom;
using testing_support::small_dataset;

namespace {

ErrorCode parse_code(const std::vector<std::uint8_t>& bytes) {
  try {
    parse(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

const CheckResult& failed(const Dataset& d, const std::string& name) {
  static ValidationReport keep;
  keep = check_dataset(d);
  const CheckResult& c = keep.check(name);
  EXPECT_FALSE(c.passed) << name;
  EXPECT_EQ(keep.first_failure()->name, name);
  return c;
}

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "blurgeom_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Format, RoundTripIsByteIdentical) {
  const Dataset d = small_dataset();
  const auto bytes = serialize(d);
  EXPECT_EQ(serialize(parse(bytes)), bytes);
  EXPECT_TRUE(check_dataset(parse(bytes)).ok());
}

TEST(Format, RoundTripWithoutEvaluations) {
  Dataset d = small_dataset(5);
  d.header.flags = 0;
  for (auto& r : d.records) r.cp_greedy = r.cp_branch = 0.0f;
  const auto bytes = serialize(d);
  EXPECT_EQ(serialize(parse(bytes)), bytes);
  EXPECT_FALSE(parse(bytes).header.has_eval());
}

TEST(Format, RoundTripWithUnembedding) {
  SynthConfig c;
  c.n = 6;
  c.record_count = 5;
  c.probe_count = 20;
  c.active_min = 2;
  c.active_max = 4;
  c.vocab_size = 30;
  const Dataset d = synthesize(c).dataset;
  ASSERT_TRUE(d.header.has_unembed());
  const auto bytes = serialize(d);
  EXPECT_EQ(serialize(parse(bytes)), bytes);
  EXPECT_TRUE(check_dataset(d).ok());
  EXPECT_EQ(unembed_matrix(d)->rows(), 30);
  Dataset swapped = d;
  std::swap(swapped.records[0].token1, swapped.records[0].token2);
  EXPECT_EQ(check_dataset(swapped).first_failure()->name, "unembed_ranking");
}

TEST(Format, HeaderLayout) {
  const Dataset d = small_dataset();
  const auto b = serialize(d);
  ASSERT_GE(b.size(), kHeaderBytes);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "BHG1");
  EXPECT_EQ(b[4] | (b[5] << 8), kFormatVersion);
  EXPECT_EQ(b[6] | (b[7] << 8), static_cast<int>(d.header.n));
}

TEST(Format, HeaderFaults) {
  const auto good = serialize(small_dataset());
  auto magic = good;
  magic[0] ^= 0xff;
  EXPECT_EQ(parse_code(magic), ErrorCode::MalformedHeader);
  auto version = good;
  version[4] = 9;
  EXPECT_EQ(parse_code(version), ErrorCode::UnsupportedVersion);
  auto small_n = good;
  small_n[6] = 3;
  small_n[7] = small_n[8] = small_n[9] = 0;
  EXPECT_EQ(parse_code(small_n), ErrorCode::MalformedHeader);
  auto flags = good;
  flags[18] |= 0x80;
  EXPECT_EQ(parse_code(flags), ErrorCode::MalformedHeader);
  EXPECT_EQ(parse_code(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)), ErrorCode::MalformedHeader);
}

TEST(Format, TruncationAndTrailingBytes) {
  const auto good = serialize(small_dataset());
  EXPECT_EQ(parse_code(std::vector<std::uint8_t>(good.begin(), good.end() - 3)), ErrorCode::Truncated);
  auto longer = good;
  longer.push_back(0);
  EXPECT_EQ(parse_code(longer), ErrorCode::TrailingBytes);
  auto huge = good;
  huge[14] = huge[15] = huge[16] = huge[17] = 0xff;
  EXPECT_EQ(parse_code(huge), ErrorCode::Truncated);
}

TEST(Validate, OrderingFaultNamesTheRecord) {
  Dataset d = small_dataset();
  d.records[4].p1 = 0.3f;
  d.records[4].p2 = 0.4f;
  const CheckResult& c = failed(d, "probability_ordering");
  EXPECT_EQ(c.code, ErrorCode::OrderingError);
  ASSERT_TRUE(c.first_offender.has_value());
  EXPECT_EQ(*c.first_offender, d.records[4].record_id);
  EXPECT_EQ(c.failures, 1u);
}

TEST(Validate, EachFaultClassHasItsOwnCheck) {
  const Dataset base = small_dataset();
  std::set<std::string> names;
  const auto expect = [&](const std::string& name, ErrorCode code, auto mutate) {
    Dataset d = base;
    mutate(d);
    const CheckResult& c = failed(d, name);
    EXPECT_EQ(c.code, code) << name;
    names.insert(name);
  };
  expect("finite_values", ErrorCode::NonFiniteInput, [](Dataset& d) { d.records[1].v1[0] = std::nanf(""); });
  expect("z_norm", ErrorCode::NormError, [](Dataset& d) {
    for (auto& x : d.records[2].z) x *= 1.5f;
  });
  expect("probability_range", ErrorCode::RangeError, [](Dataset& d) { d.records[0].p1 = 1.5f; });
  expect("token_distinct", ErrorCode::TokenError, [](Dataset& d) { d.records[3].token2 = d.records[3].token1; });
  expect("active_ids", ErrorCode::RangeError, [](Dataset& d) { d.records[0].active.back() = d.header.probe_count; });
  expect("active_ids", ErrorCode::RangeError, [](Dataset& d) {
    auto& a = d.records[0].active;
    std::swap(a.front(), a.back());
  });
  expect("record_ids_unique", ErrorCode::OrderingError, [](Dataset& d) { d.records[5].record_id = d.records[2].record_id; });
  expect("probe_labels", ErrorCode::LabelGrammar, [](Dataset& d) { d.probes[3].label = "mine_pawn_on_z9"; });
  expect("probe_labels", ErrorCode::LabelGrammar, [](Dataset& d) { d.probes[3].label = d.probes[2].label; });
  expect("probe_vectors", ErrorCode::ZeroVector, [](Dataset& d) {
    for (auto& x : d.probes[1].w) x = 0.0f;
  });
  expect("probe_metrics", ErrorCode::RangeError, [](Dataset& d) { d.probes[0].f1 = 2.0f; });
  EXPECT_EQ(names.size(), 9u);
}

TEST(Validate, FileLevelReport) {
  const auto path = temp_path("valid.bhg");
  write_dataset(small_dataset(), path);
  EXPECT_TRUE(validate(path).ok());
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));

  auto bytes = read_file(path);
  bytes.resize(bytes.size() - 5);
  const auto cut = temp_path("cut.bhg");
  write_file_atomic(cut, bytes);
  const ValidationReport r = validate(cut);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.first_failure()->name, "structure");
  EXPECT_EQ(r.first_failure()->code, ErrorCode::Truncated);
  EXPECT_THROW(read_dataset(cut), Error);

  try {
    validate(temp_path("missing.bhg"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(Load, ConvertsRecordsToGeometry) {
  const Dataset d = small_dataset();
  const auto& r = d.records.front();
  const BranchGeometry g = to_geometry(r);
  EXPECT_NEAR(g.p1(), r.p1, 0.0);
  EXPECT_NEAR(g.z().data().norm(), 1.0, 1e-15);
  const StatePair y = to_state_pair(r);
  EXPECT_EQ(y.y_greedy.size(), static_cast<Index>(d.header.n));
  EXPECT_EQ(load_probes(d).size(), d.probes.size());
  EXPECT_EQ(unembed_matrix(d), nullptr);
}

TEST(Load, EvaluationPresence) {
  Dataset d = small_dataset();
  ASSERT_TRUE(d.header.has_eval());
  d.records[0].cp_greedy = 12.0f;
  d.records[0].cp_branch = -3.0f;
  d.records[1].cp_branch = std::nanf("");
  const auto e = evaluation(d, d.records[0]);
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(e->cp_branch, -3.0);
  EXPECT_FALSE(evaluation(d, d.records[1]).has_value());
}

TEST(Serialize, RejectsInconsistentContent) {
  Dataset d = small_dataset();
  d.records[0].y_branch.pop_back();
  EXPECT_THROW(serialize(d), Error);
  Dataset e = small_dataset();
  e.header.record_count += 1;
  EXPECT_THROW(serialize(e), Error);
}
