#include <gtest/gtest.h>

#include <set>

#include "blurgeom/probe.hpp"

using namespace blurgeom;

TEST(Label, ParsesAllFields) {
  const ProbeLabel l = parse_probe_label("mine_pawn_on_a4");
  EXPECT_EQ(l.side, Side::Mine);
  EXPECT_EQ(l.piece, Piece::Pawn);
  EXPECT_EQ(l.file, 0);
  EXPECT_EQ(l.rank, 4);
  EXPECT_EQ(l.str(), "mine_pawn_on_a4");
  const ProbeLabel k = parse_probe_label("yours_knight_on_h8");
  EXPECT_EQ(k.side, Side::Yours);
  EXPECT_EQ(k.piece, Piece::Knight);
  EXPECT_EQ(k.file, 7);
  EXPECT_EQ(k.rank, 8);
}

TEST(Label, RejectsMalformed) {
  for (const char* bad : {"mine_pawn_a4", "ours_pawn_on_a4", "mine_pawn_on_i4", "mine_pawn_on_a9", "mine_pawn_on_a0",
                          "mine_archer_on_a4", "mine_pawn_on_a44", "", "Mine_pawn_on_a4", "mine_pawn_on_A4"}) {
    try {
      parse_probe_label(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::LabelGrammar) << bad;
    }
  }
}

TEST(Enumeration, SevenHundredThirtySevenDistinctLabels) {
  const auto labels = enumerate_probe_labels(737);
  std::set<std::string> seen;
  for (const auto& l : labels) seen.insert(l.str());
  EXPECT_EQ(seen.size(), 737u);
  for (std::size_t i = 0; i < kLegalProbeLabels; ++i) {
    const bool illegal_pawn = labels[i].piece == Piece::Pawn && (labels[i].rank == 1 || labels[i].rank == 8);
    EXPECT_FALSE(illegal_pawn) << labels[i].str();
  }
  EXPECT_EQ(labels[736].piece, Piece::Pawn);
  EXPECT_TRUE(labels[736].rank == 1 || labels[736].rank == 8);
}

TEST(Enumeration, CoversTheWholeFamily) {
  const auto labels = enumerate_probe_labels(kMaxProbeLabels);
  std::set<std::string> seen;
  for (const auto& l : labels) seen.insert(l.str());
  EXPECT_EQ(seen.size(), 768u);
  EXPECT_EQ(labels.front().str(), "mine_pawn_on_a2");
  EXPECT_THROW(enumerate_probe_labels(769), Error);
  EXPECT_TRUE(enumerate_probe_labels(0).empty());
}

TEST(Enumeration, RoundTripsThroughParser) {
  for (const auto& l : enumerate_probe_labels(kMaxProbeLabels)) EXPECT_EQ(parse_probe_label(l.str()), l);
}

TEST(Piece, Values) {
  EXPECT_EQ(piece_value(Piece::Pawn), 1.0);
  EXPECT_EQ(piece_value(Piece::Knight), 3.0);
  EXPECT_EQ(piece_value(Piece::Bishop), 3.5);
  EXPECT_EQ(piece_value(Piece::Rook), 5.0);
  EXPECT_EQ(piece_value(Piece::Queen), 9.0);
  EXPECT_FALSE(piece_value(Piece::King).has_value());
  EXPECT_EQ(file_letter(2), 'c');
}

TEST(Probe, ValidatesInputs) {
  const Vector w = Vector::Ones(4);
  EXPECT_NO_THROW(Probe("mine_king_on_e1", w, 0.1, 0.8, 0.7));
  EXPECT_THROW(Probe("mine_king_on_e1", Vector::Zero(4), 0.1, 0.8, 0.7), Error);
  EXPECT_THROW(Probe("mine_king_on_e1", w, std::nan(""), 0.8, 0.7), Error);
  EXPECT_THROW(Probe("mine_king_on_e1", w, 0.1, 1.5, 0.7), Error);
  EXPECT_THROW(Probe("king_e1", w, 0.1, 0.8, 0.7), Error);
  const Probe p("yours_queen_on_d8", w, 0.5, 0.9, 0.9);
  EXPECT_DOUBLE_EQ(p.evaluate(Vector::Ones(4)), 4.5);
}
