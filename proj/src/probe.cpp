#include "blurgeom/probe.hpp"

#include <array>
#include <cmath>

namespace blurgeom {

namespace {

constexpr std::array<std::string_view, kSideCount> kSideNames{"mine", "yours"};
constexpr std::array<std::string_view, kPieceCount> kPieceNames{"pawn", "knight", "bishop",
                                                                 "rook", "queen",  "king"};

[[noreturn]] void bad_label(std::string_view label) {
  throw Error(ErrorCode::LabelGrammar, "bad probe label '" + std::string(label) + "'");
}

bool consume(std::string_view& s, std::string_view prefix) {
  if (!s.starts_with(prefix)) return false;
  s.remove_prefix(prefix.size());
  return true;
}

}  // namespace

std::string_view to_string(Side s) { return kSideNames[static_cast<int>(s)]; }
std::string_view to_string(Piece p) { return kPieceNames[static_cast<int>(p)]; }
char file_letter(int file) { return static_cast<char>('a' + file); }

std::string ProbeLabel::str() const {
  std::string out;
  out += to_string(side);
  out += '_';
  out += to_string(piece);
  out += "_on_";
  out += file_letter(file);
  out += static_cast<char>('0' + rank);
  return out;
}

ProbeLabel parse_probe_label(std::string_view label) {
  std::string_view s = label;
  ProbeLabel out{};
  bool ok = false;
  for (int i = 0; i < kSideCount && !ok; ++i) {
    if (consume(s, kSideNames[i]) && consume(s, "_")) {
      out.side = static_cast<Side>(i);
      ok = true;
    } else {
      s = label;
    }
  }
  if (!ok) bad_label(label);
  const std::string_view after_side = s;
  ok = false;
  for (int i = 0; i < kPieceCount && !ok; ++i) {
    if (consume(s, kPieceNames[i]) && consume(s, "_on_")) {
      out.piece = static_cast<Piece>(i);
      ok = true;
    } else {
      s = after_side;
    }
  }
  if (!ok || s.size() != 2) bad_label(label);
  if (s[0] < 'a' || s[0] > 'h' || s[1] < '1' || s[1] > '8') bad_label(label);
  out.file = s[0] - 'a';
  out.rank = s[1] - '0';
  return out;
}

std::optional<double> piece_value(Piece p) {
  switch (p) {
    case Piece::Pawn: return 1.0;
    case Piece::Knight: return 3.0;
    case Piece::Bishop: return 3.5;
    case Piece::Rook: return 5.0;
    case Piece::Queen: return 9.0;
    case Piece::King: return std::nullopt;
  }
  return std::nullopt;
}

std::vector<ProbeLabel> enumerate_probe_labels(std::size_t count) {
  if (count > kMaxProbeLabels) {
    throw Error(ErrorCode::RangeError, "at most 768 distinct probe labels exist");
  }
  std::vector<ProbeLabel> legal;
  std::vector<ProbeLabel> extra;
  legal.reserve(kLegalProbeLabels);
  for (int s = 0; s < kSideCount; ++s) {
    for (int p = 0; p < kPieceCount; ++p) {
      for (int f = 0; f < kFileCount; ++f) {
        for (int r = 1; r <= 8; ++r) {
          ProbeLabel l{static_cast<Side>(s), static_cast<Piece>(p), f, r};
          const bool pawn_edge = l.piece == Piece::Pawn && (r == 1 || r == 8);
          (pawn_edge ? extra : legal).push_back(l);
        }
      }
    }
  }
  legal.insert(legal.end(), extra.begin(), extra.end());
  legal.resize(count);
  return legal;
}

Probe::Probe(std::string label, Vector w, double b, double accuracy, double f1)
    : label_(std::move(label)),
      parsed_(parse_probe_label(label_)),
      w_(std::move(w)),
      b_(b),
      accuracy_(accuracy),
      f1_(f1) {
  require_finite(w_, "probe world vector");
  if (!std::isfinite(b_)) throw Error(ErrorCode::NonFiniteInput, "probe bias");
  if (w_.norm() == 0.0) throw Error(ErrorCode::ZeroVector, "probe " + label_ + " has w = 0");
  if (!(accuracy_ >= 0.0 && accuracy_ <= 1.0) || !(f1_ >= 0.0 && f1_ <= 1.0)) {
    throw Error(ErrorCode::RangeError, "probe " + label_ + " metrics outside [0, 1]");
  }
}

}  // namespace blurgeom
