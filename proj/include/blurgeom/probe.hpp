#pragma once

// Linear board-state probes l(x) = w.x + b with chess-square labels of the
// form (mine|yours)_(piece)_on_(file)(rank).

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blurgeom/linalg.hpp"

namespace blurgeom {

enum class Side { Mine, Yours };
enum class Piece { Pawn, Knight, Bishop, Rook, Queen, King };

inline constexpr int kSideCount = 2;
inline constexpr int kPieceCount = 6;
inline constexpr int kFileCount = 8;
/// Every syntactically valid label, legal squares first.
inline constexpr std::size_t kMaxProbeLabels = 768;
/// Labels that can be true in a legal position (no pawns on ranks 1 and 8).
inline constexpr std::size_t kLegalProbeLabels = 736;

struct ProbeLabel {
  Side side;
  Piece piece;
  int file;  ///< 0 = a ... 7 = h
  int rank;  ///< 1 ... 8

  std::string str() const;
  friend bool operator==(const ProbeLabel&, const ProbeLabel&) = default;
};

/// Throws LabelGrammar.
ProbeLabel parse_probe_label(std::string_view label);

std::string_view to_string(Side s);
std::string_view to_string(Piece p);
char file_letter(int file);

/// Piece value in pawns (bishop 3.5); nullopt for the king.
std::optional<double> piece_value(Piece p);

/// The first `count` labels of the canonical enumeration: mine before
/// yours, pieces pawn..king, files a..h, ranks 1..8, with the 32 pawn labels
/// on ranks 1 and 8 appended after the 736 legal ones. Throws RangeError for
/// count > 768.
std::vector<ProbeLabel> enumerate_probe_labels(std::size_t count);

class Probe {
 public:
  /// Throws LabelGrammar, ZeroVector (w = 0), NonFiniteInput or RangeError
  /// (accuracy or f1 outside [0, 1]).
  Probe(std::string label, Vector w, double b, double accuracy, double f1);

  const std::string& label() const { return label_; }
  const ProbeLabel& parsed() const { return parsed_; }
  const Vector& w() const { return w_; }
  double b() const { return b_; }
  double accuracy() const { return accuracy_; }
  double f1() const { return f1_; }

  double evaluate(const Vector& x) const { return w_.dot(x) + b_; }

 private:
  std::string label_;
  ProbeLabel parsed_;
  Vector w_;
  double b_;
  double accuracy_;
  double f1_;
};

}  // namespace blurgeom
