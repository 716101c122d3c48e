#include "blurgeom/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace blurgeom {

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void floats(const std::vector<float>& v) {
    for (float x : v) f32(x);
  }
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint64_t uint(int width, const char* what) {
    need(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(uint(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(uint(4, what)); }
  std::uint64_t u64(const char* what) { return uint(8, what); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::vector<float> floats(std::size_t count, const char* what) {
    if (count > remaining() / 4) need(remaining() + 1, what);
    std::vector<float> v(count);
    for (auto& x : v) x = f32(what);
    return v;
  }
  std::string str(std::size_t len, const char* what) {
    need(len, what);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), len);
    pos_ += len;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t k, const char* what) {
    if (remaining() < k) {
      std::ostringstream os;
      os << "file ends inside " << what << " at byte " << pos_;
      throw Error(ErrorCode::Truncated, os.str());
    }
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void require_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    std::ostringstream os;
    os << what << " has " << got << " entries, expected " << want;
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
}

bool all_finite(const std::vector<float>& v) {
  for (float x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

class Checker {
 public:
  Checker(std::string name, ErrorCode code) {
    r_.name = std::move(name);
    r_.code = code;
  }

  void fail(std::uint64_t offender, const std::string& detail) {
    if (r_.passed) {
      r_.first_offender = offender;
      r_.detail = detail;
    }
    r_.passed = false;
    ++r_.failures;
  }
  CheckResult done() { return std::move(r_); }

 private:
  CheckResult r_;
};

std::string record_str(const RecordOnDisk& r) { return "record " + std::to_string(r.record_id); }

}  // namespace

std::vector<std::uint8_t> serialize(const Dataset& d) {
  const auto& h = d.header;
  const std::size_t n = h.n;
  if (h.flags & ~(kFlagUnembed | kFlagEval)) throw Error(ErrorCode::InvalidArgument, "unknown flag bits");
  require_length(d.probes.size(), h.probe_count, "probe list");
  require_length(d.records.size(), h.record_count, "record list");
  if (h.has_unembed() != !d.unembed.empty() || (!h.has_unembed() && h.vocab_size != 0)) {
    throw Error(ErrorCode::InvalidArgument, "unembedding flag, vocab size and content disagree");
  }
  require_length(d.unembed.size(), static_cast<std::size_t>(h.vocab_size) * n * h.has_unembed(),
                 "unembedding");

  ByteWriter w;
  w.bytes(std::string_view(kMagic, 4));
  w.u16(h.version);
  w.u32(h.n);
  w.u32(h.probe_count);
  w.u32(h.record_count);
  w.u16(h.flags);
  w.u32(h.vocab_size);
  for (const auto& p : d.probes) {
    if (p.label.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "probe label too long");
    require_length(p.w.size(), n, "probe w");
    w.u16(static_cast<std::uint16_t>(p.label.size()));
    w.bytes(p.label);
    w.floats(p.w);
    w.f32(p.b);
    w.f32(p.accuracy);
    w.f32(p.f1);
  }
  w.floats(d.unembed);
  for (const auto& r : d.records) {
    for (const auto* v : {&r.z, &r.v1, &r.v2, &r.y_greedy, &r.y_branch}) require_length(v->size(), n, "record vector");
    w.u64(r.record_id);
    w.u32(r.token1);
    w.u32(r.token2);
    w.f32(r.p1);
    w.f32(r.p2);
    for (const auto* v : {&r.z, &r.v1, &r.v2, &r.y_greedy, &r.y_branch}) w.floats(*v);
    w.u32(static_cast<std::uint32_t>(r.active.size()));
    for (auto id : r.active) w.u32(id);
    if (h.has_eval()) {
      w.f32(r.cp_greedy);
      w.f32(r.cp_branch);
    }
  }
  return w.take();
}

Dataset parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw Error(ErrorCode::MalformedHeader, "file shorter than the header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(ErrorCode::MalformedHeader, "bad magic");
  ByteReader in(bytes.subspan(4));
  Dataset d;
  auto& h = d.header;
  h.version = in.u16("header");
  if (h.version != kFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(h.version));
  }
  h.n = in.u32("header");
  h.probe_count = in.u32("header");
  h.record_count = in.u32("header");
  h.flags = in.u16("header");
  h.vocab_size = in.u32("header");
  if (h.n < kMinDim) throw Error(ErrorCode::MalformedHeader, "n < 4");
  if (h.flags & ~(kFlagUnembed | kFlagEval)) throw Error(ErrorCode::MalformedHeader, "unknown flag bits");
  if (h.has_unembed() != (h.vocab_size != 0)) {
    throw Error(ErrorCode::MalformedHeader, "vocab_size must be nonzero exactly when the unembedding is present");
  }
  const std::size_t n = h.n;

  // Counts are untrusted; grow containers as content arrives.
  for (std::uint32_t i = 0; i < h.probe_count; ++i) {
    ProbeOnDisk p;
    const std::uint16_t len = in.u16("probe label length");
    p.label = in.str(len, "probe label");
    p.w = in.floats(n, "probe w");
    p.b = in.f32("probe bias");
    p.accuracy = in.f32("probe accuracy");
    p.f1 = in.f32("probe f1");
    d.probes.push_back(std::move(p));
  }
  if (h.has_unembed()) d.unembed = in.floats(static_cast<std::size_t>(h.vocab_size) * n, "unembedding");
  for (std::uint32_t i = 0; i < h.record_count; ++i) {
    RecordOnDisk r;
    r.record_id = in.u64("record id");
    r.token1 = in.u32("token1");
    r.token2 = in.u32("token2");
    r.p1 = in.f32("p1");
    r.p2 = in.f32("p2");
    r.z = in.floats(n, "z");
    r.v1 = in.floats(n, "v1");
    r.v2 = in.floats(n, "v2");
    r.y_greedy = in.floats(n, "y_greedy");
    r.y_branch = in.floats(n, "y_branch");
    const std::uint32_t count = in.u32("active count");
    if (static_cast<std::uint64_t>(count) * 4 > in.remaining()) {
      throw Error(ErrorCode::Truncated, "file ends inside active ids");
    }
    r.active.resize(count);
    for (auto& id : r.active) id = in.u32("active ids");
    if (h.has_eval()) {
      r.cp_greedy = in.f32("cp_greedy");
      r.cp_branch = in.f32("cp_branch");
    }
    d.records.push_back(std::move(r));
  }
  if (in.remaining() != 0) {
    throw Error(ErrorCode::TrailingBytes, std::to_string(in.remaining()) + " bytes after the last record");
  }
  return d;
}

bool ValidationReport::ok() const { return first_failure() == nullptr; }

const CheckResult* ValidationReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

const CheckResult& ValidationReport::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw Error(ErrorCode::InvalidArgument, "no check named " + name);
}

ValidationReport check_dataset(const Dataset& d) {
  const auto& h = d.header;
  ValidationReport rep;

  Checker finite("finite_values", ErrorCode::NonFiniteInput);
  Checker znorm("z_norm", ErrorCode::NormError);
  Checker prange("probability_range", ErrorCode::RangeError);
  Checker porder("probability_ordering", ErrorCode::OrderingError);
  Checker tdistinct("token_distinct", ErrorCode::TokenError);
  Checker trange("token_range", ErrorCode::RangeError);
  Checker active("active_ids", ErrorCode::RangeError);
  Checker ids("record_ids_unique", ErrorCode::OrderingError);
  Checker ranking("unembed_ranking", ErrorCode::TokenError);
  std::unordered_set<std::uint64_t> seen;

  const auto unembed = unembed_matrix(d);
  for (const auto& r : d.records) {
    const auto id = r.record_id;
    const bool fin = std::isfinite(r.p1) && std::isfinite(r.p2) && all_finite(r.z) && all_finite(r.v1) &&
                     all_finite(r.v2) && all_finite(r.y_greedy) && all_finite(r.y_branch);
    if (!fin) finite.fail(id, record_str(r) + " has a non-finite value");
    if (fin) {
      const double zn = to_vector(r.z).norm();
      if (!(std::abs(zn - 1.0) <= kZNormTolerance)) {
        znorm.fail(id, record_str(r) + " has |z| = " + std::to_string(zn));
      }
    }
    const double p1 = r.p1, p2 = r.p2;
    if (!(p1 > 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0 && p1 + p2 <= 1.0 + 1e-6)) {
      prange.fail(id, record_str(r) + " has probabilities outside the simplex");
    }
    if (p2 > p1) porder.fail(id, record_str(r) + " has p2 > p1");
    if (r.token1 == r.token2) tdistinct.fail(id, record_str(r) + " has token1 == token2");
    if (h.has_unembed() && (r.token1 >= h.vocab_size || r.token2 >= h.vocab_size)) {
      trange.fail(id, record_str(r) + " has a token outside the vocabulary");
    }
    bool act_ok = r.active.size() < h.probe_count || h.probe_count == 0;
    for (std::size_t i = 0; i < r.active.size() && act_ok; ++i) {
      if (r.active[i] >= h.probe_count || (i > 0 && r.active[i] <= r.active[i - 1])) act_ok = false;
    }
    if (!act_ok) active.fail(id, record_str(r) + " active ids are not a strictly increasing proper subset");
    if (!seen.insert(id).second) ids.fail(id, record_str(r) + " is duplicated");
    if (unembed && fin && r.token1 < h.vocab_size && r.token2 < h.vocab_size && r.token1 != r.token2) {
      const Vector p = softmax_logits(*unembed, to_vector(r.z));
      Vector rest = p;
      const double a = p(r.token1);
      rest(r.token1) = -1.0;
      const double b = p(r.token2);
      rest(r.token2) = -1.0;
      if (a < p.maxCoeff() || b < rest.maxCoeff()) {
        ranking.fail(id, record_str(r) + " tokens are not the top two of softmax(Vz)");
      }
    }
  }

  Checker labels("probe_labels", ErrorCode::LabelGrammar);
  Checker pvec("probe_vectors", ErrorCode::ZeroVector);
  Checker pmetric("probe_metrics", ErrorCode::RangeError);
  std::set<std::string> label_set;
  for (std::size_t i = 0; i < d.probes.size(); ++i) {
    const auto& p = d.probes[i];
    try {
      parse_probe_label(p.label);
      if (!label_set.insert(p.label).second) labels.fail(i, "duplicate label " + p.label);
    } catch (const Error& e) {
      labels.fail(i, e.what());
    }
    if (!all_finite(p.w) || !std::isfinite(p.b)) {
      finite.fail(i, "probe " + std::to_string(i) + " has a non-finite value");
    } else if (to_vector(p.w).norm() == 0.0) {
      pvec.fail(i, "probe " + std::to_string(i) + " has w = 0");
    }
    if (!(p.accuracy >= 0.0f && p.accuracy <= 1.0f && p.f1 >= 0.0f && p.f1 <= 1.0f)) {
      pmetric.fail(i, "probe " + std::to_string(i) + " metrics outside [0, 1]");
    }
  }
  if (!all_finite(d.unembed)) finite.fail(0, "unembedding has a non-finite value");

  for (auto* c : {&finite, &znorm, &prange, &porder, &tdistinct, &trange, &active, &ids, &ranking,
                  &labels, &pvec, &pmetric}) {
    rep.checks.push_back(c->done());
  }
  return rep;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot create " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
}

ValidationReport validate(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return check_dataset(parse(bytes));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Truncated && e.code() != ErrorCode::TrailingBytes) throw;
    ValidationReport rep;
    CheckResult c;
    c.name = "structure";
    c.code = e.code();
    c.passed = false;
    c.failures = 1;
    c.detail = e.what();
    rep.checks.push_back(std::move(c));
    return rep;
  }
}

Dataset read_dataset(const std::filesystem::path& path) {
  Dataset d = parse(read_file(path));
  const auto rep = check_dataset(d);
  if (const auto* f = rep.first_failure()) throw Error(f->code, f->name + ": " + f->detail);
  return d;
}

void write_dataset(const Dataset& d, const std::filesystem::path& path) {
  write_file_atomic(path, serialize(d));
}

Vector to_vector(std::span<const float> v) {
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = v[i];
  return out;
}

std::vector<float> to_floats(const Vector& v) {
  std::vector<float> out(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(v(i));
  return out;
}

std::vector<Probe> load_probes(const Dataset& d) {
  std::vector<Probe> out;
  out.reserve(d.probes.size());
  for (const auto& p : d.probes) out.emplace_back(p.label, to_vector(p.w), p.b, p.accuracy, p.f1);
  return out;
}

std::shared_ptr<const Matrix> unembed_matrix(const Dataset& d) {
  if (!d.header.has_unembed()) return nullptr;
  const Index l = d.header.vocab_size;
  const Index n = d.header.n;
  auto m = std::make_shared<Matrix>(l, n);
  for (Index i = 0; i < l; ++i) {
    for (Index j = 0; j < n; ++j) (*m)(i, j) = d.unembed[static_cast<std::size_t>(i * n + j)];
  }
  return m;
}

BranchGeometry to_geometry(const RecordOnDisk& r, std::shared_ptr<const Matrix> unembed) {
  return BranchGeometry(to_vector(r.z), to_vector(r.v1), to_vector(r.v2), r.p1, r.p2, r.token1, r.token2,
                        std::move(unembed));
}

StatePair to_state_pair(const RecordOnDisk& r) {
  return StatePair{to_vector(r.y_greedy), to_vector(r.y_branch)};
}

std::optional<Evaluation> evaluation(const Dataset& d, const RecordOnDisk& r) {
  if (!d.header.has_eval() || !std::isfinite(r.cp_greedy) || !std::isfinite(r.cp_branch)) return std::nullopt;
  return Evaluation{r.cp_greedy, r.cp_branch};
}

}  // namespace blurgeom
