#include "blurgeom/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <openssl/evp.h>

#include "blurgeom/holonomy.hpp"
#include "blurgeom/stats.hpp"

namespace blurgeom {

BlurProfile BlurProfile::uncertain() { return {0.5, 0.5, 0.8, 1.0}; }
BlurProfile BlurProfile::confident() { return {0.999, 0.999, 0.001, 0.01}; }
BlurProfile BlurProfile::chargeless() { return {0.5, 0.9, 0.0, 0.0}; }

BlurProfile BlurProfile::named(std::string_view name) {
  if (name == "default") return BlurProfile{};
  if (name == "uncertain") return uncertain();
  if (name == "confident") return confident();
  if (name == "chargeless") return chargeless();
  throw Error(ErrorCode::InvalidArgument, "unknown blur profile '" + std::string(name) + "'");
}

void SynthConfig::validate() const {
  const auto bad = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (n < kMinDim) bad("n must be at least 4");
  if (probe_count > kMaxProbeLabels) bad("probe_count above 768");
  if (!(blur.p1_lo > 0.0 && blur.p1_lo <= blur.p1_hi && blur.p1_hi <= 1.0)) bad("p1 range");
  if (!(blur.ratio_lo >= 0.0 && blur.ratio_lo <= blur.ratio_hi && blur.ratio_hi <= 1.0)) bad("ratio range");
  if (!(z_cosine_lo >= 0.0 && z_cosine_lo <= z_cosine_hi && z_cosine_hi < 1.0)) bad("z cosine range");
  if (active_min > active_max) bad("active_min > active_max");
  if (!(support_weight >= 0.0)) bad("support_weight");
  if (!(eval_missing_fraction >= 0.0 && eval_missing_fraction <= 1.0)) bad("eval_missing_fraction");
  if (!(log_cp_std >= 0.0)) bad("log_cp_std");
  if (!(epsilon > 0.0 && epsilon <= 0.1)) bad("epsilon");
  if (vocab_size == 1) bad("vocab_size must be 0 or at least 2");
  if (planted) {
    const auto& p = *planted;
    if (!(p.ear_fraction >= 0.0 && p.ear_fraction <= 1.0)) bad("ear_fraction");
    if (!(p.line_fraction >= 0.0 && p.line_fraction <= 1.0)) bad("line_fraction");
    if (p.ear_fraction + p.line_fraction > 1.0) bad("ear_fraction + line_fraction > 1");
    if (!(p.ear_radius > 0.0 && p.line_extent > 0.0 && p.line_offset >= 0.0)) bad("planted sizes");
    if (!(p.probe_alignment >= 0.0)) bad("probe_alignment");
  }
}

namespace {

using Rng = boost::random::mt19937_64;

enum Stream : std::uint32_t { kGeometry = 1, kProbability, kState, kProbe, kActive, kEval, kPlant, kUnembed, kToken };

Rng stream(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s)};
  std::array<std::uint32_t, 2> w{};
  seq.generate(w.begin(), w.end());
  return Rng((static_cast<std::uint64_t>(w[0]) << 32) | w[1]);
}

double normal(Rng& r, double sd = 1.0) { return boost::random::normal_distribution<double>(0.0, sd)(r); }
double uniform(Rng& r, double lo, double hi) {
  return lo == hi ? lo : boost::random::uniform_real_distribution<double>(lo, hi)(r);
}
std::uint32_t uniform_int(Rng& r, std::uint32_t lo, std::uint32_t hi) {
  return boost::random::uniform_int_distribution<std::uint32_t>(lo, hi)(r);
}

Vector gaussian(Rng& r, Index n, double sd = 1.0) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(r, sd);
  return v;
}

void fix_sign(Vector& v) {
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0.0) v = -v;
}

/// Random unit vector orthogonal to `against`; a nonnegative `lead` puts a
/// clearly dominant entry at that coordinate, so the PCA sign convention
/// recovers the vector with a stable sign.
Vector unit_orthogonal(Rng& r, Index n, std::initializer_list<const Vector*> against, Index lead = -1) {
  for (;;) {
    Vector g = gaussian(r, n);
    if (lead >= 0) g(lead) += std::sqrt(static_cast<double>(n));
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector* a : against) g -= g.dot(*a) * *a;
    }
    const double nn = g.norm();
    if (nn > 1e-6) return g / nn;
  }
}

void reflect(Vector& x, const Vector& u) {
  const double uu = u.squaredNorm();
  if (uu > 1e-24) x -= (2.0 * u.dot(x) / uu) * u;
}

struct Geometry {
  Vector z, v1, v2;
  double p1 = 0.0, p2 = 0.0;
};

std::optional<SkewOperator> curvature_of(const Geometry& g, double epsilon) {
  try {
    BranchGeometry bg(g.z, g.v1, g.v2, g.p1, g.p2, 0, 1);
    return curvature_closed_form(bg, select_plane(bg), epsilon, epsilon);
  } catch (const Error&) {
    return std::nullopt;
  }
}

enum class Role { Bulk, LeftEar, RightEar, GreedyLine, BranchLine };

struct Plant {
  Role role = Role::Bulk;
  Vector target;      // unit direction of the planted q
  double size = 0.0;  // |q| in units of the bulk scale
};

}  // namespace

SynthResult synthesize(const SynthConfig& c) {
  c.validate();
  const Index n = c.n;
  const std::size_t count = c.record_count;
  Rng geo = stream(c.seed, kGeometry);
  Rng prob = stream(c.seed, kProbability);
  Rng state = stream(c.seed, kState);
  Rng prng = stream(c.seed, kProbe);
  Rng act = stream(c.seed, kActive);
  Rng ev = stream(c.seed, kEval);
  Rng plant = stream(c.seed, kPlant);
  Rng unemb = stream(c.seed, kUnembed);
  Rng tok = stream(c.seed, kToken);

  SynthResult out;
  PlantedMembers& pm = out.planted;

  // Global frame of the planted structure.
  Vector ea = unit_orthogonal(plant, n, {}, 0);
  Vector eb = unit_orthogonal(plant, n, {&ea}, 1);
  Vector ec = unit_orthogonal(plant, n, {&ea, &eb}, 2);
  fix_sign(ea);
  fix_sign(eb);
  fix_sign(ec);
  pm.left_direction = (-0.8 * ea + 0.6 * eb).normalized();
  pm.right_direction = (0.8 * ea + 0.6 * eb).normalized();
  pm.line_direction = ec;

  std::vector<Geometry> geom(count);
  for (auto& g : geom) {
    g.z = gaussian(geo, n).normalized();
    for (Vector* v : {&g.v1, &g.v2}) {
      const double cz = uniform(geo, c.z_cosine_lo, c.z_cosine_hi);
      const Vector t = unit_orthogonal(geo, n, {&g.z});
      *v = (cz * g.z + std::sqrt(1.0 - cz * cz) * t) * uniform(geo, 0.9, 1.1);
    }
    g.p1 = uniform(prob, c.blur.p1_lo, c.blur.p1_hi);
    g.p2 = std::min(g.p1, (1.0 - g.p1) * uniform(prob, c.blur.ratio_lo, c.blur.ratio_hi));
  }

  std::vector<Plant> plants(count);
  std::vector<std::optional<SkewOperator>> curv(count);
  if (c.planted) {
    const auto& ps = *c.planted;
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    for (std::size_t i = count; i > 1; --i) {
      std::swap(order[i - 1], order[uniform_int(plant, 0, static_cast<std::uint32_t>(i - 1))]);
    }
    const auto k_ear = static_cast<std::size_t>(std::lround(ps.ear_fraction * static_cast<double>(count)));
    const auto k_line = static_cast<std::size_t>(std::lround(ps.line_fraction * static_cast<double>(count)));
    for (std::size_t j = 0; j < std::min(count, k_ear + k_line); ++j) {
      Plant& p = plants[order[j]];
      if (j < k_ear) {
        p.role = j % 2 == 0 ? Role::LeftEar : Role::RightEar;
        const Vector& d = p.role == Role::LeftEar ? pm.left_direction : pm.right_direction;
        p.target = d + 0.05 * (normal(plant) * ea + normal(plant) * eb);
        p.size = ps.ear_radius * uniform(plant, 0.9, 1.1);
      } else {
        p.role = j - k_ear < k_line / 2 ? Role::GreedyLine : Role::BranchLine;
        const double side = p.role == Role::GreedyLine ? 1.0 : -1.0;
        p.target = ps.line_extent * uniform(plant, -1.0, 1.0) * ec + side * ps.line_offset * ea;
        p.size = p.target.norm();
      }
      p.target.normalize();
    }

    // Rotate each planted geometry so that its curvature plane contains the
    // target direction: a -> target, b -> a random direction orthogonal to it.
    for (std::size_t i = 0; i < count; ++i) {
      Plant& p = plants[i];
      if (p.role == Role::Bulk) continue;
      const auto h = curvature_of(geom[i], c.epsilon);
      const Vector r0 = gaussian(plant, n);
      if (!h || h->norm() == 0.0) {
        p.role = Role::Bulk;
        continue;
      }
      const Vector b = h->apply(r0).normalized();
      const Vector a = h->apply(b).normalized();
      const Vector u1 = a - p.target;
      Vector b1 = b;
      reflect(b1, u1);
      const Vector b2 = unit_orthogonal(plant, n, {&p.target});
      const Vector u2 = b1 - b2;
      for (Vector* v : {&geom[i].z, &geom[i].v1, &geom[i].v2}) {
        reflect(*v, u1);
        reflect(*v, u2);
      }
      geom[i].z.normalize();
    }
  }

  // Bulk states: a support-subspace part plus an isotropic part.
  std::vector<Vector> yg(count), yb(count);
  std::vector<Basis> support(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::array<Vector, 3> span{geom[i].z, geom[i].v1, geom[i].v2};
    support[i] = orthonormal_basis(span);
    for (Vector* y : {&yg[i], &yb[i]}) {
      const Index k = support[i]->cols();
      *y = c.support_weight * (*support[i] * gaussian(state, k, 1.0 / std::sqrt(static_cast<double>(k)))) +
           gaussian(state, n, 1.0 / std::sqrt(static_cast<double>(n)));
    }
  }

  if (c.planted) {
    std::vector<double> qn;
    for (std::size_t i = 0; i < count; ++i) {
      curv[i] = curvature_of(geom[i], c.epsilon);
      if (!curv[i]) continue;
      if (plants[i].role != Role::GreedyLine) qn.push_back(curv[i]->apply(yg[i]).norm());
      if (plants[i].role == Role::Bulk || plants[i].role == Role::GreedyLine) {
        qn.push_back(curv[i]->apply(yb[i]).norm());
      }
    }
    pm.q_scale = qn.empty() ? 0.0 : quantile(qn, 0.5);

    for (std::size_t i = 0; i < count; ++i) {
      const Plant& p = plants[i];
      if (p.role == Role::Bulk) continue;
      const SkewOperator& h = *curv[i];
      const Vector ht = h.apply(p.target);
      const double theta = ht.norm();
      if (theta == 0.0 || pm.q_scale == 0.0) continue;
      // h beta = theta * target for beta = -h target / theta.
      const Vector beta = -ht / theta;
      const Matrix& bs = *support[i];
      Vector kernel = Vector::Zero(n);
      for (Index j = 0; j < bs.cols(); ++j) {
        Vector col = bs.col(j);
        col -= col.dot(p.target) * p.target + col.dot(beta) * beta;
        if (col.norm() > kernel.norm()) kernel = col;
      }
      if (kernel.norm() > 1e-8) kernel.normalize();
      Vector omega = gaussian(state, n, 1.0 / std::sqrt(static_cast<double>(n)));
      omega -= bs * (bs.transpose() * omega);
      const double kappa = normal(state, c.support_weight / std::sqrt(3.0));
      const Vector y = (p.size * pm.q_scale / theta) * beta + kappa * kernel + omega;
      const bool greedy = p.role == Role::GreedyLine;
      (greedy ? yg[i] : yb[i]) = y;
      // Keep the companion continuation off the target: h y . target = theta y . beta.
      Vector& other = greedy ? yb[i] : yg[i];
      other -= other.dot(beta) * beta;
      switch (p.role) {
        case Role::LeftEar: pm.left_ear.push_back(i); break;
        case Role::RightEar: pm.right_ear.push_back(i); break;
        case Role::GreedyLine: pm.greedy_line.push_back(i); break;
        case Role::BranchLine: pm.branch_line.push_back(i); break;
        case Role::Bulk: break;
      }
    }
  }

  Dataset& d = out.dataset;
  d.header.n = c.n;
  d.header.probe_count = c.probe_count;
  d.header.record_count = c.record_count;
  d.header.flags = static_cast<std::uint16_t>((c.with_eval ? kFlagEval : 0) | (c.vocab_size ? kFlagUnembed : 0));
  d.header.vocab_size = c.vocab_size;

  const auto labels = enumerate_probe_labels(c.probe_count);
  for (const auto& l : labels) {
    Vector w = gaussian(prng, n, 1.0 / std::sqrt(static_cast<double>(n)));
    if (c.planted && l.file == 2) w += c.planted->probe_alignment * pm.left_direction;
    if (c.planted && l.file == 5) w += c.planted->probe_alignment * pm.right_direction;
    ProbeOnDisk p;
    p.label = l.str();
    p.w = to_floats(w.normalized());
    p.b = static_cast<float>(normal(prng, 0.1));
    p.accuracy = static_cast<float>(uniform(prng, 0.6, 0.95));
    p.f1 = static_cast<float>(uniform(prng, 0.5, 0.9));
    d.probes.push_back(std::move(p));
  }

  std::shared_ptr<Matrix> v;
  if (c.vocab_size) {
    v = std::make_shared<Matrix>(c.vocab_size, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < v->rows(); ++i) (*v)(i, j) = normal(unemb);
    }
    d.unembed.resize(static_cast<std::size_t>(c.vocab_size) * c.n);
    for (Index i = 0; i < v->rows(); ++i) {
      for (Index j = 0; j < n; ++j) d.unembed[static_cast<std::size_t>(i * n + j)] = static_cast<float>((*v)(i, j));
    }
    // Rank with the rounded matrix so the file validates exactly.
    v = std::const_pointer_cast<Matrix>(unembed_matrix(d));
  }

  const std::uint32_t legal = std::min<std::uint32_t>(c.probe_count, kLegalProbeLabels);
  std::vector<std::uint32_t> pool(legal);
  for (std::size_t i = 0; i < count; ++i) {
    RecordOnDisk r;
    r.record_id = i;
    r.p1 = static_cast<float>(geom[i].p1);
    r.p2 = static_cast<float>(geom[i].p2);
    r.z = to_floats(geom[i].z);
    r.v1 = to_floats(geom[i].v1);
    r.v2 = to_floats(geom[i].v2);
    r.y_greedy = to_floats(yg[i]);
    r.y_branch = to_floats(yb[i]);
    if (v) {
      const Vector logits = *v * to_vector(r.z);
      Index a = 0;
      logits.maxCoeff(&a);
      Index b = a == 0 ? 1 : 0;
      for (Index j = 0; j < logits.size(); ++j) {
        if (j != a && logits(j) > logits(b)) b = j;
      }
      r.token1 = static_cast<std::uint32_t>(a);
      r.token2 = static_cast<std::uint32_t>(b);
    } else {
      r.token1 = uniform_int(tok, 0, 49999);
      do {
        r.token2 = uniform_int(tok, 0, 49999);
      } while (r.token2 == r.token1);
    }

    const std::uint32_t cap = c.probe_count > 0 ? std::min(legal, c.probe_count - 1) : 0;
    const std::uint32_t k = std::min(cap, uniform_int(act, c.active_min, c.active_max));
    for (std::uint32_t j = 0; j < legal; ++j) pool[j] = j;
    for (std::uint32_t j = 0; j < k; ++j) std::swap(pool[j], pool[uniform_int(act, j, legal - 1)]);
    r.active.assign(pool.begin(), pool.begin() + k);
    std::sort(r.active.begin(), r.active.end());

    if (c.with_eval) {
      const bool missing = uniform(ev, 0.0, 1.0) < c.eval_missing_fraction;
      const double cp = std::round(normal(ev, 150.0));
      const double change = std::exp(normal(ev, c.log_cp_std) + c.log_cp_mean);
      const double sign = uniform(ev, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
      r.cp_greedy = missing ? std::numeric_limits<float>::quiet_NaN() : static_cast<float>(cp);
      r.cp_branch = missing ? std::numeric_limits<float>::quiet_NaN() : static_cast<float>(cp + sign * change);
    }
    d.records.push_back(std::move(r));
  }
  return out;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += kHex[md[i] >> 4];
    s += kHex[md[i] & 15];
  }
  return s;
}

DatasetSummary synth(const SynthConfig& config, const std::filesystem::path& out) {
  SynthResult r = synthesize(config);
  const auto bytes = serialize(r.dataset);
  write_file_atomic(out, bytes);
  DatasetSummary s;
  s.path = out;
  s.sha256 = sha256_hex(bytes);
  s.bytes = bytes.size();
  s.n = config.n;
  s.record_count = config.record_count;
  s.probe_count = config.probe_count;
  double charge = 0.0;
  for (const auto& rec : r.dataset.records) charge += 4.0 * rec.p1 * rec.p2;
  s.mean_charge = config.record_count ? charge / config.record_count : 0.0;
  s.planted = std::move(r.planted);
  return s;
}

}  // namespace blurgeom
