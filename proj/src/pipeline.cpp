#include "blurgeom/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <concepts>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "blurgeom/stats.hpp"
#include "blurgeom/svg.hpp"
#include "blurgeom/synth.hpp"
#include "json.hpp"

namespace blurgeom {

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Holonomy: return "holonomy";
    case Stage::Couple: return "couple";
    case Stage::Pca: return "pca";
    case Stage::Full: return "full";
  }
  return "?";
}

std::string_view to_string(ChargeMode m) { return m == ChargeMode::Frozen ? "frozen" : "recomputed"; }

ChargeMode parse_charge_mode(std::string_view s) {
  if (s == "frozen") return ChargeMode::Frozen;
  if (s == "recomputed") return ChargeMode::Recomputed;
  throw Error(ErrorCode::InvalidArgument, "unknown charge mode '" + std::string(s) + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

/// Runs f(i) for i < count on up to `threads` workers. Each index writes
/// only its own slot, so results do not depend on scheduling.
template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& f) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i; (i = next++) < count;) f(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

class StageTimer {
 public:
  explicit StageTimer(Analysis& a) : a_(a), t_(Clock::now()) {}
  void lap(const char* name) {
    const auto now = Clock::now();
    a_.timings.emplace_back(name, std::chrono::duration<double>(now - t_).count());
    t_ = now;
  }

 private:
  Analysis& a_;
  Clock::time_point t_;
};

ProbeMax overall(const MaxProbes& m) {
  if (m.active.value > m.bulk.value) return m.active;
  if (m.bulk.value > m.active.value) return m.bulk;
  return m.active.probe < m.bulk.probe ? m.active : m.bulk;
}

double row_average(const std::vector<double>& c, const MaxProbes& m, CouplingAverage mode) {
  if (mode == CouplingAverage::MaxProbes) return 0.5 * (m.active.value + m.bulk.value);
  double s = 0.0;
  for (double v : c) s += v;
  return c.empty() ? 0.0 : s / static_cast<double>(c.size());
}

struct Slot {
  std::optional<RecordRow> row;
  std::optional<Reject> reject;
  bool zero_q = false;
};

}  // namespace

Analysis analyze(const Dataset& d, const PipelineConfig& config) {
  if (config.ablation) config.ablation->validate();
  Analysis a;
  StageTimer timer(a);
  a.record_count = d.records.size();
  a.probes = load_probes(d);
  const auto unembed = unembed_matrix(d);
  const bool couple = config.stage != Stage::Holonomy;
  timer.lap("load");

  std::vector<Slot> slots(d.records.size());
  parallel_for(d.records.size(), config.threads, [&](std::size_t i) {
    const RecordOnDisk& rec = d.records[i];
    Slot& s = slots[i];
    const char* stage = "holonomy";
    try {
      const BranchGeometry g = to_geometry(rec, unembed);
      const HolonomyResult hr = clover_holonomy(g, config.holonomy);
      const RotationOperator op =
          config.ablation ? ablation_operator(*config.ablation, g, hr.H, rec.record_id) : hr.H;
      const StatePair y = to_state_pair(rec);
      RecordRow r;
      r.record_id = rec.record_id;
      r.p1 = rec.p1;
      r.p2 = rec.p2;
      r.charge = hr.charge;
      r.h_norm = hr.h.norm();
      r.operator_distance = op.distance_from_identity();
      r.clover_gap = hr.diagnostics.clover_vs_closed_form_gap;
      r.exp_gap = hr.diagnostics.exp_consistency_gap;
      r.orthogonality_defect = op.orthogonality_defect();
      r.determinant = op.determinant();
      r.q_greedy = q_vector(op, y.y_greedy);
      r.q_branch = q_vector(op, y.y_branch);
      r.eval = evaluation(d, rec);
      if (couple) {
        stage = "coupling";
        if (r.q_greedy.norm() < 1e-12 * y.y_greedy.norm() || r.q_branch.norm() < 1e-12 * y.y_branch.norm()) {
          s.zero_q = true;
          throw Error(ErrorCode::ZeroVector, "q vanishes");
        }
        r.c_greedy = couplings(r.q_greedy, a.probes);
        r.c_branch = couplings(r.q_branch, a.probes);
        r.max_greedy = max_probes(r.c_greedy, rec.active);
        r.max_branch = max_probes(r.c_branch, rec.active);
        r.top_greedy = overall(r.max_greedy);
        r.top_branch = overall(r.max_branch);
        r.avg_greedy = row_average(r.c_greedy, r.max_greedy, config.average);
        r.avg_branch = row_average(r.c_branch, r.max_branch, config.average);
        const CouplingRow cr{r.record_id, r.q_greedy, r.q_branch, {}, {}, r.max_greedy, r.max_branch};
        Deltas dl = delta_vectors(cr, y);
        r.delta_q = std::move(dl.delta_q);
        r.delta_y_norm = dl.delta_y.norm();
      }
      s.row = std::move(r);
    } catch (const Error& e) {
      s.reject = Reject{rec.record_id, stage, e.code(), e.what()};
    }
  });
  for (auto& s : slots) {
    if (s.row) a.rows.push_back(std::move(*s.row));
    if (s.reject) a.rejects.push_back(std::move(*s.reject));
    if (s.zero_q) ++a.zero_q;
  }
  timer.lap("holonomy_and_coupling");
  if (!couple) return a;

  if (!a.rows.empty()) {
    double g = 0.0, b = 0.0;
    for (const auto& r : a.rows) {
      g += r.avg_greedy;
      b += r.avg_branch;
    }
    a.mean_coupling_greedy = g / static_cast<double>(a.rows.size());
    a.mean_coupling_branch = b / static_cast<double>(a.rows.size());
  }
  if (config.stage == Stage::Couple) return a;

  std::vector<Vector> points;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    points.push_back(a.rows[i].q_greedy);
    a.point_row.push_back(i);
    a.point_label.push_back(Continuation::Greedy);
    points.push_back(a.rows[i].q_branch);
    a.point_row.push_back(i);
    a.point_label.push_back(Continuation::Branch);
  }
  const int dims = d.header.n >= 3 ? 3 : static_cast<int>(d.header.n);
  if (points.size() >= static_cast<std::size_t>(dims) + 1) {
    a.pca = pca(points, dims);
    const Matrix p2 = a.pca->projections.leftCols(2);
    a.clusters = select_clusters(p2, a.pca->projections, a.point_label, config.clusters);
  }
  timer.lap("pca");
  if (config.stage == Stage::Pca) return a;

  if (a.clusters) {
    const auto ear_files = [&](const std::vector<std::size_t>& ear) {
      std::vector<ProbeId> ids;
      for (std::size_t p : ear) {
        const auto& r = a.rows[a.point_row[p]];
        ids.push_back(a.point_label[p] == Continuation::Greedy ? r.top_greedy.probe : r.top_branch.probe);
      }
      return file_distribution(ids, a.probes, config.file_interval_mass);
    };
    a.left_ear_files = ear_files(a.clusters->left_ear);
    a.right_ear_files = ear_files(a.clusters->right_ear);
  }

  if (!a.rows.empty()) {
    std::vector<Vector> dq;
    for (const auto& r : a.rows) dq.push_back(r.delta_q);
    a.spectrum = piece_spectrum(dq, a.probes);
    for (int s = 0; s < kSideCount; ++s) {
      try {
        a.spearman[s] = piece_value_correlation(*a.spectrum, static_cast<Side>(s));
      } catch (const Error&) {
        a.spearman[s].reset();
      }
    }
  }

  if (d.header.has_eval()) {
    std::vector<std::optional<Evaluation>> ev;
    for (const auto& r : a.rows) ev.push_back(r.eval);
    try {
      a.centipawn = centipawn_summary(ev);
    } catch (const Error&) {
      a.centipawn.reset();
    }
  }
  timer.lap("aggregates");
  return a;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, std::initializer_list<std::string_view> columns) : f_(path) {
    if (!f_) throw Error(ErrorCode::IoError, "cannot create " + path.string());
    bool first = true;
    for (auto c : columns) {
      if (!first) f_ << ',';
      f_ << c;
      first = false;
    }
    f_ << '\n';
  }
  Csv& operator<<(double v) { return cell(fmt(v)); }
  template <std::unsigned_integral T>
  Csv& operator<<(T v) {
    return cell(std::to_string(v));
  }
  Csv& operator<<(std::string_view v) { return cell(std::string(v)); }
  void end() {
    f_ << '\n';
    first_ = true;
  }

 private:
  Csv& cell(const std::string& s) {
    if (!first_) f_ << ',';
    f_ << s;
    first_ = false;
    return *this;
  }
  std::ofstream f_;
  bool first_ = true;
};

std::string_view cont_name(Continuation c) { return c == Continuation::Greedy ? "greedy" : "branch"; }

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorCode::IoError, "cannot create " + p.string());
  f << s;
}

}  // namespace

std::vector<std::filesystem::path> write_report(const Analysis& a, const PipelineConfig& config,
                                                const std::filesystem::path& out,
                                                const std::string& dataset_label,
                                                const std::string& dataset_sha256) {
  std::filesystem::create_directories(out);
  std::vector<std::filesystem::path> files;
  const auto path = [&](const char* name) {
    files.push_back(out / name);
    return out / name;
  };
  const auto label_of = [&](ProbeId id) -> std::string_view { return a.probes.at(id).label(); };

  {
    Csv c(path("holonomy.csv"), {"record_id", "p1", "p2", "charge", "h_norm", "operator_distance",
                                 "clover_gap", "exp_gap", "orthogonality_defect", "determinant"});
    for (const auto& r : a.rows) {
      c << r.record_id << r.p1 << r.p2 << r.charge << r.h_norm << r.operator_distance << r.clover_gap
        << r.exp_gap << r.orthogonality_defect << r.determinant;
      c.end();
    }
  }
  {
    Csv c(path("rejects.csv"), {"record_id", "stage", "code", "message"});
    for (const auto& r : a.rejects) {
      std::string msg = r.message;
      for (char& ch : msg) {
        if (ch == ',' || ch == '\n') ch = ';';
      }
      c << r.record_id << r.stage << to_string(r.code) << msg;
      c.end();
    }
  }
  const bool coupled = config.stage != Stage::Holonomy;
  if (coupled) {
    Csv c(path("couplings.csv"),
          {"record_id", "continuation", "q_norm", "avg_coupling", "max_active_id", "max_active_label",
           "max_active_value", "max_bulk_id", "max_bulk_label", "max_bulk_value"});
    for (const auto& r : a.rows) {
      for (auto cont : {Continuation::Greedy, Continuation::Branch}) {
        const bool g = cont == Continuation::Greedy;
        const MaxProbes& m = g ? r.max_greedy : r.max_branch;
        c << r.record_id << cont_name(cont) << (g ? r.q_greedy : r.q_branch).norm()
          << (g ? r.avg_greedy : r.avg_branch) << m.active.probe << label_of(m.active.probe) << m.active.value
          << m.bulk.probe << label_of(m.bulk.probe) << m.bulk.value;
        c.end();
      }
    }
    Csv s(path("coupling_summary.csv"), {"continuation", "average", "mean_coupling", "records"});
    const std::string_view avg = config.average == CouplingAverage::AllProbes ? "all_probes" : "max_probes";
    s << "greedy" << avg << a.mean_coupling_greedy << a.rows.size();
    s.end();
    s << "branch" << avg << a.mean_coupling_branch << a.rows.size();
    s.end();
  }
  if (coupled && config.stage != Stage::Couple) {
    Csv v(path("pca_variance.csv"), {"component", "explained_variance", "fraction"});
    if (a.pca) {
      for (Index k = 0; k < a.pca->explained_variance.size(); ++k) {
        v << static_cast<std::uint32_t>(k + 1) << a.pca->explained_variance(k)
          << a.pca->explained_variance_fraction(k);
        v.end();
      }
    }
    Csv p(path("pca_points.csv"), {"record_id", "continuation", "pc1", "pc2", "pc3", "cluster"});
    std::vector<std::string_view> cluster(a.point_row.size(), "bulk");
    if (a.clusters) {
      for (auto i : a.clusters->left_ear) cluster[i] = "left_ear";
      for (auto i : a.clusters->right_ear) cluster[i] = "right_ear";
      for (auto i : a.clusters->greedy_line) cluster[i] = "greedy_line";
      for (auto i : a.clusters->branch_line) cluster[i] = "branch_line";
    }
    if (a.pca) {
      const Matrix& pr = a.pca->projections;
      for (std::size_t i = 0; i < a.point_row.size(); ++i) {
        const auto k = static_cast<Index>(i);
        p << a.rows[a.point_row[i]].record_id << cont_name(a.point_label[i]) << pr(k, 0)
          << (pr.cols() > 1 ? pr(k, 1) : 0.0) << (pr.cols() > 2 ? pr(k, 2) : 0.0) << cluster[i];
        p.end();
      }
    }
    if (config.write_svg && a.pca) {
      const Matrix& pr = a.pca->projections;
      std::vector<svg::Series> s2{{"bulk", {}, {}, "#999999"},
                                  {"left ear", {}, {}, "#d62728"},
                                  {"right ear", {}, {}, "#1f77b4"}};
      std::vector<svg::Series> s3{{"greedy", {}, {}, "#2ca02c"}, {"branch", {}, {}, "#9467bd"}};
      for (std::size_t i = 0; i < a.point_row.size(); ++i) {
        const auto k = static_cast<Index>(i);
        const int sel = cluster[i] == "left_ear" ? 1 : cluster[i] == "right_ear" ? 2 : 0;
        s2[sel].x.push_back(pr(k, 0));
        s2[sel].y.push_back(pr(k, 1));
        auto& t = s3[a.point_label[i] == Continuation::Greedy ? 0 : 1];
        t.x.push_back(pr(k, 0));
        t.y.push_back(pr.cols() > 2 ? pr(k, 2) : 0.0);
      }
      write_text(path("pca2d.svg"), svg::scatter("q population, first two components", "PC1", "PC2", s2));
      write_text(path("pca3d_pc1_pc3.svg"), svg::scatter("q population by continuation", "PC1", "PC3", s3));
    }
  }
  if (coupled && config.stage == Stage::Full) {
    {
      Csv c(path("file_distribution.csv"), {"ear", "file", "count", "total", "mean", "lo", "hi"});
      std::vector<svg::Bar> bars;
      for (int e = 0; e < 2; ++e) {
        const auto& fd = e == 0 ? a.left_ear_files : a.right_ear_files;
        if (!fd) continue;
        for (int f = 0; f < kFileCount; ++f) {
          const auto& r = (*fd)[f];
          const std::string file(1, file_letter(f));
          c << (e == 0 ? "left" : "right") << file << r.count << r.total << r.posterior.mean << r.posterior.lo
            << r.posterior.hi;
          c.end();
          bars.push_back({(e == 0 ? "L:" : "R:") + file, r.posterior.mean, r.posterior.lo, r.posterior.hi});
        }
      }
      if (config.write_svg) {
        write_text(path("file_distribution.svg"), svg::bars("Max-probe file rate per ear", "rate", bars));
      }
    }
    {
      Csv c(path("piece_spectrum.csv"), {"side", "piece", "piece_value", "mean_coupling", "samples"});
      std::vector<svg::Bar> bars;
      if (a.spectrum) {
        for (const auto& g : a.spectrum->groups) {
          const auto v = piece_value(g.piece);
          c << to_string(g.side) << to_string(g.piece) << (v ? *v : std::nan("")) << g.mean_coupling
            << g.samples;
          c.end();
          bars.push_back({std::string(to_string(g.side).substr(0, 1)) + ":" + std::string(to_string(g.piece)),
                          g.mean_coupling, std::nullopt, std::nullopt});
        }
      }
      if (config.write_svg) {
        write_text(path("piece_spectrum.svg"), svg::bars("Delta q coupling by side and piece", "mean coupling", bars));
      }
    }
    {
      Csv c(path("spearman.csv"), {"side", "rho", "p_one_sided", "p_two_sided", "permutations"});
      for (int s = 0; s < kSideCount; ++s) {
        const auto& r = a.spearman[s];
        if (!r) continue;
        c << to_string(static_cast<Side>(s)) << r->rho << r->p_one_sided << r->p_two_sided << r->permutations;
        c.end();
      }
    }
    {
      Csv c(path("deltas.csv"), {"record_id", "delta_q_norm", "delta_y_norm"});
      svg::Series s{"records", {}, {}, "#1f77b4"};
      for (const auto& r : a.rows) {
        c << r.record_id << r.delta_q.norm() << r.delta_y_norm;
        c.end();
        s.x.push_back(r.delta_y_norm);
        s.y.push_back(r.delta_q.norm());
      }
      if (config.write_svg) {
        write_text(path("deltas.svg"), svg::scatter("Flow of q against the state shift", "|delta y|", "|delta q|",
                                                    std::span<const svg::Series>(&s, 1)));
      }
    }
    if (a.centipawn) {
      Csv c(path("centipawn.csv"), {"mean_abs_log_cp", "std", "used", "skipped_zero", "missing"});
      c << a.centipawn->mean_abs_log_cp << a.centipawn->std << a.centipawn->used << a.centipawn->skipped_zero
        << a.centipawn->missing;
      c.end();
    }
  }

  nlohmann::json m;
  m["tool"] = "blurgeom";
  m["version"] = kToolVersion;
  m["dataset"] = {{"path", dataset_label}, {"sha256", dataset_sha256}};
  m["config"] = {
      {"stage", to_string(config.stage)},
      {"epsilon", config.holonomy.epsilon},
      {"fd_delta", config.holonomy.delta()},
      {"charge_mode", to_string(config.holonomy.eval.mode)},
      {"representation", config.holonomy.eval.rep == Representation::LowRank ? "lowrank" : "dense"},
      {"renormalize", config.holonomy.eval.renormalize},
      {"threads", config.threads},
      {"coupling_average", config.average == CouplingAverage::AllProbes ? "all_probes" : "max_probes"},
      {"file_interval_mass", config.file_interval_mass},
      {"clusters",
       {{"ear_quantile", config.clusters.ear_quantile},
        {"line_distance_fraction", config.clusters.line_distance_fraction},
        {"line_min_radius_factor", config.clusters.line_min_radius_factor}}},
  };
  if (config.ablation) {
    m["config"]["ablation"] = {{"mode", to_string(config.ablation->mode)}};
    if (config.ablation->seed) m["config"]["ablation"]["seed"] = *config.ablation->seed;
  }
  m["counts"] = {{"records", a.record_count},
                 {"accepted", a.rows.size()},
                 {"rejected", a.rejects.size()},
                 {"zero_q", a.zero_q}};
  if (a.pca) {
    m["pca"] = {{"rank_deficient", a.pca->rank_deficient}, {"numerical_rank", a.pca->numerical_rank}};
  }
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [name, secs] : a.timings) t[name] = secs;
  m["stage_seconds"] = t;
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.filename().string());
  m["outputs"] = names;
  write_text(path("manifest.json"), m.dump(2) + "\n");
  return files;
}

ReportBundle run_pipeline(const std::filesystem::path& dataset, const PipelineConfig& config,
                          const std::filesystem::path& out_dir) {
  const auto t0 = Clock::now();
  const auto bytes = read_file(dataset);
  Dataset d = parse(bytes);
  const auto rep = check_dataset(d);
  if (const auto* f = rep.first_failure()) throw Error(f->code, f->name + ": " + f->detail);
  const double load = std::chrono::duration<double>(Clock::now() - t0).count();
  ReportBundle b;
  b.analysis = analyze(d, config);
  b.analysis.timings.insert(b.analysis.timings.begin(), {"read_and_validate", load});
  const auto t1 = Clock::now();
  b.out_dir = out_dir;
  b.files = write_report(b.analysis, config, out_dir, dataset.string(), sha256_hex(bytes));
  b.analysis.timings.emplace_back("write_report", std::chrono::duration<double>(Clock::now() - t1).count());
  return b;
}

}  // namespace blurgeom
