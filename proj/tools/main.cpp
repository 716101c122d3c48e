#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "blurgeom/pipeline.hpp"
#include "blurgeom/synth.hpp"
#include "json.hpp"

namespace {

using namespace blurgeom;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

struct Globals {
  std::optional<double> epsilon;
  std::optional<double> fd_delta;
  std::optional<std::string> charge_mode;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  std::optional<std::string> config;
};

struct Settings {
  PipelineConfig pipeline;
  SynthConfig synth;
  std::string out = "out";
  std::uint64_t seed = 1;
};

template <class T>
void take(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

Settings load_settings(const Globals& g) {
  Settings s;
  if (g.config) {
    std::ifstream f(*g.config);
    if (!f) throw Error(ErrorCode::IoError, "cannot open config " + *g.config);
    json j;
    try {
      j = json::parse(f);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
    }
    auto& p = s.pipeline;
    take(j, "epsilon", p.holonomy.epsilon);
    if (j.contains("fd_delta")) p.holonomy.fd_delta = j.at("fd_delta").get<double>();
    if (j.contains("charge_mode")) p.holonomy.eval.mode = parse_charge_mode(j.at("charge_mode").get<std::string>());
    if (j.contains("representation")) {
      const auto r = j.at("representation").get<std::string>();
      if (r == "lowrank") p.holonomy.eval.rep = Representation::LowRank;
      else if (r == "dense") p.holonomy.eval.rep = Representation::Dense;
      else throw Error(ErrorCode::InvalidArgument, "representation must be lowrank or dense");
    }
    take(j, "renormalize", p.holonomy.eval.renormalize);
    take(j, "threads", p.threads);
    take(j, "file_interval_mass", p.file_interval_mass);
    take(j, "write_svg", p.write_svg);
    if (j.contains("coupling_average")) {
      const auto a = j.at("coupling_average").get<std::string>();
      if (a == "all_probes") p.average = CouplingAverage::AllProbes;
      else if (a == "max_probes") p.average = CouplingAverage::MaxProbes;
      else throw Error(ErrorCode::InvalidArgument, "coupling_average must be all_probes or max_probes");
    }
    if (j.contains("clusters")) {
      const auto& c = j.at("clusters");
      take(c, "ear_quantile", p.clusters.ear_quantile);
      take(c, "line_distance_fraction", p.clusters.line_distance_fraction);
      take(c, "line_min_radius_factor", p.clusters.line_min_radius_factor);
    }
    take(j, "seed", s.seed);
    take(j, "out", s.out);
    if (j.contains("synth")) {
      const auto& y = j.at("synth");
      auto& c = s.synth;
      take(y, "n", c.n);
      take(y, "record_count", c.record_count);
      take(y, "probe_count", c.probe_count);
      take(y, "support_weight", c.support_weight);
      take(y, "active_min", c.active_min);
      take(y, "active_max", c.active_max);
      take(y, "with_eval", c.with_eval);
      take(y, "vocab_size", c.vocab_size);
      if (y.contains("blur_profile")) c.blur = BlurProfile::named(y.at("blur_profile").get<std::string>());
      if (y.contains("planted")) {
        PlantedStructure ps;
        const auto& q = y.at("planted");
        take(q, "ear_fraction", ps.ear_fraction);
        take(q, "line_fraction", ps.line_fraction);
        take(q, "ear_radius", ps.ear_radius);
        take(q, "line_extent", ps.line_extent);
        take(q, "line_offset", ps.line_offset);
        take(q, "probe_alignment", ps.probe_alignment);
        c.planted = ps;
      }
    }
  }
  auto& p = s.pipeline;
  if (g.epsilon) p.holonomy.epsilon = *g.epsilon;
  if (g.fd_delta) p.holonomy.fd_delta = *g.fd_delta;
  if (g.charge_mode) p.holonomy.eval.mode = parse_charge_mode(*g.charge_mode);
  if (g.threads) p.threads = *g.threads;
  if (g.seed) s.seed = *g.seed;
  if (g.out) s.out = *g.out;
  s.synth.seed = s.seed;
  s.synth.epsilon = p.holonomy.epsilon;
  return s;
}

void print_report(const ValidationReport& r) {
  for (const auto& c : r.checks) {
    std::printf("%-20s %s", c.name.c_str(), c.passed ? "ok" : "FAIL");
    if (!c.passed) {
      std::printf("  %s failures=%zu", std::string(to_string(c.code)).c_str(), c.failures);
      if (c.first_offender) std::printf(" first=%llu", static_cast<unsigned long long>(*c.first_offender));
      if (!c.detail.empty()) std::printf("  %s", c.detail.c_str());
    }
    std::printf("\n");
  }
}

/// Returns false (after printing) when the dataset does not validate.
bool precheck(const std::string& path) {
  const ValidationReport r = validate(path);
  if (r.ok()) return true;
  print_report(r);
  return false;
}

void print_summary(const ReportBundle& b) {
  const Analysis& a = b.analysis;
  std::printf("records %zu accepted %zu rejected %zu zero_q %zu\n", a.record_count, a.rows.size(), a.rejects.size(),
              a.zero_q);
  if (a.pca) {
    const auto& f = a.pca->explained_variance_fraction;
    std::printf("pca explained");
    for (Index i = 0; i < f.size(); ++i) std::printf(" %.4f", f(i));
    std::printf("\n");
  }
  if (a.clusters) {
    std::printf("clusters left_ear %zu right_ear %zu greedy_line %zu branch_line %zu\n", a.clusters->left_ear.size(),
                a.clusters->right_ear.size(), a.clusters->greedy_line.size(), a.clusters->branch_line.size());
  }
  if (!a.rows.empty() && !a.rows.front().c_greedy.empty()) {
    std::printf("mean coupling greedy %.6f branch %.6f\n", a.mean_coupling_greedy, a.mean_coupling_branch);
  }
  std::printf("wrote %zu files to %s\n", b.files.size(), b.out_dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blurring-geometry holonomy and probe-coupling analysis"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--epsilon", g.epsilon, "Clover step (default 1e-3)")->check(CLI::PositiveNumber);
  app.add_option("--fd-delta", g.fd_delta, "Finite-difference step for the curvature (default epsilon)")
      ->check(CLI::PositiveNumber);
  app.add_option("--charge-mode", g.charge_mode, "frozen or recomputed")
      ->check(CLI::IsMember({"frozen", "recomputed"}));
  app.add_option("--seed", g.seed, "Seed for synth and random ablations");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output file (synth) or directory");
  app.add_option("--config", g.config, "JSON settings file; flags override it");

  std::string dataset;
  auto add_dataset = [&](CLI::App* c) { c->add_option("dataset", dataset, "BHG1 file")->required(); };

  auto* validate_cmd = app.add_subcommand("validate", "Check a dataset and print one line per check");
  add_dataset(validate_cmd);

  auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic dataset");
  std::optional<std::uint32_t> n, records, probes, vocab;
  std::optional<std::string> profile;
  bool planted = false, no_eval = false;
  synth_cmd->add_option("--n", n, "Hidden dimension");
  synth_cmd->add_option("--records", records, "Record count");
  synth_cmd->add_option("--probes", probes, "Probe count (at most 768)");
  synth_cmd->add_option("--vocab-size", vocab, "Random unembedding rows (0 for none)");
  synth_cmd->add_option("--blur-profile", profile, "default, uncertain, confident or chargeless");
  synth_cmd->add_flag("--planted", planted, "Plant ears and lines");
  synth_cmd->add_flag("--no-eval", no_eval, "Omit evaluation metadata");

  struct StageCmd {
    CLI::App* app;
    Stage stage;
  };
  std::vector<StageCmd> stages{
      {app.add_subcommand("holonomy", "Per-record clover holonomy diagnostics"), Stage::Holonomy},
      {app.add_subcommand("couple", "Holonomy plus probe couplings"), Stage::Couple},
      {app.add_subcommand("pca", "Couplings plus PCA and cluster selection"), Stage::Pca},
      {app.add_subcommand("report", "Full analysis and report bundle"), Stage::Full},
      {app.add_subcommand("run", "Validate, then run the full pipeline"), Stage::Full},
  };
  for (auto& s : stages) add_dataset(s.app);

  auto* ablate_cmd = app.add_subcommand("ablate", "Full analysis with H replaced by a control operator");
  add_dataset(ablate_cmd);
  std::string mode;
  ablate_cmd->add_option("--mode", mode, "random-so-n, rotate-v1 or rotate-v2")
      ->required()
      ->check(CLI::IsMember({"random-so-n", "rotate-v1", "rotate-v2"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitRuntime;
  }

  try {
    Settings s = load_settings(g);
    if (validate_cmd->parsed()) {
      try {
        const ValidationReport r = validate(dataset);
        print_report(r);
        return r.ok() ? kExitOk : kExitInvalid;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalid;
      }
    }
    if (synth_cmd->parsed()) {
      SynthConfig& c = s.synth;
      if (n) c.n = *n;
      if (records) c.record_count = *records;
      if (probes) c.probe_count = *probes;
      if (vocab) c.vocab_size = *vocab;
      if (profile) c.blur = BlurProfile::named(*profile);
      if (planted && !c.planted) c.planted = PlantedStructure{};
      if (no_eval) c.with_eval = false;
      const std::string out = g.out ? *g.out : "synth.bhg";
      const DatasetSummary d = synth(c, out);
      json j = {{"path", d.path.string()}, {"sha256", d.sha256},         {"bytes", d.bytes},
                {"n", d.n},                {"records", d.record_count},  {"probes", d.probe_count},
                {"mean_charge", d.mean_charge}};
      if (c.planted) {
        j["planted"] = {{"left_ear", d.planted.left_ear.size()},
                        {"right_ear", d.planted.right_ear.size()},
                        {"greedy_line", d.planted.greedy_line.size()},
                        {"branch_line", d.planted.branch_line.size()}};
      }
      std::printf("%s\n", j.dump(2).c_str());
      return kExitOk;
    }

    PipelineConfig cfg = s.pipeline;
    if (ablate_cmd->parsed()) {
      cfg.ablation = AblationSpec{parse_ablation_mode(mode), std::nullopt};
      if (cfg.ablation->mode == AblationMode::RandomSoN) cfg.ablation->seed = s.seed;
      cfg.stage = Stage::Full;
    } else {
      for (const auto& st : stages) {
        if (st.app->parsed()) cfg.stage = st.stage;
      }
    }
    try {
      if (!precheck(dataset)) return kExitInvalid;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::IoError) throw;
      std::fprintf(stderr, "error: %s\n", e.what());
      return kExitInvalid;
    }
    const ReportBundle b = run_pipeline(dataset, cfg, s.out);
    print_summary(b);
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
