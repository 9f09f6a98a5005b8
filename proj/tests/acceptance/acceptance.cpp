// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: one PASS / FAIL line per criterion. Criterion 7 is soft
// and prints WARN instead of failing.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "ticon/cli/app.hpp"
#include "ticon/cli/checks.hpp"
#include "ticon/cli/pipeline.hpp"
#include "ticon/model/checkpoint.hpp"
#include "ticon/rng.hpp"

#ifndef TICON_SOURCE_DIR
#define TICON_SOURCE_DIR "."
#endif

using namespace ticon;
using namespace ticon::cli;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kSeeds = 5;

std::string f(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string list(const std::vector<double>& v, const char* fmt = "%.3f") {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + f(fmt, v[i]);
  return s + "]";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  int hard_failures = 0;
  void line(int id, const std::string& name, bool pass, const std::string& detail, bool soft = false) {
    const char* tag = pass ? "PASS" : soft ? "WARN" : "FAIL";
    if (!pass && !soft) ++hard_failures;
    std::cout << "[" << tag << "] criterion " << id << " " << name << ": " << detail << std::endl;
  }
};

double value_of(const std::vector<eval::EvalReport>& rs, const std::string& variant) {
  for (const auto& r : rs)
    if (r.variant == variant) return r.value;
  throw std::runtime_error("missing variant " + variant);
}

// One pretrained model per root seed, with the tile benchmark numbers the
// criteria read.
struct SeedRun {
  RunConfig cfg;
  model::TiconParams params;
  std::vector<double> eval_totals;
  double pretrain_seconds = 0.0;
  std::map<std::string, double> aliased, nonaliased, cls;
  double aliased_ctx_k4 = 0.0;
};

RunConfig seed_config(const synth::EncoderRegistry& reg, int seed) {
  RunConfig cfg = RunConfig::defaults(reg, static_cast<std::uint64_t>(seed));
  // Each seed also draws its own benchmark slides.
  cfg.eval.slides.base += 1000 * static_cast<std::uint64_t>(seed - 1);
  return cfg;
}

SeedRun pretrain_seed(const synth::EncoderRegistry& reg, int seed, const fs::path& root) {
  SeedRun run;
  run.cfg = seed_config(reg, seed);
  const train::Corpus tr = pretrain_corpus(run.cfg, reg, false);
  const train::Corpus ho = pretrain_corpus(run.cfg, reg, true);
  train::PretrainOptions o;
  o.out_dir = root / ("seed-" + std::to_string(seed)) / "pretrain-omni-multi";
  o.init_seed = run.cfg.init_seed;
  o.base_model = run.cfg.model;
  const auto t0 = Clock::now();
  train::PretrainResult res = train::pretrain(tr, ho, run.cfg.train, reg, o);
  run.pretrain_seconds = seconds_since(t0);
  for (const auto& e : res.evals) run.eval_totals.push_back(e.total);
  run.params = std::move(res.state.params);

  const auto& enc = run.cfg.eval.encoder;
  const eval::BenchSlides bench = bench_slides(run.cfg, reg, enc);
  eval::BenchConfig bc = run.cfg.eval.bench;
  const auto alias = run.cfg.synth.alias_pair;
  const eval::TileFeatures full = eval::tile_features(run.params, enc, bench, bc);
  for (const auto& r : eval::run_variants(full, eval::TileTask::kAliased, alias, bc)) run.aliased[r.variant] = r.value;
  for (const auto& r : eval::run_variants(full, eval::TileTask::kNonAliased, alias, bc))
    run.nonaliased[r.variant] = r.value;
  for (const auto& r : eval::run_variants(full, eval::TileTask::kClass, alias, bc)) run.cls[r.variant] = r.value;
  bc.context_window = run.cfg.train.window;
  const eval::TileFeatures k4 = eval::tile_features(run.params, enc, bench, bc);
  run.aliased_ctx_k4 = value_of(eval::run_variants(k4, eval::TileTask::kAliased, alias, bc), "ctx");
  std::cout << "  seed " << seed << ": pretrain " << f("%.0f", run.pretrain_seconds) << " s, held-out "
            << f("%.4f", run.eval_totals.front()) << " -> " << f("%.4f", run.eval_totals.back()) << "; aliased raw/iso/ctx "
            << f("%.3f", run.aliased["raw"]) << "/" << f("%.3f", run.aliased["iso"]) << "/" << f("%.3f", run.aliased["ctx"])
            << ", ctx at K=4 " << f("%.3f", run.aliased_ctx_k4) << std::endl;
  return run;
}

void criterion1(Outcome& out, const synth::EncoderRegistry& reg) {
  const auto t0 = Clock::now();
  const auto cases = primitive_grad_checks(50);
  double worst = 0.0;
  std::string worst_op, bad;
  for (const auto& c : cases) {
    if (c.error >= worst) {
      worst = c.error;
      worst_op = c.op;
    }
    if (c.error > 1e-5) bad += " " + c.op;
  }
  const double pipe = pipeline_grad_check(reg);
  const double secs = seconds_since(t0);
  out.line(1, "gradient soundness", bad.empty() && pipe <= 1e-4 && secs < 60.0,
           std::to_string(cases.size()) + " primitives worst " + f("%.2e", worst) + " (" + worst_op + ", limit 1e-5)" +
               (bad.empty() ? "" : ", over:" + bad) + "; OFMM 2x2 pipeline " + f("%.2e", pipe) + " (limit 1e-4); " +
               f("%.1f", secs) + " s (limit 60)");
}

void criterion2(Outcome& out, const std::vector<SeedRun>& runs) {
  const SeedRun& r = runs.front();
  const double a = r.eval_totals.front(), b = r.eval_totals.back();
  const double drop = (a - b) / a;
  std::vector<double> drops;
  for (const auto& s : runs) drops.push_back((s.eval_totals.front() - s.eval_totals.back()) / s.eval_totals.front());
  out.line(2, "OFMM learns", drop >= 0.5 && r.pretrain_seconds < 600.0,
           "seed 1 held-out total " + f("%.4f", a) + " -> " + f("%.4f", b) + ", drop " + f("%.1f%%", 100 * drop) +
               " (need >= 50%) in " + f("%.0f", r.pretrain_seconds) + " s (limit 600); drops over seeds " + list(drops));
}

void criterion3(Outcome& out, const std::vector<SeedRun>& runs) {
  std::vector<double> raw, iso, ctx, nraw, nctx;
  for (const auto& r : runs) {
    raw.push_back(r.aliased.at("raw"));
    iso.push_back(r.aliased.at("iso"));
    ctx.push_back(r.aliased.at("ctx"));
    nraw.push_back(r.nonaliased.at("raw"));
    nctx.push_back(r.nonaliased.at("ctx"));
  }
  const double gain = mean(ctx) - mean(raw), keep = mean(nctx) - mean(nraw);
  const bool pass = mean(ctx) >= mean(iso) && gain >= 0.10 && keep >= -0.02;
  out.line(3, "contextualization ordering", pass,
           "aliased F1 mean raw " + f("%.3f", mean(raw)) + ", iso " + f("%.3f", mean(iso)) + ", ctx " +
               f("%.3f", mean(ctx)) + " (ctx - raw " + f("%+.3f", gain) + ", need >= +0.10 and ctx >= iso); non-aliased ctx - raw " +
               f("%+.3f", keep) + " (need >= -0.02); per-seed aliased ctx " + list(ctx));
}

void criterion4(Outcome& out, const std::vector<SeedRun>& runs) {
  std::vector<double> raw, iso;
  for (const auto& r : runs) {
    raw.push_back(r.cls.at("raw"));
    iso.push_back(r.cls.at("iso"));
  }
  const double d = mean(iso) - mean(raw);
  out.line(4, "iso emergence", d >= -0.02,
           "tile-class F1 mean raw " + f("%.3f", mean(raw)) + ", iso " + f("%.3f", mean(iso)) + " (iso - raw " +
               f("%+.3f", d) + ", need >= -0.02); per-seed iso " + list(iso));
}

void criterion5(Outcome& out, const std::vector<SeedRun>& runs) {
  std::vector<double> full, k4;
  for (const auto& r : runs) {
    full.push_back(r.aliased.at("ctx") - r.aliased.at("raw"));
    k4.push_back(r.aliased_ctx_k4 - r.aliased.at("raw"));
  }
  const double g4 = mean(k4), gf = mean(full);
  const double retention = g4 > 0 ? gf / g4 : 0.0;
  out.line(5, "train-short-test-long", g4 > 0 && retention >= 0.8,
           "aliased ctx - raw on the 12x12 grid " + f("%+.3f", gf) + " vs in 4x4 blocks " + f("%+.3f", g4) +
               ", retention " + f("%.1f%%", 100 * retention) + " (need >= 80%)");
}

bool same_bytes(const num::Tensor& a, const num::Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(double)) == 0;
}

void criterion6(Outcome& out, const synth::EncoderRegistry& reg, const SeedRun& base) {
  const std::string id = "unseen-d";
  const train::Corpus corpus = adapt_corpus(base.cfg, reg, id);
  const auto t0 = Clock::now();
  const model::TiconParams adapted = train::adapt_unseen(base.params, id, reg, corpus, base.cfg.adapt.cfg);
  const double secs = seconds_since(t0);
  std::size_t frozen = 0, changed = 0;
  for (const auto& [name, p] : base.params.tensors) {
    ++frozen;
    if (!adapted.tensors.count(name) || !same_bytes(p.value, adapted.at(name).value)) ++changed;
  }
  const eval::BenchSlides bench = bench_slides(base.cfg, reg, id);
  const auto& bc = base.cfg.eval.bench;
  const eval::TileFeatures ft = eval::tile_features(adapted, id, bench, bc);
  const auto rs = eval::run_variants(ft, eval::TileTask::kAliased, base.cfg.synth.alias_pair, bc);
  const double raw = value_of(rs, "raw"), ctx = value_of(rs, "ctx");
  eval::BenchConfig blocks = bc;
  blocks.context_window = base.cfg.train.window;
  const auto rb = eval::run_variants(eval::tile_features(adapted, id, bench, blocks), eval::TileTask::kAliased,
                                     base.cfg.synth.alias_pair, blocks);
  out.line(6, "adaptation to an unseen encoder", ctx - raw >= 0.05 && changed == 0,
           id + " aliased F1 raw " + f("%.3f", raw) + ", ctx " + f("%.3f", ctx) + " (ctx - raw " + f("%+.3f", ctx - raw) +
               ", need >= +0.05); " + std::to_string(changed) + " of " + std::to_string(frozen) +
               " pre-existing tensors changed; adapt " + f("%.0f", secs) + " s; ctx in 4x4 blocks " +
               f("%.3f", value_of(rb, "ctx")));
}

void criterion7(Outcome& out, const synth::EncoderRegistry& reg, const SeedRun& multi, const fs::path& root) {
  RunConfig cfg = multi.cfg;
  cfg.set_mode(train::Mode::kOmniSingle, reg);
  const train::Corpus tr = pretrain_corpus(cfg, reg, false);
  const train::Corpus ho = pretrain_corpus(cfg, reg, true);
  train::PretrainOptions o;
  o.out_dir = root / "seed-1" / "pretrain-omni-single";
  o.init_seed = cfg.init_seed;
  o.base_model = cfg.model;
  const train::PretrainResult single = train::pretrain(tr, ho, cfg.train, reg, o);

  std::vector<train::GridSet> held;
  for (std::size_t i = 0; i < std::min<std::size_t>(o.eval_items, ho.candidates.size()); ++i) held.push_back(ho.window(i));
  const auto& ids = multi.cfg.train.inputs;
  const std::uint64_t plan_seed = stream_seed(multi.cfg.train.seed, "cross-eval");
  const auto em = train::evaluate(multi.params, multi.cfg.train, held, ids, ids, plan_seed);
  const auto es = train::evaluate(single.state.params, cfg.train, held, ids, ids, plan_seed);
  int wins = 0;
  std::string detail;
  for (const auto& t : ids) {
    double m = 0.0, s = 0.0;
    for (const auto& in : ids) {
      if (in == t) continue;
      m += em.pairwise.at(in).at(t) / static_cast<double>(ids.size() - 1);
      s += es.pairwise.at(in).at(t) / static_cast<double>(ids.size() - 1);
    }
    wins += m <= s;
    detail += " " + t + " multi " + f("%.4f", m) + " / single " + f("%.4f", s) + ";";
  }
  out.line(7, "multi-target vs single-target (soft)", wins >= 2,
           "cross-encoder held-out loss per target:" + detail + " multi wins " + std::to_string(wins) + " of " +
               std::to_string(ids.size()) + " (want >= 2)",
           true);
}

void criterion8(Outcome& out, const synth::EncoderRegistry& reg, const std::vector<SeedRun>& runs, const fs::path& root) {
  std::vector<double> t_raw, t_ctx, m_ctx, m_raw;
  for (const auto& r : runs) {
    const std::uint64_t seed = r.cfg.seed;
    const fs::path dir = root / ("seed-" + std::to_string(seed));
    const auto raw = train_aggregator(r.cfg, reg, agg::Source::kRaw, nullptr, dir / "aggregate-raw");
    const auto ctx = train_aggregator(r.cfg, reg, agg::Source::kCtx, &r.params, dir / "aggregate-ctx");
    const auto rr = slide_reports(r.cfg, reg, agg::Source::kRaw, nullptr, &raw.params);
    const auto rc = slide_reports(r.cfg, reg, agg::Source::kCtx, &r.params, &ctx.params);
    t_raw.push_back(value_of(rr, "tangle-raw"));
    m_raw.push_back(value_of(rr, "meanpool-raw"));
    t_ctx.push_back(value_of(rc, "tangle-ctx"));
    m_ctx.push_back(value_of(rc, "meanpool-ctx"));
    std::cout << "  seed " << seed << ": balanced accuracy tangle-raw " << f("%.3f", t_raw.back()) << ", tangle-ctx "
              << f("%.3f", t_ctx.back()) << ", meanpool-raw " << f("%.3f", m_raw.back()) << ", meanpool-ctx "
              << f("%.3f", m_ctx.back()) << "; retrieval raw " << f("%.3f", raw.evals.back().retrieval) << ", ctx "
              << f("%.3f", ctx.evals.back().retrieval) << " (chance " << f("%.3f", ctx.evals.back().chance) << ")"
              << std::endl;
  }
  const double over_raw = mean(t_ctx) - mean(t_raw), over_mean = mean(t_ctx) - mean(m_ctx);
  out.line(8, "slide-level ordering", over_raw >= 0.03 && over_mean >= 0.03,
           "balanced accuracy mean tangle-ctx " + f("%.3f", mean(t_ctx)) + ", tangle-raw " + f("%.3f", mean(t_raw)) +
               ", meanpool-ctx " + f("%.3f", mean(m_ctx)) + ", meanpool-raw " + f("%.3f", mean(m_raw)) +
               "; tangle-ctx minus tangle-raw " + f("%+.3f", over_raw) + ", minus meanpool-ctx " + f("%+.3f", over_mean) +
               " (each need >= +0.03)");
}

void criterion_checks(Outcome& out, int id, const std::string& name, const std::vector<Check>& checks) {
  bool pass = true;
  std::string detail;
  for (const auto& c : checks) {
    pass = pass && c.passed;
    detail += (detail.empty() ? "" : "; ") + c.name + (c.passed ? " ok" : " FAILED") + " (" + c.detail + ")";
  }
  out.line(id, name, pass, detail);
}

void criterion10(Outcome& out, const fs::path& root) {
  const std::string cfg = std::string(TICON_SOURCE_DIR) + "/configs/demo.cfg";
  auto demo = [&](const fs::path& dir) {
    fs::remove_all(dir);
    const std::vector<std::vector<std::string>> steps = {
        {"pretrain"},
        {"adapt", "--encoder", "unseen-d"},
        {"aggregate", "--source", "ctx"},
        {"eval", "--task", "tile"},
        {"eval", "--task", "spot"},
        {"eval", "--task", "slide", "--variant", "ctx"},
        {"report"},
    };
    std::ostringstream log;
    for (const auto& s : steps) {
      std::vector<std::string> args{"--config", cfg, "--out", dir.string()};
      args.insert(args.end(), s.begin(), s.end());
      const int code = run(args, log, log);
      if (code != 0) throw std::runtime_error("demo step " + s.front() + " exited " + std::to_string(code) + ": " + log.str());
    }
  };
  const auto t0 = Clock::now();
  const fs::path a = root / "demo-a", b = root / "demo-b";
  demo(a);
  demo(b);
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext != ".jsonl" && ext != ".tck" && ext != ".md" && e.path().filename() != "manifest.txt") continue;
    ++files;
    const fs::path other = b / fs::relative(e.path(), a);
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differ;
  }

  // Interrupt at 30 of 60 iterations and resume in a fresh directory.
  const fs::path c = root / "demo-resume";
  fs::remove_all(c);
  std::ostringstream log;
  bool ok = run({"--config", cfg, "--out", c.string(), "pretrain", "--stop-at", "30"}, log, log) == 0;
  ok = ok && run({"--config", cfg, "--out", c.string(), "pretrain", "--resume",
                  (c / "pretrain-omni-multi" / "ckpt-000030.tck").string()},
                 log, log) == 0;
  bool exact = ok;
  for (const char* name : {"metrics.jsonl", "eval.jsonl", "model.tck", "ckpt-000060.tck"})
    exact = exact && slurp(a / "pretrain-omni-multi" / name) == slurp(c / "pretrain-omni-multi" / name);
  out.line(10, "determinism", files > 0 && differ == 0 && exact,
           "two demo runs: " + std::to_string(files - differ) + " of " + std::to_string(files) +
               " metrics, report, manifest and checkpoint files byte-identical; interrupt at 30 + resume " +
               (exact ? "matches" : "DIFFERS from") + " the uninterrupted trajectory; " + f("%.0f", seconds_since(t0)) + " s");
}

void criterion12(Outcome& out) {
  const model::ModelConfig cfg = model::ModelConfig::paper_preset();
  const double enc = static_cast<double>(model::count_parameters(cfg, "enc."));
  const double dec = static_cast<double>(model::count_parameters(cfg, "dec."));
  const double de = enc / 170e6 - 1.0, dd = dec / 28e6 - 1.0;
  out.line(12, "paper-scale parameter count", std::abs(de) <= 0.05 && std::abs(dd) <= 0.10,
           "encoder " + f("%.1fM", enc / 1e6) + " (" + f("%+.1f%%", 100 * de) + " of 170M, limit 5%), decoder " +
               f("%.1fM", dec / 1e6) + " (" + f("%+.1f%%", 100 * dd) + " of 28M, limit 10%)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria runner"};
  std::string out_dir = "acceptance-out";
  std::vector<int> only;
  app.add_option("--out", out_dir, "Scratch directory")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<int> sel(only.begin(), only.end());
  auto want = [&](int c) { return sel.empty() || sel.count(c); };

  const fs::path root = fs::absolute(out_dir);
  fs::create_directories(root);
  const auto reg = synth::EncoderRegistry::desk_default();
  Outcome out;
  const auto t0 = Clock::now();
  try {
    if (want(1)) criterion1(out, reg);
    std::vector<SeedRun> runs;
    const bool need_runs = want(2) || want(3) || want(4) || want(5) || want(6) || want(7) || want(8);
    if (need_runs) {
      const int n = (want(3) || want(4) || want(5) || want(8)) ? kSeeds : 1;
      std::cout << "pretraining " << n << " desk model(s)" << std::endl;
      for (int s = 1; s <= n; ++s) runs.push_back(pretrain_seed(reg, s, root));
    }
    if (want(2)) criterion2(out, runs);
    if (want(3)) criterion3(out, runs);
    if (want(4)) criterion4(out, runs);
    if (want(5)) criterion5(out, runs);
    if (want(6)) criterion6(out, reg, runs.front());
    if (want(7)) criterion7(out, reg, runs.front(), root);
    if (want(8)) criterion8(out, reg, runs, root);
    if (want(9)) criterion_checks(out, 9, "mask-plan laws", mask_law_checks(10000));
    if (want(10)) criterion10(out, root);
    if (want(11)) criterion_checks(out, 11, "format robustness", format_checks(reg));
    if (want(12)) criterion12(out);
  } catch (const std::exception& e) {
    std::cout << "[FAIL] acceptance runner aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << "acceptance finished in " << f("%.0f", seconds_since(t0)) << " s, " << out.hard_failures
            << " hard criteria failed" << std::endl;
  return out.hard_failures == 0 ? 0 : 1;
}
