// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include "ticon/cli/app.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "ticon/binio.hpp"
#include "ticon/cli/pipeline.hpp"
#include "ticon/errors.hpp"
#include "ticon/model/checkpoint.hpp"
#include "ticon/parallel.hpp"

namespace fs = std::filesystem;

namespace ticon::cli {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const RegistryError*>(&e)) return kExitConfig;
  if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const MetricError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const Error*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e) ||
      dynamic_cast<const nlohmann::json::exception*>(&e))
    return kExitData;
  return 1;
}

namespace {

struct Globals {
  std::string config;
  std::vector<std::string> sets;
  std::string out = "run";
  std::size_t threads = 0;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

RunConfig load_config(const Globals& g, const synth::EncoderRegistry& reg) {
  KvText kv = KvText::parse(g.config.empty() ? std::string() : slurp(g.config));
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || trim(s.substr(0, eq)).empty())
      throw ConfigError("--set expects key=value, got '" + s + "'");
    kv.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  RunConfig cfg = RunConfig::parse(kv.render(), reg);
  if (g.threads) cfg.threads = g.threads;
  set_thread_count(cfg.threads);
  return cfg;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void save_model64(const model::TiconParams& p, const fs::path& path, const KvText& meta = {}) {
  ckpt::save(model::to_container(p, meta), path, ckpt::DType::kF64);
}

std::vector<nlohmann::json> read_jsonl(const fs::path& p) {
  std::vector<nlohmann::json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

// ---- synth -------------------------------------------------------------

int cmd_synth(const Globals& g, const std::string& which, std::ostream& out) {
  const auto reg = synth::EncoderRegistry::desk_default();
  const RunConfig cfg = load_config(g, reg);
  const std::vector<std::pair<std::string, Cohort>> cohorts = {
      {"eval", cfg.eval.slides},
      {"corpus-train", cfg.corpus.train},
      {"corpus-heldout", cfg.corpus.heldout},
      {"adapt", cfg.adapt.corpus},
      {"aggregate-train", cfg.aggregate.train},
      {"aggregate-heldout", cfg.aggregate.heldout},
      {"aggregate-probe", cfg.aggregate.probe},
  };
  bool any = false;
  for (const auto& [name, cohort] : cohorts) {
    if (which != "all" && which != name) continue;
    any = true;
    const fs::path dir = fs::path(g.out) / "synth" / name;
    fs::create_directories(dir);
    const auto seeds = cohort.seeds();
    std::vector<std::string> lines(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
      const synth::SyntheticSlide s = synth::generate_slide(seeds[i], cfg.synth);
      for (const auto& id : reg.ids()) {
        synth::write_grid(synth::encode_tiles(s, reg, id),
                          dir / ("slide-" + std::to_string(seeds[i]) + "." + id + ".teg"));
      }
      nlohmann::ordered_json j;
      j["seed"] = seeds[i];
      j["slide_label"] = s.slide_label;
      j["valid_tiles"] = s.num_valid();
      j["gene_vector"] = s.gene_vector;
      lines[i] = j.dump();
    });
    std::ofstream meta(dir / "slides.jsonl", std::ios::trunc);
    for (const auto& l : lines) meta << l << "\n";
    meta.close();
    write_manifest(dir, "synth --cohort " + name, cfg, reg, {dir / "slides.jsonl"});
    out << "synth " << name << ": " << seeds.size() << " slides x " << reg.ids().size() << " encoders -> "
        << dir.string() << "\n";
  }
  if (!any) throw ConfigError("synth: unknown cohort '" + which + "'");
  return kExitOk;
}

// ---- pretrain ----------------------------------------------------------

int cmd_pretrain(const Globals& g, const std::string& mode_name, const std::string& resume, std::int64_t stop_at,
                 std::ostream& out) {
  const auto reg = synth::EncoderRegistry::desk_default();
  RunConfig cfg = load_config(g, reg);
  if (!mode_name.empty()) cfg.set_mode(train::parse_mode(mode_name), reg);
  const std::string mode = train::mode_name(cfg.train.mode);
  const fs::path dir = fs::path(g.out) / ("pretrain-" + mode);

  const train::Corpus tr = pretrain_corpus(cfg, reg, false);
  const train::Corpus ho = pretrain_corpus(cfg, reg, true);
  out << "pretrain " << mode << ": " << tr.candidates.size() << " train windows, " << ho.candidates.size()
      << " held-out windows, " << cfg.train.sched.total_iters << " iterations\n";

  train::PretrainOptions opts;
  opts.out_dir = dir;
  opts.stop_at = stop_at;
  if (!resume.empty()) opts.resume = resume;
  opts.init_seed = cfg.init_seed;
  opts.base_model = cfg.model;
  const std::int64_t every = cfg.train.eval_interval;
  opts.on_step = [&](const train::StepMetrics& m) {
    if ((m.iter + 1) % every == 0) out << "  iter " << m.iter + 1 << "  loss " << fixed(m.loss_total) << "\n";
  };
  const train::PretrainResult res = train::pretrain(tr, ho, cfg.train, reg, opts);

  KvText meta;
  meta.set("output.mode", mode);
  meta.set("output.iter", static_cast<std::uint64_t>(res.state.iter));
  save_model64(res.state.params, dir / "model.tck", meta);

  const auto evals = read_jsonl(dir / "eval.jsonl");
  if (!evals.empty()) {
    const double first = evals.front().at("heldout_total"), last = evals.back().at("heldout_total");
    out << "held-out total " << fixed(first) << " -> " << fixed(last) << " (drop "
        << fixed(first > 0 ? 100.0 * (first - last) / first : 0.0, 1) << "%)\n";
  }
  write_manifest(dir, "pretrain --mode " + mode, cfg, reg,
                 {dir / "model.tck", res.checkpoint, dir / "metrics.jsonl", dir / "eval.jsonl"});
  out << "wrote " << (dir / "model.tck").string() << "\n";
  return kExitOk;
}

// ---- adapt -------------------------------------------------------------

fs::path default_checkpoint(const Globals& g) { return fs::path(g.out) / "pretrain-omni-multi" / "model.tck"; }

int cmd_adapt(const Globals& g, const std::string& id, std::string checkpoint, std::ostream& out) {
  const auto reg = synth::EncoderRegistry::desk_default();
  const RunConfig cfg = load_config(g, reg);
  if (!reg.contains(id)) throw RegistryError("adapt: unknown encoder id '" + id + "'");
  if (checkpoint.empty()) checkpoint = default_checkpoint(g).string();
  const model::TiconParams base = model::load_model(checkpoint);
  const train::Corpus corpus = adapt_corpus(cfg, reg, id);
  std::vector<train::StepMetrics> log;
  const model::TiconParams adapted = train::adapt_unseen(base, id, reg, corpus, cfg.adapt.cfg, &log);

  const fs::path dir = fs::path(g.out) / ("adapt-" + id);
  fs::create_directories(dir);
  std::ofstream metrics(dir / "metrics.jsonl", std::ios::trunc);
  for (auto m : log) {
    m.wallclock_ms = 0.0;
    metrics << m.to_json() << "\n";
  }
  metrics.close();
  KvText meta;
  meta.set("output.adapted", id);
  save_model64(adapted, dir / "model.tck", meta);
  write_manifest(dir, "adapt --encoder " + id, cfg, reg, {dir / "model.tck", dir / "metrics.jsonl"});
  if (!log.empty()) {
    out << "adapt " << id << ": loss " << fixed(log.front().loss_total) << " -> " << fixed(log.back().loss_total)
        << " over " << log.size() << " steps\n";
  }
  out << "wrote " << (dir / "model.tck").string() << "\n";
  return kExitOk;
}

// ---- contextualize -----------------------------------------------------

int cmd_contextualize(const Globals& g, std::string checkpoint, const std::string& id, const std::string& in_path,
                      const std::string& out_path, std::ostream& out) {
  const auto reg = synth::EncoderRegistry::desk_default();
  load_config(g, reg);
  if (checkpoint.empty()) checkpoint = default_checkpoint(g).string();
  const model::TiconParams params = model::load_model(checkpoint);
  const synth::EmbeddingGrid grid = synth::read_grid(in_path);
  if (grid.encoder_id != id) {
    throw ConfigError("contextualize: input grid holds encoder '" + grid.encoder_id + "' but --encoder is '" + id +
                      "'");
  }
  if (!params.config.has_input(id)) {
    throw ConfigError("contextualize: checkpoint has no input projector for encoder '" + id + "'");
  }
  const synth::EmbeddingGrid ctx = model::contextualize(params, id, grid);
  if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
  synth::write_grid(ctx, out_path);
  out << "contextualized " << grid.num_valid() << " tiles (" << grid.rows << "x" << grid.cols << ", d=" << grid.dim
      << " -> " << ctx.dim << ") -> " << out_path << "\n";
  return kExitOk;
}

// ---- aggregate ---------------------------------------------------------

int cmd_aggregate(const Globals& g, const std::string& src, std::string checkpoint, std::ostream& out) {
  const auto reg = synth::EncoderRegistry::desk_default();
  const RunConfig cfg = load_config(g, reg);
  const agg::Source source = agg::parse_source(src);
  std::optional<model::TiconParams> params;
  if (source == agg::Source::kCtx) {
    if (checkpoint.empty()) checkpoint = default_checkpoint(g).string();
    params = model::load_model(checkpoint);
  }
  const fs::path dir = fs::path(g.out) / ("aggregate-" + agg::source_name(source));
  const agg::AggResult res = train_aggregator(cfg, reg, source, params ? &*params : nullptr, dir);
  if (!res.evals.empty()) {
    const auto& a = res.evals.front();
    const auto& b = res.evals.back();
    out << "aggregate " << agg::source_name(source) << ": held-out loss " << fixed(a.loss) << " -> " << fixed(b.loss)
        << ", retrieval top-1 " << fixed(b.retrieval) << " (chance " << fixed(b.chance) << ")\n";
  }
  write_manifest(dir, "aggregate --source " + agg::source_name(source), cfg, reg,
                 {res.checkpoint, dir / "metrics.jsonl", dir / "eval.jsonl"});
  out << "wrote " << res.checkpoint.string() << "\n";
  return kExitOk;
}

// ---- eval --------------------------------------------------------------

struct EvalArgs {
  std::string task;
  std::string variant = "all";
  std::string checkpoint;
  std::string encoder;
  std::string aggregator;
  std::int64_t window = -1;
};

int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out) {
  const auto reg = synth::EncoderRegistry::desk_default();
  RunConfig cfg = load_config(g, reg);
  if (a.variant != "all" && a.variant != "raw" && a.variant != "iso" && a.variant != "ctx")
    throw ConfigError("eval: unknown variant '" + a.variant + "'");
  const fs::path ckpt_path = a.checkpoint.empty() ? default_checkpoint(g) : fs::path(a.checkpoint);
  std::vector<eval::EvalReport> reports;

  if (a.task == "slide") {
    if (a.variant == "iso") throw ConfigError("eval: the slide task has raw and ctx variants only");
    if (!a.aggregator.empty() && a.variant == "all")
      throw ConfigError("eval: --aggregator needs --variant raw or ctx");
    std::optional<model::TiconParams> params;
    for (const auto source : {agg::Source::kRaw, agg::Source::kCtx}) {
      const std::string name = agg::source_name(source);
      if (a.variant != "all" && a.variant != name) continue;
      if (source == agg::Source::kCtx && !params) params = model::load_model(ckpt_path);
      fs::path agg_path = a.aggregator.empty() ? fs::path(g.out) / ("aggregate-" + name) / "aggregator.tck"
                                               : fs::path(a.aggregator);
      std::optional<agg::AbmilParams> aggregator;
      if (fs::exists(agg_path)) {
        aggregator = agg::load_aggregator(agg_path);
      } else if (!a.aggregator.empty()) {
        throw ConfigError("eval: aggregator checkpoint '" + agg_path.string() + "' not found");
      } else {
        out << "note: no " << agg_path.string() << ", reporting meanpool-" << name << " only\n";
      }
      for (auto& r : slide_reports(cfg, reg, source, params ? &*params : nullptr, aggregator ? &*aggregator : nullptr))
        reports.push_back(std::move(r));
    }
  } else {
    std::vector<eval::TileTask> tasks;
    if (a.task == "tile") {
      tasks = {eval::TileTask::kClass, eval::TileTask::kAliased, eval::TileTask::kNonAliased};
    } else {
      tasks = {eval::parse_task(a.task)};
    }
    if (a.window >= 0) cfg.eval.bench.context_window = static_cast<std::size_t>(a.window);
    const std::string encoder = a.encoder.empty() ? cfg.eval.encoder : a.encoder;
    if (!reg.contains(encoder)) throw RegistryError("eval: unknown encoder id '" + encoder + "'");
    const model::TiconParams params = model::load_model(ckpt_path);
    if (!params.config.has_input(encoder))
      throw ConfigError("eval: checkpoint has no input projector for encoder '" + encoder + "'");
    const eval::BenchSlides bench = bench_slides(cfg, reg, encoder);
    const eval::TileFeatures f = eval::tile_features(params, encoder, bench, cfg.eval.bench);
    for (const auto t : tasks)
      for (auto& r : eval::run_variants(f, t, cfg.synth.alias_pair, cfg.eval.bench))
        if (a.variant == "all" || r.variant == a.variant) reports.push_back(std::move(r));
  }

  const fs::path dir = fs::path(g.out) / "eval";
  fs::create_directories(dir);
  std::string stem = a.task + "-" + a.variant;
  if (!a.encoder.empty() && a.encoder != cfg.eval.encoder) stem += "-" + a.encoder;
  const fs::path file = dir / (stem + ".jsonl");
  std::ofstream o(file, std::ios::trunc);
  for (const auto& r : reports) {
    o << r.to_json() << "\n";
    out << r.task << "  " << r.variant << "  " << r.metric << " " << fixed(r.value) << "  (" << r.selected << ")\n";
  }
  o.close();
  out << "wrote " << file.string() << "\n";
  return kExitOk;
}

// ---- report ------------------------------------------------------------

int cmd_report(const Globals& g, std::ostream& out) {
  const fs::path root(g.out);
  std::ostringstream md;
  md << "# Run report\n\n";

  std::vector<fs::path> pre;
  if (fs::exists(root))
    for (const auto& e : fs::directory_iterator(root))
      if (e.is_directory() && e.path().filename().string().rfind("pretrain-", 0) == 0 && fs::exists(e.path() / "eval.jsonl"))
        pre.push_back(e.path());
  std::sort(pre.begin(), pre.end());
  if (!pre.empty()) {
    md << "## Pretraining\n\n| run | iterations | held-out start | held-out end | drop |\n|---|---|---|---|---|\n";
    for (const auto& p : pre) {
      const auto ev = read_jsonl(p / "eval.jsonl");
      if (ev.empty()) continue;
      const double a = ev.front().at("heldout_total"), b = ev.back().at("heldout_total");
      md << "| " << p.filename().string() << " | " << ev.back().at("iter").get<std::int64_t>() << " | " << fixed(a)
         << " | " << fixed(b) << " | " << fixed(a > 0 ? 100.0 * (a - b) / a : 0.0, 1) << "% |\n";
    }
    md << "\n";
  }

  std::vector<fs::path> aggs;
  if (fs::exists(root))
    for (const auto& e : fs::directory_iterator(root))
      if (e.is_directory() && e.path().filename().string().rfind("aggregate-", 0) == 0 && fs::exists(e.path() / "eval.jsonl"))
        aggs.push_back(e.path());
  std::sort(aggs.begin(), aggs.end());
  if (!aggs.empty()) {
    md << "## Slide aggregator\n\n| run | held-out loss | retrieval top-1 | chance |\n|---|---|---|---|\n";
    for (const auto& p : aggs) {
      const auto ev = read_jsonl(p / "eval.jsonl");
      if (ev.empty()) continue;
      const auto& b = ev.back();
      md << "| " << p.filename().string() << " | " << fixed(b.at("heldout_loss")) << " | "
         << fixed(b.at("retrieval_top1")) << " | " << fixed(b.at("chance")) << " |\n";
    }
    md << "\n";
  }

  std::vector<fs::path> files;
  if (fs::exists(root / "eval"))
    for (const auto& e : fs::directory_iterator(root / "eval"))
      if (e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::vector<eval::EvalReport> rows;
    std::ifstream in(f);
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) rows.push_back(eval::EvalReport::from_json(line));
    if (rows.empty()) continue;
    md << "## " << f.stem().string() << "\n\n| task | variant | metric | value | selected |\n|---|---|---|---|---|\n";
    for (const auto& r : rows)
      md << "| " << r.task << " | " << r.variant << " | " << r.metric << " | " << fixed(r.value) << " | "
         << r.selected << " |\n";
    // Gains over the raw embedding of the same task.
    std::map<std::string, double> raw;
    for (const auto& r : rows)
      if (r.variant == "raw") raw[r.task] = r.value;
    bool any = false;
    for (const auto& r : rows) {
      const auto it = raw.find(r.task);
      if (r.variant == "raw" || it == raw.end()) continue;
      md << (any ? "" : "\n") << "- " << r.task << ": " << r.variant << " - raw = " << fixed(r.value - it->second)
         << "\n";
      any = true;
    }
    md << "\n";
  }
  if (pre.empty() && aggs.empty() && files.empty()) throw DatasetError("report: nothing to report under '" + g.out + "'");

  fs::create_directories(root);
  std::ofstream(root / "report.md", std::ios::trunc) << md.str();
  out << md.str() << "wrote " << (root / "report.md").string() << "\n";
  return kExitOk;
}

// ---- selftest ------------------------------------------------------------

int cmd_selftest(const Globals& g, std::ostream& out) {
  if (g.threads) set_thread_count(g.threads);
  const auto checks = run_selftest(out);
  const auto failed = std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.passed; });
  out << (checks.size() - failed) << "/" << checks.size() << " checks passed\n";
  return failed ? kExitNumerical : kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tile-embedding contextualization desk pipeline", "ticon"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run config file (sectioned key=value)");
  app.add_option("--set", g.sets, "Override one config key, e.g. --set train.total_iters=200")
      ->take_all()
      ->expected(1);
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (overrides run.threads)")->check(CLI::PositiveNumber);

  std::string cohort = "eval";
  auto* synth_cmd = app.add_subcommand("synth", "Generate slides and write every encoder's grid files");
  synth_cmd->add_option("--cohort", cohort,
                        "eval | corpus-train | corpus-heldout | adapt | aggregate-train | aggregate-heldout | "
                        "aggregate-probe | all")
      ->capture_default_str();

  std::string mode, resume;
  std::int64_t stop_at = -1;
  auto* pre_cmd = app.add_subcommand("pretrain", "OFMM pretraining");
  pre_cmd->add_option("--mode", mode, "omni-multi | omni-single | individual (default: train.mode)");
  pre_cmd->add_option("--resume", resume, "Training checkpoint (ckpt-*.tck) to continue from");
  pre_cmd->add_option("--stop-at", stop_at, "Stop after this iteration");

  std::string encoder, checkpoint;
  auto* adapt_cmd = app.add_subcommand("adapt", "Attach and train projectors for an unseen encoder");
  adapt_cmd->add_option("--encoder", encoder, "Unseen encoder id")->required();
  adapt_cmd->add_option("--checkpoint", checkpoint, "Base model (default: <out>/pretrain-omni-multi/model.tck)");

  std::string in_path, out_path;
  auto* ctx_cmd = app.add_subcommand("contextualize", "Contextualize one grid file");
  ctx_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint");
  ctx_cmd->add_option("--encoder", encoder, "Encoder id of the input grid")->required();
  ctx_cmd->add_option("--in", in_path, "Input grid file")->required();
  ctx_cmd->add_option("--out", out_path, "Output grid file")->required();

  std::string source;
  auto* agg_cmd = app.add_subcommand("aggregate", "Contrastive slide aggregator pretraining");
  agg_cmd->add_option("--source", source, "raw | ctx")->required();
  agg_cmd->add_option("--checkpoint", checkpoint, "Model for ctx features");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Frozen-feature probes");
  eval_cmd->add_option("--task", ea.task, "tile | tile-class | tile-aliased | tile-nonaliased | spot | slide")
      ->required();
  eval_cmd->add_option("--variant", ea.variant, "raw | iso | ctx | all")->capture_default_str();
  eval_cmd->add_option("--checkpoint", ea.checkpoint, "Model checkpoint");
  eval_cmd->add_option("--encoder", ea.encoder, "Tile encoder (default: eval.encoder)");
  eval_cmd->add_option("--window", ea.window, "Contextualize in w x w blocks (0 = whole grid)");
  eval_cmd->add_option("--aggregator", ea.aggregator, "Aggregator checkpoint for the slide task");

  auto* report_cmd = app.add_subcommand("report", "Render comparison tables into <out>/report.md");
  auto* self_cmd = app.add_subcommand("selftest", "Run the invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "ticon: " << e.what() << "\n";
    return kExitConfig;
  }

  // The contextualize subcommand's --out names a file; the run directory
  // then stays at its default unless given before the subcommand.
  try {
    if (synth_cmd->parsed()) return cmd_synth(g, cohort, out);
    if (pre_cmd->parsed()) return cmd_pretrain(g, mode, resume, stop_at, out);
    if (adapt_cmd->parsed()) return cmd_adapt(g, encoder, checkpoint, out);
    if (ctx_cmd->parsed()) return cmd_contextualize(g, checkpoint, encoder, in_path, out_path, out);
    if (agg_cmd->parsed()) return cmd_aggregate(g, source, checkpoint, out);
    if (eval_cmd->parsed()) return cmd_eval(g, ea, out);
    if (report_cmd->parsed()) return cmd_report(g, out);
    if (self_cmd->parsed()) return cmd_selftest(g, out);
  } catch (const std::exception& e) {
    err << "ticon: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitConfig;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"ticon"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ticon::cli
