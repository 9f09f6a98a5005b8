// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "ticon/cli/app.hpp"
#include "ticon/train/ofmm.hpp"

namespace fs = std::filesystem;

namespace ticon::cli {

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::vector<Check> pretrain_checks(const synth::EncoderRegistry& reg) {
  const fs::path root = fs::temp_directory_path() / ("ticon-selftest-" + std::to_string(std::random_device{}()));
  const auto seeds = train::seed_range(700, 2);
  const synth::CandidateConfig cc{4, 0.55, 6};
  const train::Corpus tr = train::build_corpus(synth::SynthConfig{}, reg, reg.pretraining_ids(), seeds, cc, 11);
  const train::Corpus ho = train::build_corpus(synth::SynthConfig{}, reg, reg.pretraining_ids(),
                                               train::seed_range(800, 1), cc, 12);
  train::TrainConfig cfg = train::desk_train_config(reg);
  cfg.batch_size = 4;
  cfg.sched = {1e-3, 2, 6, 0.1};
  cfg.eval_interval = 3;
  cfg.checkpoint_interval = 100;

  auto run = [&](const std::string& name, std::int64_t stop_at, const fs::path* resume) {
    train::PretrainOptions o;
    o.out_dir = root / name;
    o.stop_at = stop_at;
    if (resume) o.resume = *resume;
    o.eval_items = 4;
    train::pretrain(tr, ho, cfg, reg, o);
    return o.out_dir;
  };
  const fs::path a = run("a", -1, nullptr), b = run("b", -1, nullptr);
  const bool same = slurp(a / "metrics.jsonl") == slurp(b / "metrics.jsonl") &&
                    slurp(a / "eval.jsonl") == slurp(b / "eval.jsonl") &&
                    slurp(a / "ckpt-000006.tck") == slurp(b / "ckpt-000006.tck");
  run("c", 3, nullptr);
  const fs::path mid = root / "c" / "ckpt-000003.tck";
  const fs::path c = run("c", -1, &mid);
  const bool resumed = slurp(a / "metrics.jsonl") == slurp(c / "metrics.jsonl") &&
                       slurp(a / "ckpt-000006.tck") == slurp(c / "ckpt-000006.tck");
  std::error_code ec;
  fs::remove_all(root, ec);
  return {{"pretrain determinism", same, "two 6-step runs, metrics, eval and checkpoint bytes"},
          {"pretrain resume", resumed, "stop at 3, resume, compare with the uninterrupted run"}};
}

}  // namespace

std::vector<Check> run_selftest(std::ostream& log) {
  const auto reg = synth::EncoderRegistry::desk_default();
  std::vector<Check> all;
  auto add = [&](Check c) {
    log << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << "\n" << std::flush;
    all.push_back(std::move(c));
  };
  const auto t0 = std::chrono::steady_clock::now();

  double worst = 0.0;
  std::string worst_op;
  for (const auto& g : primitive_grad_checks(10)) {
    if (g.error >= worst) {
      worst = g.error;
      worst_op = g.op;
    }
    if (g.error > 1e-5) add({"grad " + g.op, false, sci(g.error) + " > 1e-5"});
  }
  add({"primitive gradients", worst <= 1e-5, "worst " + sci(worst) + " (" + worst_op + ")"});
  const double pipe = pipeline_grad_check(reg);
  add({"ofmm pipeline gradient", pipe <= 1e-4, sci(pipe) + " (limit 1e-4)"});

  for (auto& c : mask_law_checks(2000)) add(std::move(c));
  for (auto& c : format_checks(reg)) add(std::move(c));
  for (auto& c : aggregator_checks()) add(std::move(c));
  for (auto& c : pretrain_checks(reg)) add(std::move(c));

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f s", secs);
  log << "selftest finished in " << buf << "\n";
  return all;
}

}  // namespace ticon::cli
