// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ticon/kvtext.hpp"
#include "ticon/model/params.hpp"
#include "ticon/numerics/optim.hpp"
#include "ticon/train/corpus.hpp"
#include "ticon/train/mask.hpp"

namespace ticon::train {

enum class Mode { kOmniMulti, kOmniSingle, kIndividual };

std::string mode_name(Mode m);
/// Accepts "omni-multi", "omni-single", "individual"; ConfigError otherwise.
Mode parse_mode(const std::string& s);

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t window = 4;  // K
  num::Schedule sched{1e-3, 200, 2000, 0.1};
  double m_r = 0.75;
  double p_r = 0.25;
  num::AdamWHyper hyper{};
  Mode mode = Mode::kOmniMulti;
  std::vector<std::string> inputs;
  std::vector<std::string> targets;
  std::uint64_t seed = 0x0F33D5EEDull;
  std::int64_t eval_interval = 100;
  std::int64_t checkpoint_interval = 500;

  /// ConfigError for bad ratios, empty id lists, an individual mode that is
  /// not exactly {A} -> {A}, or a zero batch.
  void validate() const;
  /// Targets reconstructed when `input` is the sampled input encoder.
  std::vector<std::string> targets_for(const std::string& input) const;

  void write(KvText& kv, const std::string& section = "train") const;
  static TrainConfig read(const KvText& kv, const std::string& section = "train");
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Desk defaults over the registry's pretraining encoders.
TrainConfig desk_train_config(const synth::EncoderRegistry& registry, Mode mode = Mode::kOmniMulti);

/// Model config matching a training config: projectors for the inputs,
/// heads for every target reachable from them.
model::ModelConfig model_config_for(const TrainConfig& cfg, const synth::EncoderRegistry& registry,
                                    const model::ModelConfig& base);

/// Mean over rows of (1 - cos(y_r, t_r)). NumericalError on a zero-norm row.
double cosine_loss(const num::Tensor& y, const num::Tensor& target);

struct LossBreakdown {
  double total = 0.0;
  std::map<std::string, double> per_target;
};

/// Multi-target reconstruction loss of one aligned window under `plan`.
LossBreakdown ofmm_loss(const model::TiconParams& params, const std::string& input_id, const GridSet& grids,
                        const MaskPlan& plan, const std::vector<std::string>& targets);

/// Batch-mean loss of several windows packed into one sequence (items never
/// attend across each other). Records onto `tape`, so calling backward on
/// the returned total yields parameter gradients.
struct PackedLoss {
  num::Var total;
  std::map<std::string, num::Var> per_target;
};
PackedLoss packed_ofmm_loss(num::Tape& tape, model::TiconParams& params, const std::string& input_id,
                            std::span<const GridSet* const> items, std::span<const MaskPlan> plans,
                            const std::vector<std::string>& targets);

struct TrainState {
  model::TiconParams params;
  num::OptState opt;
  std::int64_t iter = 0;
  /// Exponential moving average of each target's loss (decay 0.98).
  std::map<std::string, double> loss_ema;
};

struct StepMetrics {
  std::int64_t iter = 0;  // the iteration that was executed
  double lr = 0.0;
  std::string input_encoder;
  double loss_total = 0.0;
  std::map<std::string, double> loss_per_target;
  double wallclock_ms = 0.0;

  std::string to_json() const;
};

/// The input encoder drawn for iteration `iter` (omni modes draw uniformly).
std::string sample_input(const TrainConfig& cfg, std::int64_t iter);

/// One optimizer step over `batch`. Mask plans and the input encoder are
/// drawn from streams keyed on (cfg.seed, state.iter), so a restored state
/// continues exactly where the original run would have gone.
StepMetrics train_step(TrainState& state, std::span<const GridSet* const> batch, const TrainConfig& cfg);

/// Held-out evaluation: every item is scored with every input encoder under
/// a fixed per-item mask plan. `pairwise[i][j]` is the mean loss of target j
/// from input i, `total` the mean over inputs of the summed target losses
/// (in the mode's target set).
struct EvalResult {
  std::int64_t iter = 0;
  double total = 0.0;
  std::map<std::string, std::map<std::string, double>> pairwise;

  std::string to_json() const;
};
EvalResult evaluate(const model::TiconParams& params, const TrainConfig& cfg, std::span<const GridSet> items,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& targets,
                    std::uint64_t plan_seed);

struct PretrainOptions {
  std::filesystem::path out_dir;
  /// Stop after this iteration (simulated interruption); -1 runs to the end.
  std::int64_t stop_at = -1;
  std::optional<std::filesystem::path> resume;
  /// Zeroes wallclock_ms so metric files are byte-reproducible.
  bool deterministic = true;
  std::size_t eval_items = 64;
  std::uint64_t init_seed = 1;
  model::ModelConfig base_model{};
  /// Called after every step with the metrics just produced.
  std::function<void(const StepMetrics&)> on_step;
};

struct PretrainResult {
  std::filesystem::path checkpoint;
  std::vector<EvalResult> evals;
  TrainState state;
};

/// Runs train_step to cfg.sched.total_iters over `train` windows, evaluates
/// on `heldout` every eval_interval (and at iteration 0 and the end), writes
/// metrics.jsonl / eval.jsonl and TCK1 checkpoints (64-bit, including AdamW
/// moments) under out_dir. RegistryError when a corpus lacks an encoder the
/// config names.
PretrainResult pretrain(const Corpus& train, const Corpus& heldout, const TrainConfig& cfg,
                        const synth::EncoderRegistry& registry, const PretrainOptions& opts);

/// Training checkpoint I/O. The container holds the model, the AdamW moments
/// under "opt.m/<name>" and "opt.v/<name>", and [train] / [state] sections.
void save_train_state(const TrainState& state, const TrainConfig& cfg, const std::string& registry_digest,
                      const std::filesystem::path& path);
TrainState load_train_state(const std::filesystem::path& path, TrainConfig* cfg_out = nullptr);

struct AdaptConfig {
  std::int64_t iters = 600;
  std::size_t batch_size = 32;
  std::size_t window = 4;
  double base_lr = 3e-3;
  std::int64_t warmup = 50;
  double m_r = 0.75;
  double p_r = 0.25;
  std::uint64_t seed = 0xADA97;
};

/// Copy of `base` with freshly initialized rho_u and psi_u for `unseen_id`
/// (the untrained-projector starting point of adaptation).
model::TiconParams attach_encoder(const model::TiconParams& base, const std::string& unseen_id,
                                  const synth::EncoderRegistry& registry, std::uint64_t seed);

/// Adds rho_u and psi_u for `unseen_id`, freezes everything else and trains
/// the new projectors on single-target self-reconstruction. RegistryError if
/// the id is already in the model or missing from the registry or corpus.
model::TiconParams adapt_unseen(const model::TiconParams& base, const std::string& unseen_id,
                                const synth::EncoderRegistry& registry, const Corpus& corpus,
                                const AdaptConfig& cfg, std::vector<StepMetrics>* log = nullptr);

}  // namespace ticon::train
