#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ordisco/buffers.hpp"
#include "ordisco/importance.hpp"
#include "ordisco/losses.hpp"
#include "ordisco/nets.hpp"
#include "ordisco/types.hpp"

namespace ordisco::train {

using nn::Mat;
using nn::Vec;

enum class Method { kOrdisco, kJt, kSt, kSmb, kSmbUmb, kEwc, kMas };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct TrainConfig {
  Method method = Method::kOrdisco;
  double alpha = 0.5;               // D fake-pair balance
  double lambda = 0.001;            // D-consistency strength
  double ema_decay = 0.99;          // teacher beta
  double consistency_weight = 1.0;  // multiplier on the MT term
  double lr_c = 1e-3;
  double lr_gd = 2e-4;
  double adam_beta1_gd = 0.5;
  double adam_beta2_gd = 0.999;
  int steps_per_batch = 2000;
  int labeled_batch_size = 32;
  int unlabeled_batch_size = 128;
  int replay_start_batch = 2;  // generator is untrained during batch 1
  std::uint64_t seed = 0;
  bool replay_on = true;  // Table 3 ablation flags
  bool reg_on = true;
  bool pseudo_label_sample = false;    // sample yhat from softmax instead of argmax
  bool generator_literal_loss = false; // printed-form G loss, for comparison
  int xi_subsample_cap = 1024;
  int smb_capacity = 0;     // 0 = store-all
  int umb_capacity = 10000; // SMB+UMB baseline
  double lambda_reg = 1.0;  // EWC/MAS strength
  std::string reg_scope = "sl_only";  // sl_only | sl_plus_ul
  TripleSpec arch;          // image/num_classes filled by the caller
  int eval_max_test = 0;    // 0 = full test set
};

/// Fisher-style (EWC) importance: mean squared per-sample gradient of the
/// log-likelihood of the given labels.
Vec estimate_ewc_importance(nn::Network& classifier, const Mat& images,
                            const std::vector<int>& labels);

/// MAS importance: mean absolute per-sample gradient of the squared l2 norm
/// of the (softmax) output. `apply_softmax=false` uses the raw network output
/// (for networks that already squash, e.g. a sigmoid head).
Vec estimate_mas_importance(nn::Network& net, const Mat& images,
                            bool apply_softmax = true);

/// One SSCL run: owns the model triple, teacher, buffers, importance state
/// and RNG streams. Supports checkpoint/resume mid-stream.
class Trainer {
 public:
  Trainer(const TaskSequence& sequence, const TrainConfig& config,
          const std::vector<Sample>& test_set, std::string config_hash = "");

  /// Train all remaining batches; returns the full metrics so far.
  std::vector<MetricsRecord> run();
  /// Train at most `max_batches` more incremental batches.
  std::vector<MetricsRecord> run(int max_batches);

  /// One inner optimization step on the current batch (exposed for tests).
  losses::LossBreakdown train_inner_step(int flat_batch_idx);

  int batches_completed() const { return next_batch_; }
  int total_batches() const { return static_cast<int>(flat_.size()); }
  bool done() const { return next_batch_ >= total_batches(); }
  const std::vector<MetricsRecord>& metrics() const { return metrics_; }
  const losses::LossBreakdown& last_losses() const { return last_losses_; }

  ModelTriple& model() { return model_; }
  EmaTeacher& teacher() { return teacher_; }
  const reg::ImportanceVector& xi() const { return xi_; }
  reg::ImportanceVector& xi_mutable() { return xi_; }
  const ParamSnapshot& anchor() const { return anchor_; }
  const SupervisedBuffer& smb() const { return smb_; }
  const UnsupervisedBuffer& umb() const { return umb_; }
  const std::set<int>& classes_seen() const { return classes_seen_; }
  const TrainConfig& config() const { return cfg_; }

  void save_checkpoint(const std::string& path) const;
  /// Restores model/optimizer/buffer/RNG state saved by save_checkpoint.
  /// The sequence, config and test set must match the original run.
  void load_checkpoint(const std::string& path);

  /// Diagnostic dump written on NaN aborts.
  std::string diagnostic_dump() const;

 private:
  struct FlatBatch {
    const SemiSupBatch* batch;
    int task_index;
  };

  void train_one_batch();
  void after_batch(const FlatBatch& fb);
  void evaluate_batch(const SemiSupBatch& batch, double wall_time_s);
  losses::LossBreakdown classifier_step(const std::vector<const Sample*>& labeled_pool,
                                        const std::vector<const Sample*>& unlabeled_pool,
                                        int batch_index);
  std::vector<const Sample*> labeled_pool(const FlatBatch& fb) const;
  std::vector<const Sample*> unlabeled_pool(const FlatBatch& fb) const;
  Mat gather_images(const std::vector<const Sample*>& pool,
                    const std::vector<std::size_t>& idx) const;
  std::vector<int> sample_seen_labels(int n);

  TrainConfig cfg_;
  std::string config_hash_;
  std::vector<FlatBatch> flat_;
  const TaskSequence* sequence_;
  const std::vector<Sample>* test_set_;

  ModelTriple model_;
  EmaTeacher teacher_;
  nn::Adam adam_c_, adam_g_, adam_d_;
  SupervisedBuffer smb_;
  UnsupervisedBuffer umb_;
  reg::ImportanceVector xi_;
  ParamSnapshot anchor_;
  // EWC/MAS running importance and classifier anchor.
  Vec omega_;
  int omega_batches_ = 0;
  std::vector<double> anchor_c_;

  // JT pools accumulate every sample seen.
  std::vector<Sample> jt_labeled_, jt_unlabeled_;

  std::set<int> classes_seen_;
  std::vector<int> classes_seen_sorted_;
  int next_batch_ = 0;
  std::vector<MetricsRecord> metrics_;
  losses::LossBreakdown last_losses_;

  Rng rng_train_, rng_sample_, rng_buffer_;
};

struct SweepEntry {
  std::string label;
  TrainConfig config;
};

struct SweepRow {
  std::string label;
  std::uint64_t seed = 0;
  double final_accuracy = -1.0;
  double best_accuracy = -1.0;
  std::string error;  // empty on success
};

/// Runs each config to completion; failures are recorded per row and the
/// sweep continues.
std::vector<SweepRow> sweep(const std::vector<SweepEntry>& entries,
                            const TaskSequence& sequence,
                            const std::vector<Sample>& test_set);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace ordisco::train
