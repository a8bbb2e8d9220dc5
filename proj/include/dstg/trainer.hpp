#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dstg/grounding.hpp"
#include "dstg/langenc.hpp"
#include "dstg/metrics.hpp"
#include "dstg/model.hpp"
#include "dstg/objectives.hpp"

namespace dstg {

struct TrainConfig {
  Scalar lambda = 0.2;
  int negative_ratio = 5;
  int max_positives = 4;
  Scalar learning_rate = 0.05;
  int steps = 960;
  std::uint64_t seed = 1;
  AblationFlags flags;
  ModelConfig model;
  GraphConfig graph;
  FeatureConfig features;
  LinkConfig link;

  GroundConfig ground_config() const { return {graph, features, link, flags}; }
};

std::vector<std::string> validate_train_config(const TrainConfig& cfg);

struct Checkpoint {
  ModelParameters params;
  TrainConfig config;
  Vocabulary vocab;
  long step = 0;
  Rng::State rng_state{};
};

struct TrainLogEntry {
  long step = 0;
  LossBreakdown loss;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(long step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// Plain gradient descent over shuffled (video, expression) cases, one case
// per step, reshuffled every epoch from the master seed. Deterministic given
// (data, config); throws TrainingDiverged on a non-finite loss.
Checkpoint train(const std::vector<VideoSample>& data, const TrainConfig& cfg,
                 std::vector<TrainLogEntry>* log = nullptr);

struct GradCheckReport {
  Scalar max_rel_err = 0;
  std::map<std::string, Scalar> per_tensor;
};

// Central finite differences (step 1e-5) against the tape gradients on a
// 2-frame / 4-region instance, covering every parameter group. When
// `corrupt_tensor` is set the analytic gradient of that tensor is perturbed
// first, to confirm the harness notices broken gradients.
GradCheckReport grad_check(const TrainConfig& cfg,
                           const std::string* corrupt_tensor = nullptr);

// Ground every expression of every sample and score against the dataset GT.
EvalReport evaluate_model(const std::vector<VideoSample>& samples,
                          const ModelParameters& params, const Vocabulary& vocab,
                          const GroundConfig& cfg, EvalSplit split);

std::vector<CaseGroundTruth> dataset_ground_truths(
    const std::vector<VideoSample>& samples);
CasePrediction to_case_prediction(const GroundingResult& result,
                                  const VideoSample& sample);

struct AblationRow {
  std::string name;
  AblationFlags flags;
  Scalar m_viou = 0;  // median over seeds on the held-out split
  std::vector<Scalar> per_seed;
};

// The seven module-ablation rows, trained with shared seeds and evaluated
// on the trailing hold-out fraction of the dataset.
std::vector<AblationRow> run_ablation(const std::vector<VideoSample>& data,
                                      const TrainConfig& base,
                                      const std::vector<std::uint64_t>& seeds,
                                      Scalar holdout_fraction = 0.2);

Scalar median(std::vector<Scalar> v);

}  // namespace dstg
