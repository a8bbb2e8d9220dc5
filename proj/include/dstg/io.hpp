#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dstg/grounding.hpp"
#include "dstg/manifest.hpp"
#include "dstg/metrics.hpp"
#include "dstg/stgraph.hpp"
#include "dstg/synthdata.hpp"
#include "dstg/trainer.hpp"

namespace dstg {

inline constexpr const char* kDatasetSchema = "gvg-synth/1";
inline constexpr const char* kPredictionSchema = "pred/1";
inline constexpr const char* kReportSchema = "eval/1";
inline constexpr const char* kCheckpointMagic = "DSTGCKP1";

nlohmann::json sample_to_json(const VideoSample& s);
VideoSample sample_from_json(const nlohmann::json& j);

// JSON-lines dataset: a schema+manifest header line, then one VideoSample
// per line, coordinates in absolute pixels.
void write_dataset(const std::string& path, const std::vector<VideoSample>& samples,
                   const RunManifest& manifest);
std::vector<VideoSample> read_dataset(const std::string& path,
                                      RunManifest* manifest = nullptr);

nlohmann::json grounding_to_json(const GroundingResult& r, const VideoSample& sample);

// Predictions: header line, then one GroundingResult per (video, expression)
// with tube boxes resolved to pixels.
void write_predictions(const std::string& path,
                       const std::vector<GroundingResult>& results,
                       const std::vector<VideoSample>& samples,
                       const RunManifest& manifest);
std::vector<CasePrediction> read_predictions(const std::string& path,
                                             RunManifest* manifest = nullptr);

// Same file, with entries and per-region scores intact (report emitter).
std::vector<GroundingResult> read_grounding_results(const std::string& path,
                                                    RunManifest* manifest = nullptr);

nlohmann::json report_to_json(const EvalReport& report, const RunManifest& manifest);
void write_report(const std::string& path, const EvalReport& report,
                  const RunManifest& manifest);

void write_train_log(const std::string& path, const std::vector<TrainLogEntry>& log,
                     const RunManifest& manifest);

// Versioned binary container: magic, JSON header (config, vocab, manifest,
// tensor index, rng state), then raw little-endian doubles per tensor.
// save(load(x)) is byte-identical given the loaded manifest.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt,
                     const RunManifest& manifest);
Checkpoint load_checkpoint(const std::string& path, RunManifest* manifest = nullptr);

nlohmann::json graph_to_json(const DualGraph& g);

nlohmann::json generator_config_to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json ablation_to_json(const std::vector<AblationRow>& rows,
                                const RunManifest& manifest);

}  // namespace dstg
