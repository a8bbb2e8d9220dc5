#include "dstg/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "dstg/io.hpp"
#include "dstg/report.hpp"

namespace dstg {

namespace {

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

std::string join_args(const std::vector<std::string>& args) {
  std::string out = "dstg";
  for (const auto& a : args) out += " " + a;
  return out;
}

struct GenOptions {
  std::string out, config;
  int num_videos = 10;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int run_gen(const GenOptions& opt, const std::string& command) {
  GeneratorConfig cfg;
  std::string config_dump = generator_config_to_json(cfg).dump();
  if (!opt.config.empty()) {
    cfg = generator_config_from_json(load_json_file(opt.config));
    config_dump = generator_config_to_json(cfg).dump();
  }
  auto issues = validate_config(cfg);
  if (!issues.empty()) {
    std::string msg = "invalid generator config:";
    for (const auto& s : issues) msg += " " + s + ";";
    throw std::runtime_error(msg);
  }

  std::uint64_t seed = opt.seed;
  if (!opt.seed_set) {
    std::random_device rd;
    seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }

  RunManifest manifest = RunManifest::make(
      command + (opt.seed_set ? "" : " --seed " + std::to_string(seed)));
  manifest.config_hash = hash_hex(config_dump);

  Rng master(seed);
  std::vector<VideoSample> samples;
  samples.reserve(static_cast<std::size_t>(opt.num_videos));
  for (int i = 0; i < opt.num_videos; ++i) {
    VideoSample s = generate_video(cfg, master.next_u64());
    auto violations = validate_sample(s);
    if (!violations.empty()) {
      std::string msg = "generated sample failed validation: " + violations[0];
      throw std::runtime_error(msg);
    }
    samples.push_back(std::move(s));
  }
  write_dataset(opt.out, samples, manifest);
  std::cout << "wrote " << samples.size() << " videos to " << opt.out
            << " (seed " << seed << ")\n";
  return 0;
}

struct TrainOptions {
  std::string data, config, out, log;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int steps = -1;
};

int run_train(const TrainOptions& opt, const std::string& command) {
  TrainConfig cfg;
  if (!opt.config.empty()) cfg = train_config_from_json(load_json_file(opt.config));
  if (opt.seed_set) cfg.seed = opt.seed;
  if (opt.steps >= 0) cfg.steps = opt.steps;
  auto issues = validate_train_config(cfg);
  if (!issues.empty()) {
    std::string msg = "invalid train config:";
    for (const auto& s : issues) msg += " " + s + ";";
    throw std::runtime_error(msg);
  }

  RunManifest manifest = RunManifest::make(command);
  manifest.config_hash = hash_hex(train_config_to_json(cfg).dump());
  manifest.dataset_hash = file_hash_hex(opt.data);

  const auto data = read_dataset(opt.data);
  std::vector<TrainLogEntry> log;
  Checkpoint ckpt = train(data, cfg, &log);
  save_checkpoint(opt.out, ckpt, manifest);
  {
    std::ofstream vout(opt.out + ".vocab.json");
    vout << nlohmann::json(ckpt.vocab.tokens).dump(2) << "\n";
  }
  if (!opt.log.empty()) write_train_log(opt.log, log, manifest);
  std::cout << "trained " << ckpt.step << " steps; final L_total "
            << (log.empty() ? 0.0 : log.back().loss.l_total) << "; wrote "
            << opt.out << "\n";
  return 0;
}

struct GroundOptions {
  std::string data, ckpt, out, dump_graph;
};

int run_ground(const GroundOptions& opt, const std::string& command) {
  RunManifest manifest = RunManifest::make(command);
  manifest.dataset_hash = file_hash_hex(opt.data);
  manifest.checkpoint_hash = file_hash_hex(opt.ckpt);

  const auto data = read_dataset(opt.data);
  Checkpoint ckpt = load_checkpoint(opt.ckpt);
  manifest.config_hash = hash_hex(train_config_to_json(ckpt.config).dump());
  const GroundConfig gcfg = ckpt.config.ground_config();

  std::vector<GroundingResult> results;
  for (const auto& s : data)
    for (std::size_t e = 0; e < s.expressions.size(); ++e)
      results.push_back(ground(s, static_cast<int>(e), ckpt.params, ckpt.vocab, gcfg));
  write_predictions(opt.out, results, data, manifest);

  if (!opt.dump_graph.empty()) {
    std::ofstream gout(opt.dump_graph);
    for (const auto& s : data) {
      nlohmann::json j = graph_to_json(build_dual_graph(s, gcfg.graph));
      j["video_id"] = s.video_id;
      gout << j.dump() << "\n";
    }
  }
  std::cout << "grounded " << results.size() << " cases to " << opt.out << "\n";
  return 0;
}

struct EvalOptions {
  std::string pred, gt, split = "all", out;
};

int run_eval(const EvalOptions& opt, const std::string& command) {
  RunManifest manifest = RunManifest::make(command);
  manifest.dataset_hash = file_hash_hex(opt.gt);

  const auto preds = read_predictions(opt.pred);
  const auto data = read_dataset(opt.gt);
  EvalReport report =
      match_and_score(preds, dataset_ground_truths(data), split_from(opt.split));
  write_report(opt.out, report, manifest);
  std::cout << "split " << opt.split << ": m_vIoU " << report.m_viou << ", m_tIoU "
            << report.m_tiou << " over " << report.num_cases << " cases ("
            << report.num_missing << " missing)\n";
  return 0;
}

struct AblateOptions {
  std::string data, config, out;
  std::string seeds = "1,2,3";
};

int run_ablate(const AblateOptions& opt, const std::string& command) {
  TrainConfig base;
  if (!opt.config.empty()) base = train_config_from_json(load_json_file(opt.config));

  std::vector<std::uint64_t> seeds;
  std::stringstream ss(opt.seeds);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) seeds.push_back(std::stoull(item));
  if (seeds.empty()) throw std::runtime_error("no seeds given");

  RunManifest manifest = RunManifest::make(command);
  manifest.dataset_hash = file_hash_hex(opt.data);
  manifest.config_hash = hash_hex(train_config_to_json(base).dump());

  const auto data = read_dataset(opt.data);
  const auto rows = run_ablation(data, base, seeds);
  {
    std::ofstream out(opt.out);
    out << ablation_to_json(rows, manifest).dump(2) << "\n";
  }
  std::cout << "| configuration | m_vIoU |\n|---|---|\n";
  for (const auto& r : rows) std::cout << "| " << r.name << " | " << r.m_viou << " |\n";
  return 0;
}

struct ReportOptions {
  std::string pred, data, out;
};

int run_report(const ReportOptions& opt, const std::string& command) {
  RunManifest manifest = RunManifest::make(command);
  manifest.dataset_hash = file_hash_hex(opt.data);

  const auto preds = read_grounding_results(opt.pred);
  const auto data = read_dataset(opt.data);
  emit_report(opt.out, preds, data, manifest);
  std::cout << "report written to " << opt.out << "/index.html\n";
  return 0;
}

}  // namespace

int cmd_dispatch(const std::vector<std::string>& args) {
  CLI::App app{"decoupled spatial-temporal graph grounding on synthetic video"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "machine-readable errors on stderr");

  GenOptions gen_opt;
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--out", gen_opt.out, "output dataset (jsonl)")->required();
  gen->add_option("--num-videos", gen_opt.num_videos, "number of videos");
  auto* seed_flag = gen->add_option("--seed", gen_opt.seed, "master seed");
  gen->add_option("--config", gen_opt.config, "generator config json");

  TrainOptions train_opt;
  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--data", train_opt.data, "dataset (jsonl)")->required();
  tr->add_option("--config", train_opt.config, "train config json");
  tr->add_option("--out", train_opt.out, "checkpoint output")->required();
  tr->add_option("--log", train_opt.log, "training log (jsonl)");
  auto* tr_seed = tr->add_option("--seed", train_opt.seed, "seed override");
  tr->add_option("--steps", train_opt.steps, "steps override");

  GroundOptions ground_opt;
  auto* gr = app.add_subcommand("ground", "run grounding inference");
  gr->add_option("--data", ground_opt.data, "dataset (jsonl)")->required();
  gr->add_option("--ckpt", ground_opt.ckpt, "checkpoint")->required();
  gr->add_option("--out", ground_opt.out, "predictions output (jsonl)")->required();
  gr->add_option("--dump-graph", ground_opt.dump_graph, "adjacency dump (jsonl)");

  EvalOptions eval_opt;
  auto* ev = app.add_subcommand("eval", "score predictions against ground truth");
  ev->add_option("--pred", eval_opt.pred, "predictions (jsonl)")->required();
  ev->add_option("--gt", eval_opt.gt, "dataset (jsonl)")->required();
  ev->add_option("--split", eval_opt.split, "all|vg_easy|sg_hard|tg_hard");
  ev->add_option("--out", eval_opt.out, "report output (json)")->required();

  AblateOptions ablate_opt;
  auto* ab = app.add_subcommand("ablate", "train and score the module-ablation table");
  ab->add_option("--data", ablate_opt.data, "dataset (jsonl)")->required();
  ab->add_option("--out", ablate_opt.out, "table output (json)")->required();
  ab->add_option("--config", ablate_opt.config, "base train config json");
  ab->add_option("--seeds", ablate_opt.seeds, "comma-separated seeds");

  ReportOptions report_opt;
  auto* rp = app.add_subcommand("report", "emit the static grounding overlay report");
  rp->add_option("--pred", report_opt.pred, "predictions (jsonl)")->required();
  rp->add_option("--data", report_opt.data, "dataset (jsonl)")->required();
  rp->add_option("--out", report_opt.out, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (json_errors)
      std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "usage"}}.dump()
                << "\n";
    else
      std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  const std::string command = join_args(args);
  try {
    gen_opt.seed_set = seed_flag->count() > 0;
    train_opt.seed_set = tr_seed->count() > 0;
    if (gen->parsed()) return run_gen(gen_opt, command);
    if (tr->parsed()) return run_train(train_opt, command);
    if (gr->parsed()) return run_ground(ground_opt, command);
    if (ev->parsed()) return run_eval(eval_opt, command);
    if (ab->parsed()) return run_ablate(ablate_opt, command);
    if (rp->parsed()) return run_report(report_opt, command);
  } catch (const std::exception& e) {
    if (json_errors)
      std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "failure"}}.dump()
                << "\n";
    else
      std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace dstg
