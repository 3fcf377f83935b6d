#include "asa/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "asa/features.hpp"
#include "asa/metrics.hpp"
#include "asa/synth.hpp"
#include "asa/train.hpp"

namespace asa {

namespace {

namespace fs = std::filesystem;

std::vector<double> parse_csv_doubles(const std::string& s, size_t expected, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  require(out.size() == expected, what, ": expected ", expected, " comma-separated values, got ",
          out.size());
  return out;
}

void cmd_extract(const fs::path& wav_path, const fs::path& alignments_path,
                 const fs::path& annotations_path, const fs::path& vocab_path,
                 const fs::path& out_delivery, const fs::path& out_language) {
  const AudioBuffer audio = read_wav(wav_path);
  const auto alignments = read_alignments(alignments_path);
  const auto tokens = read_annotations(annotations_path);
  const FeatureVocab vocab =
      vocab_path.empty() ? FeatureVocab::builtin() : FeatureVocab::from_file(vocab_path);

  const FloatMatrix delivery = delivery_features(audio, alignments);
  const FloatMatrix language = language_features(tokens, vocab);
  write_tnsr(out_delivery, delivery);
  write_tnsr(out_language, language);
  std::cout << "extracted " << delivery.rows << " word rows (vocab " << vocab.version()
            << ") from " << wav_path.string() << "\n";
}

void write_example_config(const fs::path& path, const SynthSpec& spec) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write ", path.string());
  out << "# starter config for the corpus in this directory\n"
      << "aspect = holistic\n"
      << "lambda = 0.5\n"
      << "batch_size = 32\n"
      << "learning_rate = 1e-4\n"
      << "patience = 30\n"
      << "max_epochs = 200\n"
      << "seed = " << spec.seed << "\n"
      << "margin_mode = data_driven\n"
      << "margin_scale = 1.0\n"
      << "ema_decay = 0.9\n"
      << "margins = 0.5,0.5,0.5,0.5,0.5,0.5,0.5\n"
      << "prompt_dim = " << spec.prompt_dim << "\n"
      << "speech_dim = " << spec.speech_dim << "\n"
      << "hidden_dim = 32\n"
      << "positional_phases = true\n";
}

int cmd_train(const fs::path& config_path, const fs::path& train_path, const fs::path& valid_path,
              const fs::path& out_dir, std::optional<uint64_t> seed_override,
              const std::string& sweep_lambda) {
  RunConfig cfg = RunConfig::from_file(config_path);
  if (seed_override) cfg.seed = *seed_override;
  const CefrScale scale = CefrScale::default_scale();
  const auto train_set = load_instances(train_path, scale);
  const auto valid_set = load_instances(valid_path, scale);

  std::vector<double> lambdas;
  if (sweep_lambda.empty()) {
    lambdas.push_back(cfg.lambda);
  } else {
    std::stringstream ss(sweep_lambda);
    std::string item;
    while (std::getline(ss, item, ',')) lambdas.push_back(std::stod(item));
    require(!lambdas.empty(), "empty --sweep-lambda list");
  }

  std::ofstream sweep_summary;
  if (lambdas.size() > 1) {
    fs::create_directories(out_dir);
    sweep_summary.open(out_dir / "sweep_summary.csv", std::ios::binary);
    sweep_summary << "lambda,best_epoch,best_valid_macro_f1\n";
  }

  for (double lambda : lambdas) {
    RunConfig run_cfg = cfg;
    run_cfg.lambda = lambda;
    fs::path run_dir = out_dir;
    if (lambdas.size() > 1) {
      char sub[32];
      std::snprintf(sub, sizeof sub, "lambda_%g", lambda);
      run_dir /= sub;
    }
    TrainResult res = train(run_cfg, scale, train_set, valid_set, run_dir);
    if (res.aborted) {
      std::cerr << "training aborted: " << res.abort_reason
                << " (best checkpoint retained at " << res.checkpoint_path.string() << ")\n";
      return 1;
    }
    std::cout << "lambda " << lambda << ": best valid macro-F1 " << res.best_valid_macro_f1
              << " at epoch " << res.best_epoch << " (" << res.epochs_run << " epochs run)\n";
    if (sweep_summary.is_open())
      sweep_summary << lambda << "," << res.best_epoch << "," << res.best_valid_macro_f1 << "\n";
  }
  return 0;
}

void cmd_eval(const fs::path& ckpt_path, const fs::path& manifest_path, const fs::path& out_json,
              fs::path confusion_csv, const std::string& margins_arg) {
  CefrScale scale = CefrScale::default_scale();
  if (!margins_arg.empty())
    scale.adjacent_margins = parse_csv_doubles(margins_arg, kClasses - 1, "--margins");

  AspectModel<float> model;
  load_checkpoint(ckpt_path, model);
  const auto instances = load_instances(manifest_path, scale);
  const EvalReport report = evaluate(model, instances);

  std::ofstream out(out_json, std::ios::binary);
  require(out.good(), "cannot write ", out_json.string());
  out << report_to_json(report, scale);
  if (confusion_csv.empty()) {
    confusion_csv = out_json;
    confusion_csv.replace_filename("confusion.csv");
  }
  write_confusion_csv(confusion_csv, report, scale);
  std::cout << "n " << report.n << "  accuracy " << report.accuracy << "  macro_f1 "
            << report.macro_f1 << "\n";
}

void cmd_margins(const fs::path& ckpt_path, const fs::path& manifest_path,
                 const fs::path& out_path) {
  AspectModel<float> model;
  const CheckpointInfo info = load_checkpoint(ckpt_path, model);
  require(info.margins.size() == size_t(kClasses - 1), "checkpoint ", ckpt_path.string(),
          ": missing margins");
  const CefrScale scale = CefrScale::default_scale();

  std::vector<double> raw_gaps(kClasses - 1, std::numeric_limits<double>::quiet_NaN());
  if (!manifest_path.empty()) {
    const auto instances = load_instances(manifest_path, scale);
    MarginSchedule probe;
    probe.mode = MarginMode::data_driven;
    probe.margins = info.margins;
    probe.ema_decay = 0.0;  // raw gaps only
    auto update = estimate_margins(model, instances, probe);
    raw_gaps = update.raw_gaps;
  }

  std::ostringstream table;
  table << "level_pair,raw_gap,smoothed_margin\n";
  for (int c = 1; c < kClasses; ++c) {
    table << scale.level_name(c) << "->" << scale.level_name(c + 1) << ",";
    if (!std::isnan(raw_gaps[c - 1])) table << raw_gaps[c - 1];
    table << "," << info.margins[c - 1] << "\n";
  }
  if (out_path.empty()) {
    std::cout << table.str();
  } else {
    std::ofstream out(out_path, std::ios::binary);
    require(out.good(), "cannot write ", out_path.string());
    out << table.str();
  }
}

void cmd_confusion(const fs::path& report_path) {
  std::ifstream in(report_path);
  require(in.good(), "cannot open ", report_path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const EvalReport report = report_from_json(buf.str());
  std::cout << render_confusion(report, CefrScale::default_scale());
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"multi-aspect speaking grader with ordinal-aware training"};
  app.require_subcommand(1);

  // extract
  auto* extract = app.add_subcommand("extract", "audio + annotations -> feature tensors");
  std::string wav, alignments, annotations, vocab, out_delivery, out_language;
  extract->add_option("--wav", wav, "mono 16-bit PCM WAV")->required();
  extract->add_option("--alignments", alignments, "word alignment JSON")->required();
  extract->add_option("--annotations", annotations, "linguistic annotation JSON")->required();
  extract->add_option("--vocab", vocab, "vocabulary file (default: built-in v1)");
  extract->add_option("--out-delivery", out_delivery, "output delivery tensor")->required();
  extract->add_option("--out-language", out_language, "output language tensor")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic ordinal corpus");
  std::string synth_out, gaps_arg;
  SynthSpec spec;
  int train_n = 24, valid_n = 8, test_n = 8;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", spec.seed, "RNG seed");
  synth->add_option("--train-per-class", train_n, "training instances per class");
  synth->add_option("--valid-per-class", valid_n, "validation instances per class");
  synth->add_option("--test-per-class", test_n, "test instances per class");
  synth->add_option("--noise", spec.noise, "feature noise sigma");
  synth->add_option("--gaps", gaps_arg, "7 comma-separated adjacent class gaps");
  synth->add_option("--prompt-dim", spec.prompt_dim, "prompt embedding width");
  synth->add_option("--speech-dim", spec.speech_dim, "speech frame width");

  // train
  auto* train_cmd = app.add_subcommand("train", "train one aspect grader");
  std::string config_path, train_manifest, valid_manifest, train_out, sweep_lambda;
  uint64_t seed_val = 0;
  train_cmd->add_option("--config", config_path, "run config file")->required();
  train_cmd->add_option("--train", train_manifest, "training manifest")->required();
  train_cmd->add_option("--valid", valid_manifest, "validation manifest")->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();
  auto* seed_opt = train_cmd->add_option("--seed", seed_val, "override config seed");
  train_cmd->add_option("--sweep-lambda", sweep_lambda,
                        "comma-separated lambda values to sweep");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
  std::string ckpt, eval_manifest, report_out, confusion_out, margins_arg;
  eval_cmd->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "dataset manifest")->required();
  eval_cmd->add_option("--out", report_out, "report JSON path")->required();
  eval_cmd->add_option("--confusion-csv", confusion_out,
                       "confusion CSV path (default: confusion.csv next to the report)");
  eval_cmd->add_option("--margins", margins_arg,
                       "7 adjacent margins for the ordinal error (default: all 1)");

  // margins
  auto* margins_cmd = app.add_subcommand("margins", "adjacent-level distance table");
  std::string m_ckpt, m_manifest, m_out;
  margins_cmd->add_option("--checkpoint", m_ckpt, "model checkpoint")->required();
  margins_cmd->add_option("--manifest", m_manifest,
                          "manifest for raw centroid gaps (optional)");
  margins_cmd->add_option("--out", m_out, "CSV output path (default: stdout)");

  // confusion
  auto* confusion_cmd = app.add_subcommand("confusion", "render a report's matrix as text");
  std::string report_path;
  confusion_cmd->add_option("--report", report_path, "report JSON from eval")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*extract) {
      cmd_extract(wav, alignments, annotations, vocab, out_delivery, out_language);
    } else if (*synth) {
      if (!gaps_arg.empty())
        spec.gaps = parse_csv_doubles(gaps_arg, kClasses - 1, "--gaps");
      spec.train_per_class.assign(kClasses, train_n);
      spec.valid_per_class.assign(kClasses, valid_n);
      spec.test_per_class.assign(kClasses, test_n);
      const SynthResult res = generate_synthetic_corpus(spec, synth_out);
      write_example_config(fs::path(synth_out) / "config.example.cfg", spec);
      std::cout << "wrote " << res.instances << " instances under " << synth_out << "\n";
    } else if (*train_cmd) {
      std::optional<uint64_t> seed_override;
      if (seed_opt->count()) seed_override = seed_val;
      return cmd_train(config_path, train_manifest, valid_manifest, train_out, seed_override,
                       sweep_lambda);
    } else if (*eval_cmd) {
      cmd_eval(ckpt, eval_manifest, report_out, confusion_out, margins_arg);
    } else if (*margins_cmd) {
      cmd_margins(m_ckpt, m_manifest, m_out);
    } else if (*confusion_cmd) {
      cmd_confusion(report_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace asa
