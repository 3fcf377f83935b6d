#include "asa/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace asa {

namespace {

// Fisher-Yates with raw engine draws; std::shuffle is not guaranteed to be
// reproducible across standard libraries.
void shuffle_indices(std::vector<int>& idx, std::mt19937_64& rng) {
  for (size_t i = idx.size(); i > 1; --i) {
    size_t j = size_t(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

TrainResult train(const RunConfig& cfg, const CefrScale& scale,
                  const std::vector<Instance>& train_set,
                  const std::vector<Instance>& valid_set,
                  const std::filesystem::path& out_dir) {
  cfg.validate();
  scale.validate();
  require(!train_set.empty(), "train: empty training set");
  require(!valid_set.empty(), "train: empty validation set");
  for (const auto& set : {&train_set, &valid_set})
    for (const auto& inst : *set) inst.label(cfg.aspect);  // throws if absent

  std::filesystem::create_directories(out_dir);
  const auto ckpt_path = out_dir / "checkpoint.best";
  const auto last_path = out_dir / "checkpoint.last";
  const auto log_path = out_dir / "train_log.csv";
  const auto margins_path = out_dir / "margins.csv";

  std::ofstream log(log_path, std::ios::binary);
  require(log.good(), "train: cannot write ", log_path.string());
  log << "epoch,train_loss,ce,mmo,valid_macro_f1";
  for (int c = 1; c < kClasses; ++c)
    log << ",margin_" << scale.level_name(c) << "_" << scale.level_name(c + 1);
  log << "\n";

  std::ofstream margins_csv;
  if (cfg.margin_mode == MarginMode::data_driven) {
    margins_csv.open(margins_path, std::ios::binary);
    require(margins_csv.good(), "train: cannot write ", margins_path.string());
    margins_csv << "epoch,level_pair,raw_gap,smoothed_margin\n";
  }

  auto model = AspectModel<float>::make(cfg);
  auto params = model.parameters();
  MarginSchedule schedule = MarginSchedule::from_config(cfg);
  AdamWOptions opt;
  opt.lr = cfg.learning_rate;
  opt.weight_decay = cfg.weight_decay;

  EarlyStopping stopper(cfg.patience);
  TrainResult result;
  result.checkpoint_path = ckpt_path;
  result.last_checkpoint_path = last_path;
  result.log_path = log_path;

  std::vector<int> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto rng = std::mt19937_64(hash_combine(cfg.seed, uint64_t(epoch)));
    shuffle_indices(order, rng);

    double loss_sum = 0.0, ce_sum = 0.0, mmo_sum = 0.0;
    long long seen = 0;
    for (size_t begin = 0; begin < order.size(); begin += size_t(cfg.batch_size)) {
      const size_t end = std::min(begin + size_t(cfg.batch_size), order.size());
      const int B = int(end - begin);

      Tape<float> tape;
      std::vector<TensorPtr<float>> rows;
      LogitBatch<float> batch;
      rows.reserve(B);
      for (size_t i = begin; i < end; ++i) {
        const Instance& inst = train_set[order[i]];
        rows.push_back(model.predict(tape, inst));
        batch.labels.push_back(inst.label(cfg.aspect));
      }
      batch.logits = ops::stack_rows(tape, rows);
      auto loss = combined_loss(tape, batch, schedule.margins, cfg.lambda);

      const double lv = double(loss.total->data[0]);
      if (!std::isfinite(lv)) {
        result.aborted = true;
        result.abort_reason = msg("non-finite loss at epoch ", epoch);
        log << "# aborted: " << result.abort_reason << "\n";
        result.epochs_run = epoch;
        return result;
      }
      loss_sum += lv * B;
      ce_sum += double(loss.ce->data[0]) * B;
      mmo_sum += double(loss.mmo->data[0]) * B;
      seen += B;

      zero_grads(params);
      tape.backward(loss.total);
      adamw_step(params, opt);
    }

    if (cfg.margin_mode == MarginMode::data_driven) {
      auto update = estimate_margins(model, train_set, schedule);
      for (int c = 1; c < kClasses; ++c) {
        margins_csv << epoch << "," << scale.level_name(c) << "->" << scale.level_name(c + 1)
                    << ",";
        if (std::isnan(update.raw_gaps[c - 1]))
          margins_csv << "";
        else
          margins_csv << fmt9(update.raw_gaps[c - 1]);
        margins_csv << "," << fmt9(schedule.margins[c - 1]) << "\n";
      }
    }

    const EvalReport valid_report = evaluate(model, valid_set);
    const bool improved = stopper.update(valid_report.macro_f1);
    if (improved) {
      result.best_epoch = epoch;
      result.best_valid_macro_f1 = valid_report.macro_f1;
      save_checkpoint(ckpt_path, model, schedule.margins, cfg.hash());
    }

    log << epoch << "," << fmt9(loss_sum / seen) << "," << fmt9(ce_sum / seen) << ","
        << fmt9(mmo_sum / seen) << "," << fmt9(valid_report.macro_f1);
    for (int c = 0; c < kClasses - 1; ++c) log << "," << fmt9(schedule.margins[c]);
    log << "\n";

    result.epochs_run = epoch;
    if (stopper.should_stop()) break;
  }
  save_checkpoint(last_path, model, schedule.margins, cfg.hash());
  require(log.good(), "train: log write failed");
  return result;
}

}  // namespace asa
