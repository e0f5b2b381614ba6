#include "edithumor/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>

#include "edithumor/checkpoint.hpp"
#include "edithumor/corpus.hpp"
#include "edithumor/csv.hpp"
#include "edithumor/error.hpp"
#include "edithumor/eval.hpp"
#include "edithumor/gradcheck.hpp"
#include "edithumor/parallel.hpp"
#include "edithumor/train.hpp"

namespace edithumor {

namespace fs = std::filesystem;

namespace {

// Training hyperparameters plus every path a subcommand may need. Field
// names double as config-file keys and `--key` flags.
struct RunConfig {
  TrainConfig train_cfg;
  std::string summary = "last";

  std::string train, dev, test, embeddings, vocab, checkpoint, output_dir;
  std::string input, output;
  std::string predictions, gold, report;
  std::string rmse_at_basis = "truth";
  int threads = 0;

  GradcheckConfig gc;
};

class UsageError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required --") + flag);
}

void write_seed_header(std::ostream& out, std::uint64_t seed) { out << "# seed=" << seed << '\n'; }

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

std::vector<RawRecord> require_labeled(std::vector<RawRecord> records, const std::string& path) {
  for (const auto& r : records) {
    if (!r.mean_grade) throw DataError(path + ": row id " + r.id + " has no meanGrade; training needs labels");
  }
  return records;
}

std::vector<std::vector<std::string>> tokenized(std::span<const RawRecord> records) {
  std::vector<std::vector<std::string>> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(edited_tokens(r));
  return out;
}

void print_load_report(std::ostream& out, const char* split, const LoadReport& rep) {
  out << split << ": " << rep.records << " records (" << rep.labeled << " labeled), "
      << rep.empty_after_tokenize.size() << " empty after tokenization, " << rep.truncated
      << " truncated\n";
  for (const auto& id : rep.empty_after_tokenize) out << "  empty: id " << id << '\n';
}

int cmd_train(const RunConfig& rc, std::ostream& out) {
  require(rc.train, "train");
  require(rc.embeddings, "embeddings");
  require(rc.output_dir, "output_dir");
  rc.train_cfg.validate();

  const auto train_records = require_labeled(load_task1_csv(rc.train), rc.train);
  const auto train_tokens = tokenized(train_records);
  const Vocab vocab = build_vocab(train_tokens);
  const auto seq_len = rc.train_cfg.seq_len;

  LoadReport train_rep;
  const auto train_set = to_examples(train_records, vocab, seq_len, &train_rep);
  print_load_report(out, "train", train_rep);
  std::vector<Example> dev_set;
  if (!rc.dev.empty()) {
    LoadReport dev_rep;
    dev_set = to_examples(require_labeled(load_task1_csv(rc.dev), rc.dev), vocab, seq_len, &dev_rep);
    print_load_report(out, "dev", dev_rep);
  }
  out << "vocab: " << vocab.size() << " entries (including <pad>, <unk>)\n";

  CoverageReport coverage;
  const fs::path emb_path(rc.embeddings);
  TrainState state = make_initial_state(rc.train_cfg, vocab, &emb_path, &coverage);
  out << "embeddings: " << coverage.hits << " pretrained (" << coverage.lowercase_hits
      << " via lowercase), " << coverage.misses << " random\n";

  const auto t0 = std::chrono::steady_clock::now();
  auto result = train(std::move(state), train_set, dev_set, [&](const HistoryRow& row) {
    out << "epoch " << row.epoch << " train_mse " << format_real(row.train_mse);
    if (row.dev_rmse) out << " dev_rmse " << format_real(*row.dev_rmse);
    out << '\n';
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path dir(rc.output_dir);
  fs::create_directories(dir);
  const auto seed = rc.train_cfg.seed;
  vocab.save(dir / "vocab.txt", seed);
  write_history_csv(dir / "history.csv", result.history, seed);
  save_checkpoint(result.last, dir / "last.ckpt");
  save_checkpoint(result.best, dir / "best.ckpt");

  out << "trained " << result.history.size() << " epochs in " << std::fixed << std::setprecision(1)
      << secs << " s\n";
  out.unsetf(std::ios::floatfield);
  out << std::setprecision(6);
  if (!result.history.empty() && result.history.back().dev_rmse) {
    out << "final dev RMSE " << format_real(*result.history.back().dev_rmse) << '\n';
  }

  if (!rc.test.empty()) {
    const auto test_records = load_task1_csv(rc.test);
    const bool labeled = std::all_of(test_records.begin(), test_records.end(),
                                     [](const RawRecord& r) { return r.mean_grade.has_value(); });
    if (labeled && !test_records.empty()) {
      const auto test_set = to_examples(test_records, vocab, seq_len);
      std::vector<double> truth;
      for (const auto& r : test_records) truth.push_back(*r.mean_grade);
      for (const auto* which : {&result.last, &result.best}) {
        const auto p = predict(which->params, which->model, test_set,
                               static_cast<std::size_t>(which->config.batch_size),
                               which->config.clamp_eval);
        const std::vector<double> pd(p.begin(), p.end());
        out << (which == &result.last ? "test RMSE (last) " : "test RMSE (best) ")
            << format_real(rmse(pd, truth)) << '\n';
      }
    }
  }
  return kExitOk;
}

int cmd_predict(const RunConfig& rc, bool clamp_given, std::ostream& out) {
  require(rc.checkpoint, "checkpoint");
  require(rc.input, "input");
  require(rc.output, "output");
  const TrainState state = load_checkpoint(rc.checkpoint);
  const fs::path vocab_path =
      rc.vocab.empty() ? fs::path(rc.checkpoint).parent_path() / "vocab.txt" : fs::path(rc.vocab);
  const Vocab vocab = Vocab::load(vocab_path);
  if (vocab.size() != state.model.vocab_size) {
    throw DimMismatch("vocab " + vocab_path.string() + " has " + std::to_string(vocab.size()) +
                      " entries but the checkpoint expects " +
                      std::to_string(state.model.vocab_size));
  }
  const bool clamp = clamp_given ? rc.train_cfg.clamp_eval : state.config.clamp_eval;
  const auto batch = static_cast<std::size_t>(state.config.batch_size);
  const auto seq_len = static_cast<int>(state.model.seq_len);

  auto file = open_output(rc.output);
  write_seed_header(file, state.config.seed);
  if (is_task2_csv(rc.input)) {
    const auto pairs = load_task2_csv(rc.input);
    std::vector<RawRecord> side_a, side_b;
    for (const auto& p : pairs) {
      side_a.push_back(p.a);
      side_b.push_back(p.b);
    }
    const auto pa = predict(state.params, state.model, to_examples(side_a, vocab, seq_len), batch, clamp);
    const auto pb = predict(state.params, state.model, to_examples(side_b, vocab, seq_len), batch, clamp);
    write_csv_row(file, {"id", "pred_label"});
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      write_csv_row(file, {pairs[i].id, std::to_string(compare_pair(pa[i], pb[i]))});
    }
    out << "wrote " << pairs.size() << " pair labels to " << rc.output << '\n';
  } else {
    const auto records = load_task1_csv(rc.input);
    const auto pred = predict(state.params, state.model, to_examples(records, vocab, seq_len), batch, clamp);
    write_csv_row(file, {"id", "pred"});
    for (std::size_t i = 0; i < records.size(); ++i) {
      write_csv_row(file, {records[i].id, format_real(pred[i])});
    }
    out << "wrote " << records.size() << " predictions to " << rc.output << '\n';
  }
  if (!file) throw IoError("failed writing " + rc.output);
  return kExitOk;
}

// id -> value column of a prediction file, rejecting duplicates.
std::map<std::string, std::string> read_prediction_file(const std::string& path,
                                                        const char* value_column) {
  const auto table = read_csv_file(path);
  const auto id_col = table.column("id");
  const auto val_col = table.column(value_column);
  if (!id_col || !val_col) {
    throw MissingColumn(path + ": expected columns id," + value_column);
  }
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != table.header.size()) {
      throw ParseError(path + ": line " + std::to_string(table.lines[i]) + ": wrong field count");
    }
    if (!out.emplace(row[*id_col], row[*val_col]).second) {
      throw DataError(path + ": duplicate id " + row[*id_col]);
    }
  }
  return out;
}

template <typename Gold>
void check_ids(const std::map<std::string, std::string>& preds, const std::vector<Gold>& gold) {
  std::set<std::string> gold_ids;
  for (const auto& g : gold) {
    gold_ids.insert(g.id);
    if (!preds.count(g.id)) throw DataError("id mismatch: gold id " + g.id + " has no prediction");
  }
  for (const auto& [id, _] : preds) {
    if (!gold_ids.count(id)) throw DataError("id mismatch: predicted id " + id + " not in gold file");
  }
}

double parse_real(const std::string& text, const std::string& id) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError("prediction for id " + id + " is not a number: '" + text + "'");
  }
}

void emit_report(const MetricsReport& report, const RunConfig& rc, std::ostream& out) {
  const std::string json = report.to_json();
  out << json << '\n';
  if (!rc.report.empty()) {
    auto f = open_output(rc.report);
    f << json << '\n';
  }
}

int cmd_eval_task1(const RunConfig& rc, std::ostream& out) {
  require(rc.predictions, "predictions");
  require(rc.gold, "gold");
  const auto preds = read_prediction_file(rc.predictions, "pred");
  const auto gold = load_task1_csv(rc.gold);
  check_ids(preds, gold);
  std::vector<double> p, t;
  for (const auto& g : gold) {
    if (!g.mean_grade) throw DataError("gold id " + g.id + " has no meanGrade");
    double v = parse_real(preds.at(g.id), g.id);
    if (rc.train_cfg.clamp_eval) v = std::clamp(v, kMinGrade, kMaxGrade);
    p.push_back(v);
    t.push_back(*g.mean_grade);
  }
  emit_report(task1_report(p, t, parse_rank_basis(rc.rmse_at_basis)), rc, out);
  return kExitOk;
}

int cmd_eval_task2(const RunConfig& rc, std::ostream& out) {
  require(rc.predictions, "predictions");
  require(rc.gold, "gold");
  const auto preds = read_prediction_file(rc.predictions, "pred_label");
  const auto gold = load_task2_csv(rc.gold);
  check_ids(preds, gold);
  std::vector<int> labels;
  for (const auto& g : gold) {
    const auto& v = preds.at(g.id);
    if (v != "1" && v != "2") throw ParseError("pred_label for id " + g.id + " must be 1 or 2");
    labels.push_back(v[0] - '0');
  }
  MetricsReport report;
  report.rmse_at_basis = parse_rank_basis(rc.rmse_at_basis);
  report.task2 = task2_metrics(gold, labels);
  emit_report(report, rc, out);
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& rc, std::ostream& out) {
  GradcheckConfig gc = rc.gc;
  gc.seed = rc.train_cfg.seed;
  gc.summary = rc.train_cfg.summary;
  gc.output_relu = rc.train_cfg.output_relu;
  const auto report = gradcheck(gc);
  for (const auto& t : report.tensors) {
    out << (t.pass ? "ok   " : "FAIL ") << std::left << std::setw(20) << t.name << " coords "
        << t.coordinates << " max_rel_err " << std::scientific << std::setprecision(3)
        << t.max_rel_error << std::defaultfloat << '\n';
  }
  out << (report.pass ? "gradcheck passed\n" : "gradcheck FAILED\n");
  return report.pass ? kExitOk : kExitNumeric;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Funniness regression for edited news headlines"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "flat key = value config file; flags override it");
  app.allow_config_extras(false);

  RunConfig rc;
  auto& tc = rc.train_cfg;
  app.add_option("--epochs", tc.epochs)->capture_default_str();
  app.add_option("--batch_size", tc.batch_size)->capture_default_str();
  app.add_option("--learning_rate", tc.learning_rate)->capture_default_str();
  app.add_option("--rho", tc.rho)->capture_default_str();
  app.add_option("--eps", tc.eps)->capture_default_str();
  app.add_option("--seq_len", tc.seq_len, "max tokens per headline (L)")->capture_default_str();
  app.add_option("--hidden", tc.hidden, "LSTM units per direction (H)")->capture_default_str();
  app.add_option("--embed_dim", tc.embed_dim, "embedding width (D)")->capture_default_str();
  app.add_option("--seed", tc.seed)->capture_default_str();
  app.add_option("--shuffle", tc.shuffle)->capture_default_str();
  auto* clamp_opt = app.add_option("--clamp_eval", tc.clamp_eval, "clamp predictions to [0,3]")
                        ->capture_default_str();
  app.add_option("--summary", rc.summary, "sequence summary: last | mean")
      ->check(CLI::IsMember({"last", "mean"}))
      ->capture_default_str();
  app.add_option("--output_relu", tc.output_relu)->capture_default_str();
  app.add_option("--clip_norm", tc.clip_norm, "global gradient norm cap, 0 = off")->capture_default_str();
  app.add_option("--bn_epsilon", tc.bn_epsilon)->capture_default_str();
  app.add_option("--bn_momentum", tc.bn_momentum)->capture_default_str();

  app.add_option("--train", rc.train, "Task-1 training CSV");
  app.add_option("--dev", rc.dev, "Task-1 dev CSV");
  app.add_option("--test", rc.test, "Task-1 test CSV (scored after training when labeled)");
  app.add_option("--embeddings", rc.embeddings, "word2vec binary file");
  app.add_option("--vocab", rc.vocab, "vocab file (default: next to the checkpoint)");
  app.add_option("--checkpoint", rc.checkpoint);
  app.add_option("--output_dir", rc.output_dir);
  app.add_option("--input", rc.input, "Task-1 or Task-2 CSV to predict");
  app.add_option("--output", rc.output, "prediction file to write");
  app.add_option("--predictions", rc.predictions);
  app.add_option("--gold", rc.gold);
  app.add_option("--report", rc.report, "write the metrics JSON here");
  app.add_option("--rmse_at_basis", rc.rmse_at_basis, "truth | prediction")
      ->check(CLI::IsMember({"truth", "prediction"}))
      ->capture_default_str();
  app.add_option("--threads", rc.threads, "OpenMP threads, 0 = runtime default");

  app.add_option("--gradcheck_batch", rc.gc.batch)->capture_default_str();
  app.add_option("--gradcheck_seq_len", rc.gc.seq_len)->capture_default_str();
  app.add_option("--gradcheck_embed_dim", rc.gc.embed_dim)->capture_default_str();
  app.add_option("--gradcheck_hidden", rc.gc.hidden)->capture_default_str();
  app.add_option("--gradcheck_vocab", rc.gc.vocab)->capture_default_str();
  app.add_option("--gradcheck_samples", rc.gc.samples)->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "train a model and write vocab, history and checkpoints");
  auto* predict_cmd = app.add_subcommand("predict", "predict grades (Task 1) or pair labels (Task 2)");
  auto* eval1_cmd = app.add_subcommand("eval-task1", "RMSE and RMSE@10/20/30 of id,pred against gold");
  auto* eval2_cmd = app.add_subcommand("eval-task2", "accuracy and reward of id,pred_label against gold");
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of every gradient");

  std::vector<const char*> argv{"edithumor"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    tc.summary = rc.summary == "mean" ? SummaryMode::kMean : SummaryMode::kLast;
    kernels::set_threads(rc.threads);
    if (train_cmd->parsed()) return cmd_train(rc, out);
    if (predict_cmd->parsed()) return cmd_predict(rc, clamp_opt->count() > 0, out);
    if (eval1_cmd->parsed()) return cmd_eval_task1(rc, out);
    if (eval2_cmd->parsed()) return cmd_eval_task2(rc, out);
    if (gc_cmd->parsed()) return cmd_gradcheck(rc, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace edithumor
