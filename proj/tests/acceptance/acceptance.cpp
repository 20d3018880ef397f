// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "experiment.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "sqlsv/cli/cli.hpp"
#include "sqlsv/errors.hpp"
#include "sqlsv/exec/exec.hpp"
#include "sqlsv/hir/hir.hpp"
#include "sqlsv/metrics/metrics.hpp"
#include "sqlsv/plan/logical_plan.hpp"
#include "sqlsv/sql/parser.hpp"
#include "sqlsv/sql/render.hpp"

namespace fs = std::filesystem;
using namespace sqlsv;
using namespace sqlsv::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double limit_s;  // wall-clock budget, <= 0 for none
  std::function<Outcome()> run;
};

std::string sci(double x) {
  std::ostringstream ss;
  ss.precision(2);
  ss << std::scientific << x;
  return ss.str();
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << std::fixed << x;
  return ss.str();
}

// ---- gradient correctness ---------------------------------------------------------

Outcome gradient_check() {
  const auto schema = fixture_schema("company");
  nmpnn::NmpnnConfig nc;
  nc.dim = 8;
  validator::TrainConfig tc;
  feat::BuiltinFeaturizer provider(nc.dim);
  const auto ex = validator::encode_example("List the name of employees older than 30.",
                                            "SELECT name FROM emp WHERE age > 30", schema,
                                            provider, nullptr, 1);
  if (ex.hir.plan.size() != 3) return {false, "fixture plan has " + std::to_string(ex.hir.plan.size()) + " nodes"};
  auto model = validator::init_model(nc, tc);
  // Nonzero biases so every parameter carries gradient through a generic point.
  std::mt19937_64 rng(7);
  for (auto& [name, t] : model.params) {
    if (name.find("bias") != std::string::npos || name.find(".b") != std::string::npos) {
      for (double& x : t.mutable_data()) x = 0.2 * (2.0 * nmpnn::uniform01(rng) - 1.0);
    }
  }
  const double err = ad::finite_diff_check(
      [&](ad::ParamStore& p) {
        return ad::bce_loss(validator::score_tensor(p, nc, ex, nullptr, nullptr), 1.0);
      },
      model.params, 1e-5);
  return {err <= 1e-4, "max relative error " + sci(err) + " over " +
                           std::to_string(model.params.num_values()) + " parameters"};
}

// ---- NMPNN oracle -----------------------------------------------------------------

Outcome nmpnn_oracle() {
  std::mt19937_64 rng(2025);
  auto pick = [&](int lo, int hi) {
    return lo + static_cast<int>(nmpnn::uniform01(rng) * (hi - lo + 1));
  };
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    nmpnn::NmpnnConfig config;
    config.dim = pick(1, 4);
    config.t_ast = pick(1, 3);
    config.t_lp = pick(1, 3);
    config.pooling = pick(0, 1) == 0 ? nmpnn::Pooling::Mean : nmpnn::Pooling::Sum;
    config.aggregator = pick(0, 1) == 0 ? nmpnn::Aggregator::MeanLinear : nmpnn::Aggregator::Gat;
    RawGraph g;
    g.lp_size = pick(1, 5);
    nmpnn::NestedGraph ng;
    feat::NodeEmbeddings emb;
    std::vector<Mat> raw_emb;
    for (int i = 0; i < g.lp_size; ++i) {
      const int n = pick(1, 6);
      std::vector<std::pair<int, int>> edges;
      for (int v = 1; v < n; ++v) edges.emplace_back(pick(0, v - 1), v);
      g.ast_sizes.push_back(n);
      g.ast_edges.push_back(edges);
      ng.ast.push_back(nmpnn::undirected_neighbors(n, edges));
      Mat m;
      std::vector<feat::Vector> rows;
      for (int v = 0; v < n; ++v) {
        feat::Vector row;
        for (int k = 0; k < config.dim; ++k) row.push_back(2.0 * nmpnn::uniform01(rng) - 1.0);
        m.push_back(row);
        rows.push_back(row);
      }
      raw_emb.push_back(m);
      emb.push_back(rows);
    }
    for (int v = 1; v < g.lp_size; ++v) {
      g.lp_edges.emplace_back(pick(0, v - 1), v);
      if (v >= 2 && pick(0, 2) == 0) g.lp_edges.emplace_back(pick(0, v - 2), v);
    }
    ng.lp = nmpnn::undirected_neighbors(g.lp_size, g.lp_edges);
    ad::ParamStore params;
    nmpnn::init_params(params, config, rng);
    for (auto& [name, t] : params) {
      for (double& x : t.mutable_data()) x = 2.0 * nmpnn::uniform01(rng) - 1.0;
    }
    const auto enc = nmpnn::encode_sql(ng, emb, params, config);
    const auto [h_sql, lp_states] = replay_nested(g, raw_emb, params, config);
    for (int k = 0; k < config.dim; ++k) {
      worst = std::max(worst, std::abs(enc.h_sql.at(0, k) - h_sql[k]));
      for (int i = 0; i < g.lp_size; ++i) {
        worst = std::max(worst, std::abs(enc.lp_states.at(i, k) - lp_states[i][k]));
      }
    }
  }
  return {worst <= 1e-12, "200 graphs, max abs deviation " + sci(worst)};
}

// ---- metrics oracle ---------------------------------------------------------------

Outcome metrics_oracle() {
  std::mt19937_64 rng(11);
  int checked = 0;
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(nmpnn::uniform01(rng) * 9);  // 2..10
    metrics::ScoredLabels sl;
    for (int i = 0; i < n; ++i) {
      // coarse grid so ties are common
      sl.scores.push_back(std::floor(nmpnn::uniform01(rng) * 5.0) / 4.0);
      sl.labels.push_back(nmpnn::uniform01(rng) < 0.5 ? 1 : 0);
    }
    sl.labels[0] = 1;
    sl.labels[1] = 0;
    ++checked;
    if (metrics::auroc(sl) != auroc_pairwise(sl.scores, sl.labels)) ++mismatches;
    if (metrics::auprc(sl) != ap_enumerate(sl.scores, sl.labels)) ++mismatches;
  }
  const double worked_auroc = metrics::auroc({{0.8, 0.6, 0.4}, {1, 0, 1}});
  const double worked_ap = metrics::auprc({{0.9, 0.8, 0.1}, {0, 1, 1}});
  const bool worked = worked_auroc == 0.5 && std::abs(worked_ap - 0.5833) < 5e-5;
  return {mismatches == 0 && worked,
          std::to_string(checked) + " instances, " + std::to_string(mismatches) +
              " mismatches; worked AUROC " + fmt(worked_auroc) + ", AP " + fmt(worked_ap)};
}

// ---- lowering / execution ---------------------------------------------------------

Outcome lowering_equivalence() {
  const auto queries = fixture_queries();
  int ok = 0;
  std::string failures;
  for (const auto& q : queries) {
    const auto schema = fixture_schema(q.db_id);
    exec::Database db(fixture_db(q.db_id));
    try {
      const auto plan = plan::lower(sql::parse(q.sql, schema), schema);
      const auto sub = plan::render_subsql(plan, plan.root(), schema);
      if (exec::results_equal(db.execute(q.sql), db.execute(sub))) {
        ++ok;
        continue;
      }
      failures += " [" + q.sql + "]";
    } catch (const Error& e) {
      failures += " [" + q.sql + ": " + e.what() + "]";
    }
  }
  return {ok == static_cast<int>(queries.size()) && queries.size() >= 20,
          std::to_string(ok) + "/" + std::to_string(queries.size()) + " fixture queries equal" + failures};
}

// ---- shared experiment state ------------------------------------------------------

struct Experiment {
  SplitCorpus split;
  std::vector<validator::EncodedExample> train, val, test;
  validator::Model model;
  int epochs = 0;
};

Experiment& experiment() {
  static Experiment e;
  return e;
}

// ---- augmentation soundness -------------------------------------------------------

Outcome augmentation_soundness() {
  const auto gold = synthetic_gold_corpus();
  std::map<std::string, augment::Example> gold_by_id;
  for (const auto& g : gold) gold_by_id.emplace(g.id, g);
  const std::vector<augment::MutationRule> rules(std::begin(augment::kAllRules),
                                                 std::end(augment::kAllRules));
  std::map<std::string, std::unique_ptr<exec::Database>> dbs;
  augment::Corpus full;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold[i];
    auto& db = dbs[g.db_id];
    if (!db) db = std::make_unique<exec::Database>(fixture_db(g.db_id));
    full.push_back(g);
    for (auto& n : augment::generate_negatives(g, *db, fixture_schema(g.db_id), rules, 8, 2025 + i)) {
      full.push_back(std::move(n));
    }
  }
  int negatives = 0;
  int sound = 0;
  std::string first_bad;
  for (const auto& ex : full) {
    if (ex.label != 1) continue;
    ++negatives;
    const auto schema = fixture_schema(ex.db_id);
    const auto source = gold_by_id.at(ex.id.substr(0, ex.id.find(':')));
    try {
      const auto ast = sql::parse(ex.sql, schema);
      const auto plan = plan::lower(ast, schema);
      hir::build_hir(plan, schema);
      const auto& db = *dbs.at(ex.db_id);
      const bool differs = !exec::results_equal(db.execute(ex.sql), db.execute(source.sql));
      int ones = 0;
      for (const auto& [node, v] : ex.sublabels.value_or(std::map<int, int>{})) {
        ones += v;
        if (node < 0 || node >= static_cast<int>(plan.size())) ones = -100;
      }
      if (differs && ones == 1 && ex.sublabels->size() == plan.size()) {
        ++sound;
        continue;
      }
    } catch (const Error&) {
    }
    if (first_bad.empty()) first_bad = " first failure: " + ex.sql;
  }
  std::vector<std::string> warnings;
  const auto balanced = augment::balance(full, 1.0, 2025, &warnings);
  int pos = 0, neg = 0;
  for (const auto& ex : balanced) (ex.label == 1 ? neg : pos)++;
  const bool ratio_ok = std::abs(neg - pos) <= 1;
  return {negatives > 0 && sound == negatives && ratio_ok,
          std::to_string(sound) + "/" + std::to_string(negatives) +
              " negatives sound; balanced N/P = " + std::to_string(neg) + "/" + std::to_string(pos) +
              first_bad};
}

// ---- end-to-end -------------------------------------------------------------------

Outcome end_to_end() {
  auto& e = experiment();
  const auto settings = experiment_settings();
  e.split = build_split_corpus(settings.train.seed, 4, 0.15, 0.2);
  feat::BuiltinFeaturizer provider(settings.nmpnn.dim);
  feat::EmbeddingCache cache;
  e.train = encode_all(e.split.train, provider, &cache);
  e.val = encode_all(e.split.val, provider, &cache);
  e.test = encode_all(e.split.test, provider, &cache);

  // untrained reference
  const auto untrained = validator::init_model(settings.nmpnn, settings.train);
  metrics::ScoredLabels base{validator::predict_all(untrained, e.test), {}};
  for (const auto& x : e.test) base.labels.push_back(x.label);

  validator::TrainLog log;
  e.model = validator::train(e.train, e.val, settings.nmpnn, settings.train, &log);
  e.epochs = static_cast<int>(log.epoch_loss.size());
  metrics::ScoredLabels sl{validator::predict_all(e.model, e.test), base.labels};
  const double auroc = metrics::auroc(sl);
  const double auprc = metrics::auprc(sl);
  std::size_t gold = 0;
  for (const auto* part : {&e.split.train, &e.split.val, &e.split.test})
    for (const auto& x : *part) gold += x.label == 0 ? 1 : 0;
  return {auroc >= 0.85 && auprc >= 0.80,
          "held-out AUROC " + fmt(auroc) + " AUPRC " + fmt(auprc) + " (untrained " +
              fmt(metrics::auroc(base)) + "/" + fmt(metrics::auprc(base)) + "); " +
              std::to_string(gold) + " gold pairs, train/val/test " +
              std::to_string(e.train.size()) + "/" + std::to_string(e.val.size()) + "/" +
              std::to_string(e.test.size()) + ", " + std::to_string(e.epochs) + " epochs"};
}

Outcome localization() {
  auto& e = experiment();
  if (e.test.empty()) return {false, "end-to-end experiment did not run"};
  double total = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < e.test.size(); ++i) {
    const auto& ex = e.split.test[i];
    if (!ex.sublabels || e.test[i].hir.plan.size() < 2) continue;
    int node = -1;
    for (const auto& [k, v] : *ex.sublabels)
      if (v == 1) node = k;
    const auto scores =
        validator::localize_scores(e.model, e.test[i].question, e.test[i].graph, e.test[i].nodes);
    total += normalized_rank(scores, node);
    ++n;
  }
  if (n == 0) return {false, "no augmented held-out examples"};
  const double mean = total / n;
  return {mean < 0.5, "mean normalized rank " + fmt(mean) + " over " + std::to_string(n) +
                          " held-out negatives (uniform random: 0.5)"};
}

// ---- CLI determinism and formats --------------------------------------------------

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string cli_dir() {
  const auto dir = fs::path(scratch_dir()) / "cli";
  fs::create_directories(dir);
  return dir.string();
}

// Small gold corpus and a quick training config shared by the CLI criteria.
void prepare_cli_inputs() {
  static bool done = false;
  if (done) return;
  done = true;
  const auto dir = cli_dir();
  augment::Corpus gold;
  for (const auto& g : synthetic_gold_corpus()) {
    if (g.db_id == "company") gold.push_back(g);
  }
  augment::write_jsonl_file(dir + "/gold.jsonl", gold);
  nlohmann::json config = {{"nmpnn", {{"dim", 16}, {"dropout", 0.1}}},
                           {"train", {{"lr", 1e-3}, {"max_epochs", 4}, {"patience", 2}}},
                           {"augment_budget", 2}};
  std::ofstream(dir + "/config.json") << config.dump(2) << "\n";
}

std::vector<std::string> common_flags() {
  const auto dir = cli_dir();
  return {"--config", dir + "/config.json", "--db", fixture_db_dir(), "--schema",
          fixture_schema_dir(), "--seed", "2025"};
}

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

Outcome determinism() {
  prepare_cli_inputs();
  const auto dir = cli_dir();
  std::string detail;
  bool ok = true;
  for (int run = 0; run < 2; ++run) {
    const auto tag = std::to_string(run);
    const auto a = cli(with({"augment", "--in", dir + "/gold.jsonl", "--out", dir + "/aug" + tag + ".jsonl"},
                            common_flags()));
    const auto t = cli(with({"train", "--in", dir + "/aug" + tag + ".jsonl", "--checkpoint",
                             dir + "/ckpt" + tag + ".json"},
                            common_flags()));
    if (a.code != 0 || t.code != 0) {
      return {false, "augment exit " + std::to_string(a.code) + ", train exit " +
                         std::to_string(t.code) + ": " + a.err + t.err};
    }
  }
  const bool aug_same = read_file(dir + "/aug0.jsonl") == read_file(dir + "/aug1.jsonl");
  const bool ckpt_same = read_file(dir + "/ckpt0.json") == read_file(dir + "/ckpt1.json");
  ok = aug_same && ckpt_same;
  detail = std::string("augment output ") + (aug_same ? "identical" : "differs") + " (" +
           std::to_string(fs::file_size(dir + "/aug0.jsonl")) + " bytes), checkpoint " +
           (ckpt_same ? "identical" : "differs") + " (" +
           std::to_string(fs::file_size(dir + "/ckpt0.json")) + " bytes)";
  return {ok, detail};
}

Outcome round_trip() {
  prepare_cli_inputs();
  const auto dir = cli_dir();
  if (!fs::exists(dir + "/ckpt0.json")) {
    const auto a = cli(with({"augment", "--in", dir + "/gold.jsonl", "--out", dir + "/aug0.jsonl"}, common_flags()));
    const auto t = cli(with({"train", "--in", dir + "/aug0.jsonl", "--checkpoint", dir + "/ckpt0.json"}, common_flags()));
    if (a.code != 0 || t.code != 0) return {false, "could not produce CLI artifacts: " + a.err + t.err};
  }
  std::vector<std::string> problems;
  // checkpoint: load -> save reproduces the bytes and the parameters
  const auto model = validator::load_checkpoint(dir + "/ckpt0.json");
  validator::save_checkpoint(model, dir + "/ckpt_resaved.json");
  if (read_file(dir + "/ckpt0.json") != read_file(dir + "/ckpt_resaved.json")) problems.push_back("checkpoint bytes changed on re-save");
  const auto again = validator::load_checkpoint(dir + "/ckpt_resaved.json");
  if (!(again.params == model.params) || again.threshold != model.threshold) problems.push_back("checkpoint parameters changed");

  // JSONL outputs of ingest and augment go back through ingest
  const auto ing = cli(with({"ingest", "--in", dir + "/gold.jsonl", "--out", dir + "/ingested.jsonl"}, common_flags()));
  if (ing.code != 0) problems.push_back("ingest failed: " + ing.err);
  for (const auto* f : {"ingested.jsonl", "aug0.jsonl"}) {
    const auto r = cli(with({"ingest", "--in", dir + "/" + f, "--out", dir + "/re_" + f}, common_flags()));
    if (r.code != 0) problems.push_back(std::string("re-ingest of ") + f + " failed: " + r.err);
  }
  // JSON outputs parse
  const auto ev = cli(with({"eval", "--in", dir + "/aug0.jsonl", "--checkpoint", dir + "/ckpt0.json",
                            "--out", dir + "/report.json"}, common_flags()));
  const auto va = cli(with({"validate", "--checkpoint", dir + "/ckpt0.json", "--question",
                            "List the name of employees whose age is greater than 30.", "--sql",
                            "SELECT name FROM emp WHERE age > 30", "--db-id", "company"}, common_flags()));
  const auto lo = cli(with({"localize", "--checkpoint", dir + "/ckpt0.json", "--question",
                            "List the name of employees whose age is greater than 30.", "--sql",
                            "SELECT name FROM emp WHERE age > 30", "--db-id", "company"}, common_flags()));
  for (const auto& [name, r] : std::vector<std::pair<std::string, CliResult>>{{"eval", ev}, {"validate", va}, {"localize", lo}}) {
    if (r.code != 0 || !nlohmann::json::accept(r.out)) problems.push_back(name + " output is not JSON: " + r.err);
  }
  if (!nlohmann::json::accept(read_file(dir + "/report.json"))) problems.push_back("eval report file is not JSON");
  std::string detail = problems.empty() ? "checkpoint re-save byte-identical; JSONL outputs re-ingested; eval/validate/localize JSON parsed" : "";
  for (const auto& p : problems) detail += p + "; ";
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"gradient correctness", 10.0, gradient_check},
      {"NMPNN oracle equivalence", 30.0, nmpnn_oracle},
      {"metric oracle equivalence", 0.0, metrics_oracle},
      {"lowering/execution equivalence", 10.0, lowering_equivalence},
      {"augmentation soundness", 0.0, augmentation_soundness},
      {"scaled end-to-end experiment", 300.0, end_to_end},
      {"localization signal", 60.0, localization},
      {"determinism", 0.0, determinism},
      {"round-trip/format", 0.0, round_trip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_s <= 0.0 || secs < c.limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::string timing = fmt(secs, 2) + "s";
    if (c.limit_s > 0.0) timing += " (limit " + fmt(c.limit_s, 0) + "s)";
    std::cout << (pass ? "PASS" : "FAIL") << "  " << c.name << ": " << o.detail << " [" << timing
              << "]" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
