// Acceptance report: one PASS/FAIL line per criterion with the measured
// numbers. Exits 0 once every criterion has been evaluated; --strict also
// fails the process when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dadin/checkpoint.hpp"
#include "dadin/commands.hpp"
#include "dadin/config.hpp"
#include "dadin/data.hpp"
#include "dadin/experiments.hpp"
#include "dadin/loss.hpp"
#include "dadin/metrics.hpp"
#include "dadin/model.hpp"
#include "dadin/train.hpp"
#include "fixtures.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace dadin;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string num(double v, int digits = 5) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

// Hyperparameters of the bundled fixture with absolute data paths.
ExperimentConfig fixture_config(const fs::path& out) {
  const fs::path dir = DADIN_FIXTURE_DIR;
  ExperimentConfig c;
  c.load_file(dir / "config.txt");
  c.target_csv = dir / "target.csv";
  c.source_csv = dir / "source.csv";
  c.schema = dir / "schema.txt";
  c.out_dir = out;
  return c;
}

// --- 1 -------------------------------------------------------------------------------------

Verdict gradient_correctness() {
  const auto cfg = fixture::tiny_config(4, 2);
  const LossWeights w{1.0, 0.7, 1.3, 0.4};
  for (std::uint64_t seed = 1; seed < 500; ++seed) {
    Rng rng(seed);
    DadinModel model(cfg, rng);
    fixture::scramble(model.params(), rng);
    const auto batch = fixture::tiny_instances(3, cfg, rng);
    Rng unused(0);
    const auto out = model.forward(batch, false, unused);
    // Both intra-class branches populated and no instance within reach of the threshold.
    if (out.intra.rows0.empty() || out.intra.rows1.empty()) continue;
    const auto check = fixture::check_model_gradients(model, batch, w, 1e-4);
    if (check.routing_margin < 1e-3) continue;

    std::map<Partition, std::size_t> tensors;
    for (const auto& p : check.params) ++tensors[p.partition];
    std::string worst_name;
    for (const auto& p : check.params) {
      if (p.worst == check.worst) worst_name = p.name;
    }
    return {check.worst < 1e-4 && tensors.size() == 5,
            "seed " + std::to_string(seed) + ", " + std::to_string(check.params.size()) +
                " tensors in " + std::to_string(tensors.size()) + " partitions, worst rel err " +
                sci(check.worst) + " (" + worst_name + "), tol 1e-4"};
  }
  return {false, "no batch with both branches and a routing margin above 1e-3"};
}

// --- 2 -------------------------------------------------------------------------------------

void step_partitions(ParamStore& params, std::initializer_list<Partition> which, double mu) {
  for (auto& e : params.entries()) {
    if (std::find(which.begin(), which.end(), e.partition) == which.end()) continue;
    auto v = e.value.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= mu * e.value.grad()[i];
  }
}

Verdict grl_contract() {
  Rng rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> xs(60), ws(60);
  for (auto& v : xs) v = n(rng);
  for (auto& v : ws) v = n(rng);
  auto a = Tensor::matrix(6, 10, xs, true);
  auto b = Tensor::matrix(6, 10, xs, true);
  const auto w = Tensor::matrix(6, 10, ws);
  const auto ra = grad_reverse(a);
  const bool forward_identical = std::memcmp(ra.values().data(), a.values().data(), 60 * sizeof(double)) == 0;
  sum(mul(sigmoid(ra), w)).backward();
  sum(mul(sigmoid(b), w)).backward();
  bool negated = true;
  for (std::size_t i = 0; i < 60; ++i) negated &= a.grad()[i] == -b.grad()[i];

  const auto cfg = fixture::tiny_config();
  DadinModel model(cfg, rng);
  fixture::scramble(model.params(), rng);
  const auto batch = fixture::tiny_instances(16, cfg, rng);
  const LossWeights only_global{0.0, 1.0, 0.0, 0.5};
  model.params().zero_grad();
  const double before = fixture::objective(model, batch, only_global).breakdown.global;
  fixture::objective(model, batch, only_global).total.backward();
  const auto saved = model.params().snapshot();
  const double mu = 1e-3;
  step_partitions(model.params(), {Partition::kGlobalDomain}, mu);
  const double after_d = fixture::objective(model, batch, only_global).breakdown.global;
  model.params().restore(saved);
  step_partitions(model.params(), {Partition::kFeature}, mu);
  const double after_f = fixture::objective(model, batch, only_global).breakdown.global;

  return {forward_identical && negated && after_d < before && after_f > before,
          std::string("forward bitwise ") + (forward_identical ? "yes" : "no") + ", gradient negated bitwise " +
              (negated ? "yes" : "no") + "; L_d " + num(before, 8) + " -> " + num(after_d, 8) + " (theta_d step), -> " +
              num(after_f, 8) + " (theta_f step)"};
}

// --- 3 -------------------------------------------------------------------------------------

Verdict bi_interaction_identity() {
  Rng rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> width(1, 16);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = width(rng);
    std::vector<double> m(4 * d), c(4);
    for (auto& v : m) v = n(rng);
    for (auto& v : c) v = n(rng);
    const auto fast = bi_interaction(Tensor::matrix(1, 4 * d, m), Tensor::vector(c));
    const auto pair = bi_interaction_pairwise(Tensor::matrix(1, 4 * d, m), Tensor::vector(c));
    for (std::size_t k = 0; k < d; ++k) worst = std::max(worst, std::abs(fast.at(k) - pair.at(k)));
  }
  const std::vector<double> m{1, 0, 0, 1, 1, 1, 2, 0};
  const auto brute = oracle::pairwise_interaction(m, std::vector<double>{1, 1, 1, 1}, 2);
  const auto ones = Tensor::vector({1, 1, 1, 1});
  const auto fast = bi_interaction(Tensor::matrix(1, 8, m), ones);
  const auto pair = bi_interaction_pairwise(Tensor::matrix(1, 8, m), ones);
  const bool fixture_ok = brute == std::vector<double>{5, 1} && fast.at(0) == 5.0 && fast.at(1) == 1.0 &&
                          pair.at(0) == 5.0 && pair.at(1) == 1.0;
  return {worst <= 1e-10 && fixture_ok, "1000 trials, max |pairwise - square-of-sum| " + sci(worst) +
                                            ", [5,1] fixture " + (fixture_ok ? "exact" : "WRONG")};
}

// --- 4 -------------------------------------------------------------------------------------

Verdict auc_oracle() {
  Rng rng(4);
  std::uniform_int_distribution<std::size_t> size(2, 1000);
  std::uniform_int_distribution<int> coarse(0, 20);
  std::uniform_real_distribution<double> fine(0.0, 1.0);
  std::size_t auc_mismatch = 0, loss_mismatch = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto nn = size(rng);
    std::bernoulli_distribution pos(fine(rng) * 0.8 + 0.1);
    std::vector<double> s(nn), y(nn);
    for (std::size_t i = 0; i < nn; ++i) {
      s[i] = trial % 2 == 0 ? coarse(rng) / 20.0 : fine(rng);
      y[i] = pos(rng) ? 1.0 : 0.0;
    }
    y[0] = 1.0;
    y[1] = 0.0;
    auc_mismatch += auc(s, y) != oracle::brute_auc(s, y);
    loss_mismatch += logloss(s, y) != ctr_loss(s, y);
  }
  return {auc_mismatch == 0 && loss_mismatch == 0,
          "500 sets (n <= 1000, half with ties): " + std::to_string(auc_mismatch) + " AUC mismatches, " +
              std::to_string(loss_mismatch) + " logloss mismatches"};
}

// --- 5 -------------------------------------------------------------------------------------

Verdict toy_moons(std::string& extra) {
  ToyConfig cfg;
  double dadin = 0, base = 0, dom = 0, spec = 0, da = 0, dom_max = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = run_toy(cfg, seed);
    dadin += r.dadin.target_accuracy / 5;
    base += r.baseline.target_accuracy / 5;
    dom += r.dadin.domain_accuracy / 5;
    dom_max = std::max(dom_max, r.dadin.domain_accuracy);
    spec += r.centroid_distance_spec / 5;
    da += r.centroid_distance_da / 5;
    per_seed << "      seed " << seed << ": acc " << num(r.dadin.target_accuracy, 4) << " vs "
             << num(r.baseline.target_accuracy, 4) << ", domain acc " << num(r.dadin.domain_accuracy, 4)
             << ", dist spec " << num(r.centroid_distance_spec, 4) << " DA " << num(r.centroid_distance_da, 4) << '\n';
  }
  const bool a = dadin - base > 0.0, b = dom <= 0.6, c = da < spec;
  extra = per_seed.str();
  return {a && b && c, std::string("(a) ") + (a ? "pass" : "FAIL") + " target acc " + num(dadin, 4) + " vs DNN " +
                           num(base, 4) + " (margin " + sci(dadin - base) + "); (b) " + (b ? "pass" : "FAIL") +
                           " domain acc " + num(dom, 4) + " (max " + num(dom_max, 4) + ") <= 0.6; (c) " +
                           (c ? "pass" : "FAIL") + " centroid dist DA " + num(da, 4) + " < spec " + num(spec, 4)};
}

// --- 6 -------------------------------------------------------------------------------------

Verdict ablation_direction(std::string& extra) {
  const auto dir = fresh_dir("dadin_acceptance_shift");
  auto c = fixture_config(dir);
  c.synth.users = 800;
  c.synth.target_records = 8000;
  c.synth.source_records = 12000;
  c.target_csv = dir / "target.csv";
  c.source_csv = dir / "source.csv";
  c.schema = dir / "schema.txt";
  write_synthetic_dataset(c.synth, dir);

  const auto data = load_dataset({c.target_csv, c.source_csv, c.schema}, c.model.seqlen);
  Rng split_rng(c.split_seed);
  const auto split = materialize_split(data, resample(data.log, c.split, split_rng));
  RunSpec spec;
  spec.model = c.model;
  size_model_to(spec.model, data.vocab);
  spec.train = c.train;
  spec.weights = c.weights;
  const std::vector<std::string> variants{"DADIN++", "DADIN9", "DADIN6"};
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const auto table = run_ablation(spec, variants, split, seeds);

  std::map<std::string, const AblationRow*> row;
  for (const auto& r : table.rows) row[r.variant] = &r;
  const double full = row.at("DADIN++")->report.auc;
  const double m9 = full - row.at("DADIN9")->report.auc, m6 = full - row.at("DADIN6")->report.auc;
  std::ostringstream os;
  for (const auto& r : table.rows) {
    os << "      " << r.variant << ": test AUC " << num(r.report.auc) << " +- " << num(r.report.auc_std) << " over "
       << r.report.per_seed.size() << " seeds";
    if (r.has_attention) {
      os << "; mean interest weights v_u " << num(r.attention.overall.v_u, 3) << ", v_s "
         << num(r.attention.overall.v_s, 3) << ", v_t " << num(r.attention.overall.v_t, 3);
    }
    os << '\n';
  }
  extra = os.str();
  fs::remove_all(dir);
  return {m9 > 0.0 && m6 > 0.0, std::to_string(split.train.size() + split.valid.size() + split.test.size()) +
                                    " instances; DADIN++ " + num(full) + ", margin over DADIN9 " + num(m9) +
                                    ", over DADIN6 " + num(m6)};
}

// --- 7 -------------------------------------------------------------------------------------

// Resample, train and evaluate in dir; returns every artifact concatenated.
std::string run_pipeline(const ExperimentConfig& c, json& eval) {
  run_command("resample", c);
  run_command("train", c);
  eval = json::parse(run_command("eval", c).json);
  std::string digest;
  for (const char* f : {"train.ids", "valid.ids", "test.ids", "vocab.txt", "model.ckpt", "train_log.jsonl", "eval.jsonl"}) {
    digest += slurp(c.out_dir / f);
  }
  return digest;
}

double cold_auc_of(const json& eval) { return eval["test_cold"].is_null() ? 0.0 : eval["test_cold"]["auc"].get<double>(); }

Verdict pipeline(std::string& extra) {
  const auto dir = fresh_dir("dadin_acceptance_pipeline");
  json first, second;
  const auto a = run_pipeline(fixture_config(dir), first);
  fresh_dir("dadin_acceptance_pipeline");
  const auto b = run_pipeline(fixture_config(dir), second);
  const bool identical = a == b;
  const double cold = cold_auc_of(first);

  // Same pipeline without the adversarial terms, reported for context only.
  fresh_dir("dadin_acceptance_pipeline");
  auto plain = fixture_config(dir);
  plain.variant = "DADIN9";
  json reference;
  run_pipeline(plain, reference);
  extra = "      for reference, DADIN9 on the same split: cold-start AUC " + num(cold_auc_of(reference)) + '\n';
  fs::remove_all(dir);
  return {cold > 0.5 && identical, "DADIN++ cold-start AUC " + num(cold) + " on " +
                                       std::to_string(first["cold_start_instances"].get<std::size_t>()) +
                                       " instances (> 0.5 required); replay " +
                                       (identical ? "bitwise identical" : "DIFFERS")};
}

// --- 8 -------------------------------------------------------------------------------------

Record rec(std::uint64_t id, int domain, std::uint32_t user, double label, std::int64_t t) {
  Record r;
  r.id = id;
  r.domain = domain;
  r.user = user;
  r.item_ids = {2};
  r.profile_ids = {2};
  r.label = label;
  r.timestamp = t;
  return r;
}

Verdict resampler() {
  Rng rng(8);
  std::uniform_int_distribution<int> users(3, 60), days(1, 5), count(1, 3);
  std::uniform_real_distribution<double> frac(0.1, 1.0), cross(0.0, 1.0);
  std::bernoulli_distribution click(0.4);
  std::size_t dup = 0, leak = 0, uncovered = 0, trials = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    InteractionLog log;
    const auto nu = static_cast<std::uint32_t>(users(rng));
    for (std::uint32_t u = 0; u < nu; ++u) {
      for (int d = days(rng); d > 0; --d) {
        for (int k = count(rng); k > 0; --k) log.records.push_back(rec(log.records.size(), kTargetDomain, u, click(rng), d));
      }
      for (int k = count(rng); k > 0; --k) log.records.push_back(rec(log.records.size(), kSourceDomain, u, click(rng), days(rng)));
    }
    const bool disjoint = trial % 2 == 0;
    const SplitSpec spec{frac(rng), disjoint ? 0.0 : cross(rng), 1.0};
    const auto m = resample(log, spec, rng);
    ++trials;

    std::map<std::uint64_t, int> seen;
    for (const auto* ids : {&m.train, &m.valid, &m.test})
      for (auto id : *ids) ++seen[id];
    std::set<std::uint32_t> train_target, eval_users, source_train, target_users;
    for (const auto& r : log.records) {
      if (r.domain != kTargetDomain) continue;
      target_users.insert(r.user);
      dup += seen[r.id] > 1;
    }
    for (auto id : m.train) {
      const auto& r = log.records[id];
      (r.domain == kTargetDomain ? train_target : source_train).insert(r.user);
    }
    for (const auto* ids : {&m.valid, &m.test})
      for (auto id : *ids) eval_users.insert(log.records[id].user);
    for (auto u : target_users) uncovered += source_train.count(u) == 0;
    if (disjoint) {
      for (auto u : eval_users) leak += train_target.count(u);
    }
  }
  return {dup == 0 && leak == 0 && uncovered == 0,
          std::to_string(trials) + " trials: (a) " + std::to_string(dup) + " duplicated records, (b) " +
              std::to_string(leak) + " shared users at A_cross = 0, (c) " + std::to_string(uncovered) +
              " target users without source data"};
}

// --- 9 -------------------------------------------------------------------------------------

std::vector<std::vector<double>> read_curve(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("iteration", 0) == 0) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(std::stod(cell));
    rows.push_back(cells);
  }
  return rows;
}

Verdict loss_curves(std::string& extra) {
  const auto dir = fresh_dir("dadin_acceptance_curves");
  auto c = fixture_config(dir);
  c.split_dir = dir;
  run_command("resample", c);
  c.lambda_grid = "1:1,0.5:1,1:0.5,0.5:0.5";
  const auto res = json::parse(run_command("loss-curves", c).json);

  std::size_t complete = 0, descending = 0;
  std::ostringstream os;
  for (const auto& p : res["points"]) {
    const auto rows = read_curve(p["file"].get<std::string>());
    const bool full = rows.size() == p["iterations"].get<std::size_t>() && !rows.empty() &&
                      std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.size() == 10; });
    complete += full;
    // Final: mean L_y over the last epoch; initial: the first iteration.
    const double first = p["initial_ctr_loss"].get<double>(), last = p["final_epoch_ctr_loss"].get<double>();
    descending += last < first;
    os << "      lambda2 " << p["lambda2"].get<double>() << ", lambda3 " << p["lambda3"].get<double>() << ": "
       << rows.size() << " iterations, L_y " << num(first) << " -> " << num(last) << (last < first ? "" : "  (no descent)")
       << '\n';
  }

  c.lambda_grid = "0:0";
  run_command("loss-curves", c);
  double worst = 0.0;
  const auto zero = read_curve(dir / "loss_curves" / "lambda2-0_lambda3-0.tsv");
  for (const auto& r : zero) worst = std::max(worst, std::abs(r[6] - 1.0 * r[2]));
  extra = os.str();
  fs::remove_all(dir);
  const bool pass = res["points"].size() == 4 && complete == 4 && descending == 4 && !zero.empty() && worst <= 1e-12;
  return {pass, std::to_string(complete) + "/4 complete trajectory files, " + std::to_string(descending) +
                    "/4 with final L_y < initial; at lambda2 = lambda3 = 0 max |total - lambda1 L_y| " +
                    sci(worst) + " over " + std::to_string(zero.size()) + " iterations"};
}

// --- 10 ------------------------------------------------------------------------------------

Verdict interest_weights() {
  Rng rng(10);
  std::size_t passes = 0, nonpositive = 0, not_one = 0, dadin2 = 0;
  for (const auto& name : variant_names()) {
    auto cfg = fixture::tiny_config(6, 3);
    cfg.variant = variant_by_name(name);
    for (int trial = 0; trial < 20; ++trial) {
      DadinModel model(cfg, rng);
      fixture::scramble(model.params(), rng, 0.2 + 0.1 * trial);
      const auto batch = fixture::tiny_instances(16, cfg, rng);
      const auto out = model.forward(batch, trial % 2 == 0, rng);
      ++passes;
      for (const auto* t : {&out.v_u, &out.v_s, &out.v_t}) {
        for (double v : t->values()) {
          nonpositive += !(v > 0.0);
          if (name == "DADIN2") {
            not_one += v != 1.0;
            ++dadin2;
          }
        }
      }
    }
  }
  return {nonpositive == 0 && not_one == 0 && dadin2 > 0,
          std::to_string(passes) + " forward passes over all variants: " + std::to_string(nonpositive) +
              " non-positive weights; DADIN2 " + std::to_string(not_one) + " of " + std::to_string(dadin2) +
              " weights differ from 1"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0: none
  std::function<Verdict(std::string&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  auto plain = [](Verdict (*f)()) { return [f](std::string&) { return f(); }; };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", 10, plain(gradient_correctness)},
      {2, "gradient reversal contract", 0, plain(grl_contract)},
      {3, "bi-interaction identity", 0, plain(bi_interaction_identity)},
      {4, "AUC oracle equivalence", 0, plain(auc_oracle)},
      {5, "toy moons study", 120, toy_moons},
      {6, "ablation direction under domain shift", 0, ablation_direction},
      {7, "end-to-end pipeline on the bundled fixture", 180, pipeline},
      {8, "resampler properties", 0, plain(resampler)},
      {9, "loss-curve harness", 0, loss_curves},
      {10, "interest-attention weights", 0, plain(interest_weights)},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    std::string extra;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      v = c.run(extra);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = num(secs, 1) + " s";
    if (c.budget_seconds > 0) {
      const bool in_time = secs < c.budget_seconds;
      timing += in_time ? " < " : " >= ";
      timing += num(c.budget_seconds, 0) + " s budget";
      v.pass = v.pass && in_time;
    }
    failed += !v.pass;
    std::printf("[%s] %d. %s: %s (%s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), timing.c_str());
    if (!extra.empty()) std::fputs(extra.c_str(), stdout);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return strict && failed > 0 ? 1 : 0;
}
