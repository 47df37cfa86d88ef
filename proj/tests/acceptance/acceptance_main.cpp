// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "support/analysis_fixtures.hpp"
#include "support/loss_cases.hpp"
#include "support/oracles.hpp"
#include "udabench/analysis/analysis.hpp"
#include "udabench/cli/commands.hpp"
#include "udabench/harness/schedule.hpp"
#include "udabench/harness/search.hpp"

using namespace udabench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    pass_ = pass_ && ok;
  }
  Outcome done(const std::string& summary) const {
    std::string d = summary;
    for (const auto& f : failures_) d += "; FAILED: " + f;
    return {pass_, d};
  }

 private:
  bool pass_ = true;
  std::vector<std::string> failures_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int p = 4) { return analysis::fmt_num(v, p); }

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2e", v);
  return b;
}

// 1 ---------------------------------------------------------------------------
Outcome gradient_suite() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20240601);
  double worst = 0.0;
  std::string worst_name;
  std::size_t instances = 0;
  const auto cases = testing::loss_cases();
  for (std::size_t k = 0; k < cases.size(); ++k) {
    for (int i = 0; i < 20; ++i) {
      Rng inst = rng.derive(k * 1000 + static_cast<std::uint64_t>(i));
      const double e = cases[k].run(inst);
      ++instances;
      c.require(e < 1e-4, cases[k].name + " instance " + std::to_string(i) + " rel err " + std::to_string(e));
      if (!(e <= worst)) worst = e, worst_name = cases[k].name;
    }
  }
  const double t = seconds_since(t0);
  c.require(cases.size() >= 18, "expected 18 loss families, have " + std::to_string(cases.size()));
  c.require(t < 60.0, "runtime " + num(t, 1) + " s");
  return c.done(std::to_string(cases.size()) + " losses x 20 instances, worst rel err " + sci(worst) +
                " (" + worst_name + "), " + num(t, 2) + " s");
}

// 2 ---------------------------------------------------------------------------
Outcome im_oracle_equivalence() {
  Check c;
  Rng rng(77);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 1 + rng.below(60), cls = 2 + rng.below(9);
    const Tensor p = testing::random_probs(n, cls, rng);
    const double d = std::abs(validators::im_score(p).value - testing::im_oracle(p));
    worst = std::max(worst, d);
    c.require(d <= 1e-10, "matrix " + std::to_string(k) + " differs by " + std::to_string(d));
  }
  for (std::size_t cls : {2u, 3u, 7u, 31u}) {
    // Confident and balanced: one-hot rows covering every class equally → ln C.
    Tensor top(2 * cls, cls);
    for (std::size_t i = 0; i < 2 * cls; ++i) top(i, i % cls) = 1.0;
    const double hi = validators::im_score(top).value;
    c.require(std::abs(hi - std::log(static_cast<double>(cls))) <= 1e-12, "upper bound for C=" + std::to_string(cls));
    // Uniform rows and single-class one-hot rows → 0.
    const double flat = validators::im_score(Tensor(5, cls, 1.0 / static_cast<double>(cls))).value;
    Tensor single(5, cls);
    for (std::size_t i = 0; i < 5; ++i) single(i, 0) = 1.0;
    const double collapsed = validators::im_score(single).value;
    c.require(std::abs(flat) <= 1e-12 && std::abs(collapsed) <= 1e-12, "lower bound for C=" + std::to_string(cls));
  }
  return c.done("1000 matrices, max |diff| " + sci(worst) + "; bounds 0 and ln C attained");
}

// 3 ---------------------------------------------------------------------------
Outcome snd_fixtures() {
  Check c;
  for (std::size_t n : {3u, 5u, 9u, 50u}) {
    Tensor f(n, 4);
    for (std::size_t i = 0; i < n; ++i) f(i, 0) = 0.5, f(i, 1) = -1.0, f(i, 2) = 2.0, f(i, 3) = 0.25;
    const double v = validators::snd_score(f).value;
    c.require(v == std::log(static_cast<double>(n - 1)),
              "N=" + std::to_string(n) + " gave " + std::to_string(v) + " vs ln(N-1)");
  }
  const double two = validators::snd_score(Tensor::from_rows({{1.0, 0.2}, {-0.4, 0.9}})).value;
  c.require(two == 0.0, "N=2 gave " + std::to_string(two));
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const Tensor f = testing::random_probs(3 + rng.below(30), 2 + rng.below(6), rng);
    const double s = validators::snd_score(f).value, ns = validators::neg_snd_score(f).value;
    const double neg = -s;
    c.require(std::memcmp(&ns, &neg, sizeof(double)) == 0, "NegSND not bit-exact on fixture " + std::to_string(k));
  }
  return c.done("ln(N-1) exact for N in {3,5,9,50}; N=2 -> 0; NegSND == -SND bitwise on 200 fixtures");
}

// 4 ---------------------------------------------------------------------------
Outcome dev_checks() {
  Check c;
  Rng rng(404);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 3 + rng.below(100);
    std::vector<double> L(n), q(n);
    for (auto& v : L) v = rng.uniform(0.0, 3.0);
    for (auto& v : q) v = rng.uniform(0.02, 0.98);
    const double ns = 10 + rng.below(500), nt = 10 + rng.below(500);
    const double want = testing::dev_oracle(L, q, ns, nt);
    const double d = std::abs(validators::dev_risk(L, q, ns, nt) - want) / std::max(1.0, std::abs(want));
    worst = std::max(worst, d);
    c.require(d <= 1e-10, "fixture " + std::to_string(k) + " differs by " + std::to_string(d));
  }
  const std::vector<double> L = {0.3, 1.2, 0.7, 2.0}, q(4, 0.4);
  bool raised = false;
  try {
    validators::dev_risk(L, q, 100, 100);
  } catch (const validators::DegenerateVariance&) {
    raised = true;
  }
  c.require(raised, "constant weights did not raise DegenerateVariance");
  bool flagged = false;
  try {
    const auto s = validators::dev_score(L, q, 100, 100);
    flagged = !s.valid && std::isnan(s.value);
  } catch (...) {
    flagged = false;
  }
  c.require(flagged, "dev_score did not return a flagged invalid score");
  return c.done("1000 fixtures, max rel diff " + sci(worst) +
                "; constant weights raise DegenerateVariance and score as invalid");
}

// 5 ---------------------------------------------------------------------------
Outcome bandwidth_rule() {
  const auto m = algorithms::mmd_multipliers(2);
  const std::vector<double> want = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::string got;
  for (double v : m) got += (got.empty() ? "" : ",") + analysis::fmt_num(v, 2);
  return {m == want, "gamma_exp=2 -> {" + got + "}"};
}

// 6 ---------------------------------------------------------------------------
Outcome onecycle_endpoints() {
  Check c;
  for (double total : {100.0, 1000.0, 2400.0, 12345.0}) {
    for (double lr : {1e-5, 1e-3, 0.1}) {
      c.require(std::abs(harness::onecycle_lr(0, total, lr) - lr / 100) <= 1e-12, "lr(0)");
      c.require(std::abs(harness::onecycle_lr(0.05 * total, total, lr) - lr) <= 1e-12, "lr(0.05T)");
      c.require(std::abs(harness::onecycle_lr(total, total, lr)) <= 1e-12, "lr(T)");
    }
  }
  return c.done("lr(0)=lr_max/100, lr(0.05T)=lr_max, lr(T)=0 for 4 horizons x 3 rates");
}

// 7 ---------------------------------------------------------------------------
Outcome threshold_machinery() {
  Check c;
  const double so = 0.50, thr = 0.98;
  c.require(std::abs(so * thr - 0.49) <= 1e-15, "cutoff is not 49%");
  c.require(!validators::passes_threshold(0.49, so, thr), "49% kept");
  c.require(validators::passes_threshold(0.4901, so, thr), "49.01% dropped");
  c.require(!validators::passes_threshold(0.45, so, thr), "45% kept");
  c.require(validators::passes_threshold(0.10, so, 0.0), "threshold 0 dropped a record");
  std::map<std::string, std::vector<validators::ThresholdPoint>> pts = {
      {"A", {{0.96, 0.9}, {1.02, 0.7}}}, {"B", {{1.00, 0.8}, {0.90, 0.3}}}};
  const double d = validators::derive_threshold(pts);
  c.require(std::abs(d - 0.98) <= 1e-12, "derive_threshold gave " + std::to_string(d));
  return c.done("source-only 50% + 0.98 -> cutoff 49% (0.49 dropped, 0.4901 kept); derived threshold " + num(d, 4));
}

// 8 ---------------------------------------------------------------------------
Outcome analysis_oracle() {
  Check c;
  std::mt19937_64 g(8);
  double worst = 0.0;
  std::size_t undefined = 0, with_ties = 0;
  for (int k = 0; k < 10000; ++k) {
    const std::size_t n = 2 + g() % 40;
    std::vector<double> x(n), y(n);
    const int mode = static_cast<int>(g() % 3);  // 0: continuous, 1: coarse ties, 2: mixed
    std::uniform_int_distribution<int> coarse(0, 4);
    std::normal_distribution<double> fine;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = mode == 0 ? fine(g) : coarse(g);
      y[i] = mode == 1 ? coarse(g) : fine(g);
    }
    with_ties += mode != 0;
    const auto got = analysis::spearman(x, y);
    const auto want = testing::brute_spearman(x, y);
    c.require(got.defined == want.has_value(), "definedness differs on vector " + std::to_string(k));
    if (!want) {
      ++undefined;
      continue;
    }
    const double d = std::abs(got.rho - *want);
    worst = std::max(worst, d);
    c.require(d <= 1e-12, "vector " + std::to_string(k) + " differs by " + std::to_string(d));
  }
  const auto f = testing::mm_column_fixture();
  const auto table = analysis::gap_table(f.observations, f.source_only, f.validators,
                                         {analysis::no_threshold(), analysis::threshold_setting(0.98)});
  const auto gap = table.gap("IM", "None", "MM");
  c.require(gap && std::abs(*gap * 100.0 - 41.1) <= 1e-9, "numeric gap is not 41.1");
  const auto rendered = analysis::render_gap_table(table);
  std::string cell;
  for (const auto& r : rendered.rows) {
    if (r[0] == "MM / gap None") cell = r[1];
  }
  c.require(cell == "41.1", "rendered gap cell is '" + cell + "'");
  for (const auto& [v, expect] : f.expected) {
    for (const auto& [setting, pct] : expect) {
      const auto cellv = setting == "Oracle" ? table.oracle_cell(v, "MM") : table.cell(v, setting, "MM");
      c.require(analysis::fmt_pct(cellv) == pct, v + "/" + setting + " is " + analysis::fmt_pct(cellv));
    }
  }
  return c.done("10^4 vectors (" + std::to_string(with_ties) + " with ties, " + std::to_string(undefined) +
                " zero-variance) max |diff| " + sci(worst) + "; gap(oracle, IM) on MM = 95.2 - 54.1 = " +
                cell);
}

// 9 ---------------------------------------------------------------------------
Outcome desk_scale_reproduction() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto quiet = logging::set_sink([](logging::Level l, std::string_view m) {
    if (l >= logging::Level::error) std::cerr << "[error] " << m << "\n";
  });
  double so_sum = 0.0, oracle_sum = 0.0;
  std::map<std::string, double> val_sum;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    harness::SearchOptions o;
    o.n_trials = 20;
    o.master_seed = seed;
    // Default budget and validators; the DEV domain classifier is trained
    // briefly so 100 trials x all checkpoints fit the time limit.
    o.base.validator_options.dev_epochs = 5;
    o.base.validator_options.dev_lr = 1e-2;
    const auto r = harness::random_search("DANN", "moons-45", o);
    const double so = r.reference.checkpoints.front().tgt_val_acc;
    const auto& oracle = r.best.at("oracle");
    so_sum += so;
    oracle_sum += oracle.tgt_val_acc;
    per_seed << " s" << seed << ":" << num(100 * so, 1) << "->" << num(100 * oracle.tgt_val_acc, 1);
    for (const auto& v : o.base.validators) {
      if (v == "oracle") continue;
      auto it = r.best.find(v);
      // A validator with no valid score on the pool selects nothing.
      const double acc = it == r.best.end() ? 0.0 : it->second.tgt_val_acc;
      val_sum[v] += acc;
      c.require(oracle.tgt_val_acc >= acc, "seed " + std::to_string(seed) + ": " + v + " tgt-val " +
                                               num(acc) + " > oracle " + num(oracle.tgt_val_acc));
      c.require(oracle.tgt_train_acc >= (it == r.best.end() ? 0.0 : it->second.tgt_train_acc),
                "seed " + std::to_string(seed) + ": " + v + " beats oracle on target-train");
    }
  }
  logging::set_sink(quiet);
  const double gain = 100.0 * (oracle_sum - so_sum) / 5.0;
  const double t = seconds_since(t0);
  c.require(gain >= 5.0, "mean gain " + num(gain, 2) + " pts < 5");
  c.require(t <= 300.0, "runtime " + num(t, 1) + " s > 300 s");
  std::string others;
  for (const auto& [v, s] : val_sum) others += " " + v + " " + num(100 * s / 5, 1);
  return c.done("source-only " + num(100 * so_sum / 5, 1) + "% -> oracle " + num(100 * oracle_sum / 5, 1) +
                "% (+" + num(gain, 1) + " pts);" + others + ";" + per_seed.str() + "; " + num(t, 1) + " s");
}

// 10 --------------------------------------------------------------------------
Outcome determinism() {
  Check c;
  const auto root = fs::temp_directory_path() / "udabench_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  auto search = [&](const std::string& algo, const std::string& seed, const std::string& workers,
                    const std::string& name) {
    const std::string out = (root / name).string();
    std::vector<std::string> args = {"uda_bench", "--log-level", "error", "search", "--task", "moons-45",
                                     "--algorithm", algo, "--trials", "4", "--seed", seed, "--epochs", "4",
                                     "--workers", workers, "--out", out};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream sink;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), sink, sink);
    c.require(code == 0, name + " exited " + std::to_string(code));
    return code == 0 ? analysis::read_text(out + "/records.jsonl") : std::string();
  };
  std::size_t bytes = 0;
  for (const char* algo : {"DANN", "MCC-DANN", "ATDOC"}) {
    const std::string a = search(algo, "123", "1", std::string(algo) + "_a");
    const std::string b = search(algo, "123", "1", std::string(algo) + "_b");
    const std::string w = search(algo, "123", "3", std::string(algo) + "_w3");
    const std::string other = search(algo, "124", "1", std::string(algo) + "_other");
    c.require(!a.empty() && a == b, std::string(algo) + ": repeat differs");
    c.require(a == w, std::string(algo) + ": 3 workers differ from 1");
    c.require(a != other, std::string(algo) + ": a different seed gave identical records");
    bytes += a.size();
  }
  fs::remove_all(root);
  return c.done("DANN, MCC-DANN, ATDOC: repeated searches byte-identical (" + std::to_string(bytes) +
                " bytes), also with 3 workers; another seed differs");
}

// 11 --------------------------------------------------------------------------
Outcome split_protocol() {
  Check c;
  std::size_t checked = 0;
  for (std::size_t n = 2; n <= 100; ++n) {
    // Three classes so every size also meets a neighbour of a different size.
    std::vector<int> labels;
    const std::size_t sizes[3] = {n, 2 + (n * 7) % 99, 2 + (n * 13) % 99};
    for (int k = 0; k < 3; ++k)
      for (std::size_t i = 0; i < sizes[k]; ++i) labels.push_back(k);
    std::mt19937_64 g(n);
    std::shuffle(labels.begin(), labels.end(), g);
    const auto s = data::split_per_class(labels, 0.8, 11);
    const auto again = data::split_per_class(labels, 0.8, 11);
    c.require(s.train == again.train && s.val == again.val, "not deterministic at n=" + std::to_string(n));
    std::vector<int> seen(labels.size(), 0);
    for (auto i : s.train) ++seen[i];
    for (auto i : s.val) ++seen[i];
    c.require(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }),
              "train/val not a disjoint cover at n=" + std::to_string(n));
    for (int k = 0; k < 3; ++k) {
      const auto in_train = std::count_if(s.train.begin(), s.train.end(), [&](std::size_t i) { return labels[i] == k; });
      const std::size_t want = (4 * sizes[k]) / 5;  // floor(0.8 n) in integers
      c.require(static_cast<std::size_t>(in_train) == want,
                "class size " + std::to_string(sizes[k]) + ": " + std::to_string(in_train) + " train, want " +
                    std::to_string(want));
      ++checked;
    }
  }
  return c.done("class sizes 2-100 (" + std::to_string(checked) + " classes): deterministic, disjoint, floor(0.8 n) train");
}

}  // namespace

int main(int argc, char** argv) {
  // Optional: run a subset, e.g. `acceptance 1 8`.
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"IM oracle equivalence and bounds", im_oracle_equivalence},
      {"SND fixtures", snd_fixtures},
      {"DEV oracle and degenerate variance", dev_checks},
      {"MMD bandwidth rule", bandwidth_rule},
      {"one-cycle endpoints", onecycle_endpoints},
      {"threshold machinery", threshold_machinery},
      {"analysis oracle", analysis_oracle},
      {"desk-scale reproduction", desk_scale_reproduction},
      {"determinism", determinism},
      {"split protocol", split_protocol},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
