#pragma once

#include <optional>
#include <string>
#include <vector>

#include "udabench/algorithms/config.hpp"
#include "udabench/algorithms/losses.hpp"
#include "udabench/diffcore/adam.hpp"
#include "udabench/models/bundle.hpp"

namespace udabench::algorithms {

using models::ModelBundle;

struct Batch {
  Tensor x;
  std::vector<int> y;             // source batches only
  std::vector<std::size_t> idx;   // row indices into the split the batch came from
};

struct LossTerm {
  std::string name;
  double weight = 0.0;
  double value = 0.0;  // unweighted
};

struct LossReport {
  std::vector<LossTerm> terms;
  double total = 0.0;

  bool has(const std::string& name) const {
    for (const auto& t : terms)
      if (t.name == name) return true;
    return false;
  }
  const LossTerm& term(const std::string& name) const {
    for (const auto& t : terms)
      if (t.name == name) return t;
    throw InputError("loss report has no term " + name);
  }
};

/// Per-trial state that outlives a single step.
struct AdaptState {
  std::optional<CdanProjection> cdan;
  std::optional<AtdocBank> atdoc;
  std::size_t generator_updates = 0;  // MCD/SWD phase-C updates performed
};

namespace detail {

/// Collects weighted terms; the optimized total only contains non-zero weights,
/// so parameters reached solely by zero-weight terms receive no update at all.
class Terms {
 public:
  Terms(LossReport& report) : report_(report) {}

  void add(const std::string& name, double weight, Var term) {
    report_.terms.push_back({name, weight, term.item()});
    report_.total += weight * term.item();
    if (weight == 0.0) return;
    Var w = scale(term, weight);
    total_ = total_ ? add_vars(*total_, w) : w;
  }

  /// Backward + Adam on `params` when any term carries weight. Returns whether a step ran.
  bool step(Graph& g, const std::vector<Parameter*>& params, double lr) {
    if (!total_) return false;
    g.backward(*total_);
    adam_step(std::span<Parameter* const>(params), lr);
    total_.reset();
    return true;
  }

 private:
  static Var add_vars(Var a, Var b) { return a + b; }
  LossReport& report_;
  std::optional<Var> total_;
};

inline std::vector<Parameter*> concat(std::vector<Parameter*> a, const std::vector<Parameter*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline std::vector<Parameter*> task_params(ModelBundle& b) {
  auto out = models::generator_params(b);
  for (std::size_t k = 0; k < b.classifiers.size(); ++k) out = concat(out, models::classifier_params(b, k));
  if (b.residual) out = concat(out, b.residual->pointers());
  return out;
}

inline std::vector<Parameter*> head_params(ModelBundle& b) {
  std::vector<Parameter*> out;
  for (std::size_t k = 0; k < b.classifiers.size(); ++k) out = concat(out, models::classifier_params(b, k));
  return out;
}

inline void clear_grads(ModelBundle& b) {
  for (auto* p : models::all_params(b)) {
    p->has_grad = false;
    p->grad = Tensor();
  }
}

struct Split2 {
  Var src, tgt;
};

inline Split2 split(Var v, std::size_t ns) { return {slice_rows(v, 0, ns), slice_rows(v, ns, v.rows())}; }

}  // namespace detail

/// Turns a trained source-only bundle into the starting point of a trial:
/// sets the feature layer, adds the components the algorithm needs, resets
/// optimizer state, and initializes per-trial state (CDAN projections, ATDOC bank).
inline AdaptState prepare_adaptation(const AlgorithmConfig& cfg, ModelBundle& b, models::FeatureLayer layer,
                                     const Tensor& tgt_train_x, Rng& rng) {
  cfg.validate();
  b.layer = layer;
  b.allow_fl8 = accepts_fl8(cfg.algorithm);
  if (layer == models::FeatureLayer::fl8 && !b.allow_fl8) {
    throw ConfigError("feature layer FL8 is not supported by " + cfg.name());
  }
  for (auto* p : models::all_params(b)) {
    p->first_moment = Tensor();
    p->second_moment = Tensor();
    p->step = 0;
    p->has_grad = false;
  }
  Rng init = rng.derive(0xC0FFEE);
  if (cfg.uses_discriminator()) {
    const std::size_t width = cfg.algorithm == Algo::cdan ? cfg.options.cdan_dim : b.feature_width();
    models::add_discriminator(b, width, init);
  }
  if ((cfg.algorithm == Algo::mcd || cfg.algorithm == Algo::swd) && b.classifiers.size() < 2) {
    models::add_classifier(b, init);
  }
  if (cfg.algorithm == Algo::rtn) b.residual = models::build_residual_block(b.dims.num_classes, init);
  AdaptState st;
  if (cfg.algorithm == Algo::cdan) {
    st.cdan = make_cdan_projection(b.feature_width(), b.dims.num_classes, cfg.options.cdan_dim, init);
  }
  if (cfg.algorithm == Algo::atdoc) {
    auto inf = models::infer(b, tgt_train_x);
    st.atdoc = AtdocBank::init(inf.features, b.dims.num_classes);
  }
  return st;
}

namespace detail {

inline LossReport mcd_step(const AlgorithmConfig& cfg, ModelBundle& b, AdaptState& st, const Batch& src,
                           const Batch& tgt, double lr, Rng& rng) {
  if (b.classifiers.size() != 2) throw ConfigError(cfg.name() + " needs exactly two classifiers");
  const double lambda_L = cfg.get("lambda_L"), lambda_disc = cfg.get("lambda_disc");
  const auto n_mcd = static_cast<std::size_t>(cfg.get("N_mcd"));
  if (n_mcd < 1) throw ConfigError("N_mcd must be at least 1");
  const bool swd = cfg.algorithm == Algo::swd;
  const Tensor proj = swd ? random_projections(b.dims.num_classes, cfg.options.swd_projections, rng) : Tensor();
  auto discrepancy = [&](Var p1, Var p2) { return swd ? swd_discrepancy(p1, p2, proj) : mcd_discrepancy(p1, p2); };

  LossReport report;
  const std::size_t ns = src.x.rows();
  {  // A: everything on source cross entropy
    Graph g;
    auto t = models::forward_with_taps(g, b, g.input(src.x), true, rng);
    Terms terms(report);
    terms.add("mcd_src_ce", lambda_L, src_ce_loss(t.preds[0], src.y, 1.0) + src_ce_loss(t.preds[1], src.y, 1.0));
    terms.step(g, models::all_params(b), lr);
  }
  {  // B: classifiers keep source accuracy while maximizing target discrepancy
    Graph g;
    Var x = g.input(vstack(src.x, tgt.x));
    auto t = models::forward_with_taps(g, b, x, true, rng);
    auto heads = models::heads_forward(g, b, detach(t.features), true, rng);
    auto p0 = split(heads[0], ns), p1 = split(heads[1], ns);
    Terms terms(report);
    terms.add("mcd_head_ce", lambda_L, src_ce_loss(p0.src, src.y, 1.0) + src_ce_loss(p1.src, src.y, 1.0));
    terms.add("mcd_disc_max", -lambda_disc, discrepancy(p0.tgt, p1.tgt));
    terms.step(g, head_params(b), lr);
  }
  for (std::size_t r = 0; r < n_mcd; ++r) {  // C: generator minimizes discrepancy
    Graph g;
    auto t = models::forward_with_taps(g, b, g.input(tgt.x), true, rng);
    LossReport phase;
    Terms terms(phase);
    terms.add("mcd_disc_min", lambda_disc, discrepancy(t.preds[0], t.preds[1]));
    terms.step(g, models::generator_params(b), lr);
    ++st.generator_updates;
    if (r + 1 == n_mcd) {
      report.terms.push_back(phase.terms.front());
      report.total += phase.total;
    }
  }
  return report;
}

}  // namespace detail

/// One optimization step of the configured algorithm on a source and a target batch.
inline LossReport compose_step(const AlgorithmConfig& cfg, ModelBundle& b, AdaptState& st, const Batch& src,
                               const Batch& tgt, double lr, Rng& rng) {
  using detail::split;
  if (b.layer == models::FeatureLayer::fl8 && !accepts_fl8(cfg.algorithm)) {
    throw ConfigError("feature layer FL8 is not supported by " + cfg.name());
  }
  if (cfg.algorithm == Algo::mcd || cfg.algorithm == Algo::swd) {
    auto r = detail::mcd_step(cfg, b, st, src, tgt, lr, rng);
    detail::clear_grads(b);
    return r;
  }

  LossReport report;
  Graph g;
  const std::size_t ns = src.x.rows();
  Var x = g.input(vstack(src.x, tgt.x));
  auto taps = models::forward_with_taps(g, b, x, true, rng);
  auto f = split(taps.features, ns);
  auto p = split(taps.preds[0], ns);
  auto logits = split(taps.logits[0], ns);
  auto disc = [&](Var v) { return models::discriminator_forward(g, *b.discriminator, v); };

  detail::Terms terms(report);
  // Terms trained by a separate discriminator update (two-player algorithms).
  LossReport disc_report;
  detail::Terms disc_terms(disc_report);

  const Algo a = cfg.algorithm;
  if (a == Algo::rtn) {
    Var adjusted = logits.src + models::residual_forward(g, *b.residual, logits.src);
    terms.add("rtn_src_ce", cfg.get("lambda_L"), src_ce_loss(row_softmax(adjusted), src.y, 1.0));
  } else {
    terms.add("src_ce", cfg.get("lambda_L"), src_ce_loss(p.src, src.y, 1.0));
  }

  switch (a) {
    case Algo::source_only: break;
    case Algo::dann:
      terms.add("dann_domain", cfg.get("lambda_D"), dann_loss(f.src, f.tgt, disc, 1.0, cfg.get("lambda_grl")));
      break;
    case Algo::dc:
      terms.add("dc_gen", cfg.get("lambda_G"), dc_loss(domain_probs(disc(taps.features)), 1.0));
      disc_terms.add("dc_disc", cfg.get("lambda_D"), domain_bce(disc(detach(f.src)), disc(detach(f.tgt))));
      break;
    case Algo::cdan: {
      Var h = cdan_combine(taps.features, taps.preds[0], *st.cdan);
      auto hs = split(h, ns);
      terms.add("cdan_gen", cfg.get("lambda_G"), domain_bce(disc(hs.src), disc(hs.tgt), true));
      Var hd = cdan_combine(detach(taps.features), detach(taps.preds[0]), *st.cdan);
      auto hds = split(hd, ns);
      disc_terms.add("cdan_disc", cfg.get("lambda_D"), domain_bce(disc(hds.src), disc(hds.tgt)));
      break;
    }
    case Algo::mmd:
      terms.add("mmd", cfg.get("lambda_F"), mmd_loss(f.src, f.tgt, static_cast<int>(cfg.get("gamma_exp")), 1.0));
      break;
    case Algo::jmmd:
      terms.add("jmmd", cfg.get("lambda_F"),
                jmmd_loss({f.src, p.src}, {f.tgt, p.tgt}, static_cast<int>(cfg.get("gamma_exp")), 1.0));
      break;
    case Algo::coral: terms.add("coral", cfg.get("lambda_F"), coral_loss(f.src, f.tgt, 1.0)); break;
    case Algo::minent: terms.add("minent", cfg.get("lambda_ent"), minent_loss(p.tgt, 1.0)); break;
    case Algo::im: terms.add("im", cfg.get("lambda_imax"), im_loss(p.tgt, 1.0)); break;
    case Algo::itl: {
      const double imin = cfg.get("lambda_imin");
      terms.add("itl_class", cfg.get("lambda_imax"), im_loss(p.tgt, 1.0));
      terms.add("itl_domain", imin, neg(im_loss(domain_probs(disc(taps.features)), 1.0)));
      disc_terms.add("itl_disc", imin > 0.0 ? 1.0 : 0.0, domain_bce(disc(detach(f.src)), disc(detach(f.tgt))));
      break;
    }
    case Algo::mcc:
      terms.add("mcc", cfg.get("lambda_mcc"), mcc_loss(logits.tgt, cfg.get("T_mcc"), 1.0));
      break;
    case Algo::bsp: terms.add("bsp", cfg.get("lambda_bsp"), bsp_loss(f.src, f.tgt, 1.0, cfg.options.bsp_k)); break;
    case Algo::bnm: terms.add("bnm", cfg.get("lambda_bnm"), bnm_loss(p.tgt, 1.0)); break;
    case Algo::afn: terms.add("afn", cfg.get("lambda_afn"), afn_loss(f.src, f.tgt, cfg.get("S_afn"), 1.0)); break;
    case Algo::atdoc: {
      const auto k = static_cast<std::size_t>(cfg.get("k_atdoc"));
      terms.add("atdoc", cfg.get("lambda_atdoc"), atdoc_loss(f.tgt, p.tgt, tgt.idx, *st.atdoc, k, 1.0));
      break;
    }
    case Algo::rtn:
      terms.add("rtn_ent", cfg.get("lambda_ent"), minent_loss(p.tgt, 1.0));
      terms.add("rtn_mmd", cfg.get("lambda_F"), mmd_loss(f.src, f.tgt, cfg.options.rtn_gamma_exp, 1.0));
      break;
    case Algo::mcd:
    case Algo::swd: break;  // handled above
  }
  if (cfg.with_dann) {
    terms.add("dann_domain", cfg.frozen_dann("lambda_D"),
              dann_loss(f.src, f.tgt, disc, 1.0, cfg.frozen_dann("lambda_grl")));
  }

  const bool two_player = a == Algo::dc || a == Algo::cdan || a == Algo::itl;
  if (two_player) {
    terms.step(g, detail::task_params(b), lr);
    disc_terms.step(g, b.discriminator->pointers(), lr);
    for (auto& t : disc_report.terms) report.terms.push_back(t);
    report.total += disc_report.total;
  } else {
    terms.step(g, models::all_params(b), lr);
  }
  if (st.atdoc) st.atdoc->update(tgt.idx, f.tgt.value(), p.tgt.value());
  detail::clear_grads(b);
  return report;
}

}  // namespace udabench::algorithms
