// SPDX-License-Identifier: Apache-2.0
#include "dmat/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmat/errors.hpp"
#include "dmat/losses.hpp"
#include "dmat/rng.hpp"

namespace dmat::train {

using nn::Component;

void TrainConfig::validate() const {
  if (epochs == 0) throw ContractError("train: epochs must be >= 1");
  if (batch_size == 0) throw ContractError("train: batch_size must be >= 1");
  if (k == 0) throw ContractError("train: k must be >= 1");
  if (eval_every == 0) throw ContractError("train: eval_every must be >= 1");
  schedule.validate();
}

namespace {

void update(optim::Sgd& opt, const ad::Gradients& grads, const std::vector<Parameter*>& params,
            double lr) {
  opt.step(params, optim::gather(grads, params), lr);
}

ad::Var source_classifier_loss(ad::Graph& graph, const nn::ComponentSet& set, ad::Var xs,
                               std::span<const std::size_t> labels_s) {
  const auto out = model::forward_path(graph, set, xs);
  return ad::add(losses::cross_entropy(out.ca_logits, labels_s),
                 losses::cross_entropy(out.cb_logits, labels_s));
}

double target_discrepancy(const nn::ComponentSet& set, const Tensor& batch_t) {
  ad::Graph graph;
  const auto out = model::forward_path(graph, set, graph.constant(batch_t));
  return losses::discrepancy(out.ca_probs, out.cb_probs).item();
}

}  // namespace

double source_only_step(nn::ComponentSet& m1, optim::Sgd& opt, const Tensor& batch_s,
                        std::span<const std::size_t> labels_s, double lr) {
  ad::Graph graph;
  const ad::Var loss = source_classifier_loss(graph, m1, graph.constant(batch_s), labels_s);
  update(opt, graph.backward(loss),
         m1.parameters({Component::kG, Component::kT, Component::kCa, Component::kCb}), lr);
  return loss.item();
}

McdTrace step1_mcd(nn::ComponentSet& set, optim::Sgd& opt, const Tensor& batch_s,
                   std::span<const std::size_t> labels_s, const Tensor& batch_t, std::size_t k,
                   double lr) {
  if (k < 1) throw ContractError("step1_mcd: k must be >= 1");
  McdTrace trace;

  // A: fit both classifiers (and the shared trunk) to the source labels.
  trace.classifier_ce = source_only_step(set, opt, batch_s, labels_s, lr);

  // B: push the classifiers apart on target while staying accurate on source.
  {
    ad::Graph graph;
    const ad::Var ce = source_classifier_loss(graph, set, graph.constant(batch_s), labels_s);
    const auto tgt = model::forward_path(graph, set, graph.constant(batch_t));
    const ad::Var dis = losses::discrepancy(tgt.ca_probs, tgt.cb_probs);
    trace.phase_b_dis = dis.item();
    const ad::Var loss = ad::sub(ce, dis);
    update(opt, graph.backward(loss), set.parameters({Component::kCa, Component::kCb}), lr);
  }

  // C: move the features so the classifiers agree on target again.
  const auto trunk = set.parameters({Component::kG, Component::kT});
  for (std::size_t i = 0; i < k; ++i) {
    ad::Graph graph;
    const auto tgt = model::forward_path(graph, set, graph.constant(batch_t));
    const ad::Var dis = losses::discrepancy(tgt.ca_probs, tgt.cb_probs);
    if (i == 0) trace.before = dis.item();
    update(opt, graph.backward(dis), trunk, lr);
  }
  trace.after = target_discrepancy(set, batch_t);
  return trace;
}

Step2Result step2_modules(model::DualModel& model, optim::Sgd& opt, const Tensor& batch_s,
                          std::span<const std::size_t> labels_s, const Tensor& batch_t,
                          double lambda, double lr, const model::StepPlan& plan) {
  Step2Result result;
  if (!plan.step2_m1 && !plan.step2_m2) return result;

  // Both losses are built before either module moves.
  ad::Graph g1, g2;
  std::optional<losses::ModuleLoss> l1, l2;
  if (plan.step2_m1) l1 = losses::loss_m1(g1, batch_s, labels_s, batch_t, model.m1, lambda);
  if (plan.step2_m2) l2 = losses::loss_m2(g2, batch_s, labels_s, batch_t, model.m2);

  if (l1) {
    result.m1_classifier = l1->classifier.item();
    result.m1_domain = l1->domain_source.item() + l1->domain_target.item();
    result.m1_total = l1->total.item();
    update(opt, g1.backward(l1->total), model.m1.parameters(), lr);
  }
  if (l2) {
    result.m2_classifier = l2->classifier.item();
    result.m2_domain = l2->domain_source.item() + l2->domain_target.item();
    result.m2_total = l2->total.item();
    update(opt, g2.backward(l2->total), model.m2.parameters(), lr);
  }
  return result;
}

Step3Result step3_dual(model::DualModel& model, optim::Sgd& opt, const Tensor& batch_s,
                       const Tensor& batch_t, double lambda, double lr) {
  ad::Graph graph;
  const auto loss = losses::loss_dual(graph, batch_s, batch_t, model.m1, model.m2, lambda);
  const auto grads = graph.backward(loss.total);
  auto params = model.m1.parameters({Component::kG, Component::kT, Component::kCa});
  const auto more = model.m2.parameters({Component::kG, Component::kT, Component::kCa});
  params.insert(params.end(), more.begin(), more.end());
  update(opt, grads, params, lr);
  return {loss.dis_t.item(), loss.dis_c.item()};
}

double evaluate(const model::DualModel& model, const data::DomainDataset& ds) {
  if (ds.size() == 0) throw ContractError("evaluate: empty dataset");
  if (!ds.labels) throw ContractError("evaluate: dataset has no labels");
  // Chunked so the inference graph stays small on image-sized inputs.
  constexpr std::size_t kChunk = 1024;
  std::size_t correct = 0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < ds.size(); start += kChunk) {
    const std::size_t end = std::min(ds.size(), start + kChunk);
    rows.clear();
    for (std::size_t i = start; i < end; ++i) rows.push_back(i);
    const auto pred = model::predict(model, ds.features.gather_rows(rows));
    for (std::size_t i = start; i < end; ++i) correct += pred[i - start] == (*ds.labels)[i];
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

double progress_at(std::size_t update, std::size_t total) {
  if (total <= 1) return 1.0;
  return std::clamp(static_cast<double>(update) / static_cast<double>(total - 1), 0.0, 1.0);
}

namespace {

// Running mean that stays NaN until the first sample arrives.
struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) {
    if (std::isnan(v)) return;
    sum += v;
    ++n;
  }
  double value() const { return n ? sum / static_cast<double>(n) : kNotRecorded; }
};

}  // namespace

TrainResult train(const TrainConfig& config, const data::DomainDataset& source,
                  const Tensor& target_features, const TrainOptions& options) {
  config.validate();
  source.validate();
  if (!source.labels) throw ContractError("train: source domain must be labelled");
  if (target_features.rank() != 2 || target_features.shape[0] == 0)
    throw ContractError("train: empty target dataset");
  if (target_features.shape[1] != source.input_dim())
    throw ContractError("train: source and target input dims differ (" +
                        std::to_string(source.input_dim()) + " vs " +
                        std::to_string(target_features.shape[1]) + ")");
  if (options.target_eval) {
    if (options.target_eval->num_classes != source.num_classes)
      throw ContractError("train: source has " + std::to_string(source.num_classes) +
                          " classes, target " + std::to_string(options.target_eval->num_classes));
    if (options.target_eval->size() != target_features.shape[0])
      throw ContractError("train: target evaluation set does not match target features");
  }

  const model::StepPlan plan = model::variant_plan(config.variant);
  nn::Architecture arch = config.arch;
  arch.input_dim = source.input_dim();
  arch.num_classes = source.num_classes;

  TrainResult result{model::build_dual_model(arch, derive_seed(config.seed, 7)), {}, 0};
  model::DualModel& model = result.model;
  optim::Sgd opt(config.schedule.momentum);

  const std::size_t per_epoch = std::min(source.size(), target_features.shape[0]) / config.batch_size;
  if (per_epoch == 0)
    throw ContractError("train: batch_size " + std::to_string(config.batch_size) +
                        " exceeds the smaller domain");
  const std::size_t total = config.epochs * per_epoch * plan.updates_per_batch(config.k);
  result.total_updates = total;

  std::size_t u = 0;
  auto begin_step = [&](std::size_t updates) {
    ProgressEvent ev;
    ev.update = u;
    ev.total_updates = total;
    ev.progress = progress_at(u, total);
    ev.lr = optim::lr_at(config.schedule, ev.progress);
    ev.lambda = optim::lambda_at(config.schedule, ev.progress);
    if (options.on_step) options.on_step(ev);
    u += updates;
    return ev;
  };

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto pairs = data::batches(source, target_features, config.batch_size,
                                     derive_seed(config.seed, 1000 + epoch));
    Mean cls, dom1, dom2, dis_t, dis_c, mcd;
    for (const auto& b : pairs) {
      if (plan.source_only) {
        const auto ev = begin_step(1);
        cls.add(source_only_step(model.m1, opt, b.source, b.source_labels, ev.lr));
      }
      double phase_a_ce = kNotRecorded;
      if (plan.step1_m1) {
        const auto ev = begin_step(2 + config.k);
        const auto tr = step1_mcd(model.m1, opt, b.source, b.source_labels, b.target, config.k, ev.lr);
        phase_a_ce = tr.classifier_ce;
        mcd.add(tr.before);
      }
      if (plan.step1_m2) {
        const auto ev = begin_step(2 + config.k);
        step1_mcd(model.m2, opt, b.source, b.source_labels, b.target, config.k, ev.lr);
      }
      if (plan.step2_m1 || plan.step2_m2) {
        const auto ev = begin_step(1);
        const auto r = step2_modules(model, opt, b.source, b.source_labels, b.target, ev.lambda,
                                     ev.lr, plan);
        cls.add(r.m1_classifier);
        dom1.add(r.m1_domain);
        dom2.add(r.m2_domain);
      } else if (plan.step1_m1) {
        cls.add(phase_a_ce);
      }
      if (plan.step3) {
        const auto ev = begin_step(1);
        const auto r = step3_dual(model, opt, b.source, b.target, ev.lambda, ev.lr);
        dis_t.add(r.dis_t);
        dis_c.add(r.dis_c);
      }
    }

    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      MetricsRecord rec;
      rec.epoch = epoch;
      rec.cls_ce = cls.value();
      rec.dom_ce_m1 = dom1.value();
      rec.dom_ce_m2 = dom2.value();
      rec.dis_t = dis_t.value();
      rec.dis_c = dis_c.value();
      rec.mcd_dis = mcd.value();
      rec.src_acc = evaluate(model, source);
      if (options.target_eval && options.target_eval->labels) rec.tgt_acc = evaluate(model, *options.target_eval);
      result.metrics.push_back(rec);
    }
    if (options.on_epoch_end) options.on_epoch_end(epoch, model);
  }
  return result;
}

}  // namespace dmat::train
