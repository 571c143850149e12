// SPDX-License-Identifier: Apache-2.0
#include "dmat/experiment.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dmat/csv.hpp"
#include "dmat/errors.hpp"
#include "dmat/nn.hpp"

namespace dmat::experiment {

namespace {

std::string field(double v) { return std::isnan(v) ? std::string() : format_double(v); }

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << body;
  if (!out) throw Error("write failed: " + path.string());
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::hex << v;
  return s.str();
}

}  // namespace

std::pair<double, double> mean_std(const std::vector<double>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values)
    if (!std::isnan(v)) sum += v, ++n;
  if (n == 0) return {train::kNotRecorded, train::kNotRecorded};
  const double mean = sum / static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values)
    if (!std::isnan(v)) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n - 1))};
}

std::string metrics_csv(const std::vector<train::MetricsRecord>& records) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : records) {
    out += std::to_string(r.epoch);
    for (double v : {r.cls_ce, r.dom_ce_m1, r.dom_ce_m2, r.dis_t, r.dis_c, r.mcd_dis, r.src_acc, r.tgt_acc})
      out += "," + field(v);
    out += "\n";
  }
  return out;
}

Summary run_experiment(const config::RunConfig& config) {
  config.validate();
  const auto& dir = config.out;
  std::filesystem::create_directories(dir);
  const auto marker = dir / "PARTIAL";
  std::filesystem::remove(marker);

  Summary summary;
  std::size_t trial = 0;
  try {
    for (; trial < config.trials; ++trial) {
      train::TrainConfig tc = config.train;
      tc.seed = config.train.seed + trial;
      const auto ds = config::make_datasets(config, tc.seed);
      train::TrainOptions opts;
      if (ds.target.labels) opts.target_eval = &ds.target;
      const auto result = train::train(tc, ds.source, ds.target.features, opts);

      write_file(dir / ("run_" + std::to_string(trial) + ".csv"), metrics_csv(result.metrics));
      nn::save_parameters(dir / ("checkpoint_" + std::to_string(trial) + ".bin"), result.model.parameters());

      TrialResult tr;
      tr.seed = tc.seed;
      tr.source_checksum = data::checksum(ds.source);
      tr.target_checksum = data::checksum(ds.target);
      tr.final_src_acc = result.metrics.back().src_acc;
      tr.final_tgt_acc = result.metrics.back().tgt_acc;
      summary.trials.push_back(tr);
    }
  } catch (const std::exception& e) {
    write_file(marker, "trial " + std::to_string(trial) + " of " + std::to_string(config.trials) +
                           " failed: " + e.what() + "\n");
    throw;
  }

  std::string runs = "trial,seed,source_checksum,target_checksum,src_acc,tgt_acc\n";
  std::vector<double> accs;
  for (std::size_t i = 0; i < summary.trials.size(); ++i) {
    const auto& t = summary.trials[i];
    runs += std::to_string(i) + "," + std::to_string(t.seed) + "," + hex(t.source_checksum) + "," +
            hex(t.target_checksum) + "," + field(t.final_src_acc) + "," + field(t.final_tgt_acc) + "\n";
    accs.push_back(t.final_tgt_acc);
  }
  std::tie(summary.mean_tgt_acc, summary.std_tgt_acc) = mean_std(accs);
  write_file(dir / "runs.csv", runs);
  write_file(dir / "summary.csv", "variant,dataset,trials,tgt_acc_mean,tgt_acc_std\n" +
                                      std::string(model::variant_name(config.train.variant)) + "," +
                                      config.name + "," + std::to_string(config.trials) + "," +
                                      field(summary.mean_tgt_acc) + "," + field(summary.std_tgt_acc) + "\n");
  return summary;
}

std::vector<AblationRow> ablation_matrix(const std::vector<config::RunConfig>& configs,
                                         const std::filesystem::path& out) {
  if (configs.empty()) throw ConfigError("ablation: no dataset configs given");
  std::vector<AblationRow> rows;
  for (auto v : model::kAllVariants) {
    AblationRow row{v, {}, {}, std::nullopt};
    for (const auto& base : configs) {
      config::RunConfig c = base;
      c.train.variant = v;
      c.out = out / base.name / std::string(model::variant_name(v));
      const auto s = run_experiment(c);
      row.mean.push_back(s.mean_tgt_acc);
      row.std.push_back(s.std_tgt_acc);
    }
    if (configs.size() > 1) row.avg = mean_std(row.mean).first;
    rows.push_back(std::move(row));
  }

  std::string table = "variant";
  for (const auto& c : configs) table += "," + c.name + "_mean," + c.name + "_std";
  if (configs.size() > 1) table += ",avg";
  table += "\n";
  for (const auto& r : rows) {
    table += std::string(model::variant_name(r.variant));
    for (std::size_t i = 0; i < r.mean.size(); ++i) table += "," + field(r.mean[i]) + "," + field(r.std[i]);
    if (r.avg) table += "," + field(*r.avg);
    table += "\n";
  }
  std::filesystem::create_directories(out);
  write_file(out / "ablation.csv", table);
  return rows;
}

}  // namespace dmat::experiment
