// SPDX-License-Identifier: Apache-2.0
#include "dmat/embedding.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dmat/csv.hpp"
#include "dmat/errors.hpp"

namespace dmat::embedding {

namespace {

Tensor t1_features(const model::DualModel& model, const Tensor& x) {
  ad::Graph g;
  return model::forward_path(g, model.m1, g.constant(x)).t_out.value();
}

Tensor head(const data::DomainDataset& ds, std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return ds.features.gather_rows(rows);
}

}  // namespace

Projection project(const model::DualModel& model, const data::DomainDataset& source,
                   const data::DomainDataset& target, std::size_t n_per_domain) {
  if (n_per_domain == 0 || n_per_domain > source.size() || n_per_domain > target.size())
    throw ContractError("embedding: n_per_domain " + std::to_string(n_per_domain) +
                        " exceeds a domain (source " + std::to_string(source.size()) + ", target " +
                        std::to_string(target.size()) + ")");
  const Tensor fs = t1_features(model, head(source, n_per_domain));
  const Tensor ft = t1_features(model, head(target, n_per_domain));
  const std::size_t n = 2 * n_per_domain;
  const std::size_t d = fs.cols();

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n_per_domain; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      x(i, j) = fs.at(i, j);
      x(n_per_domain + i, j) = ft.at(i, j);
    }
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("embedding: eigen decomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const double top = d > 0 ? evals(d - 1) : 0.0;
  const double tol = 1e-12 * std::max(1.0, top);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < evals.size(); ++i) rank += evals(i) > tol;
  if (rank < 2)
    throw DomainError("embedding: feature covariance has rank " + std::to_string(rank) +
                      ", need at least 2 for a 2-D projection");

  Projection p{Tensor::zeros({n, 2}), Tensor::zeros({2, d}), {evals(d - 1), evals(d - 2)}};
  for (std::size_t a = 0; a < 2; ++a) {
    Eigen::VectorXd axis = solver.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - a));
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    const Eigen::VectorXd coords = x * axis;
    for (std::size_t i = 0; i < n; ++i) p.points.data[i * 2 + a] = coords(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < d; ++j) p.axes.data[a * d + j] = axis(static_cast<Eigen::Index>(j));
  }
  return p;
}

void export_embeddings(const model::DualModel& model, const data::DomainDataset& source,
                       const data::DomainDataset& target, std::size_t n_per_domain,
                       const std::filesystem::path& out_path) {
  const Projection p = project(model, source, target, n_per_domain);
  std::string body = "x,y,domain,label\n";
  for (std::size_t i = 0; i < 2 * n_per_domain; ++i) {
    const bool src = i < n_per_domain;
    const auto& ds = src ? source : target;
    const std::size_t row = src ? i : i - n_per_domain;
    body += format_double(p.points.at(i, 0)) + "," + format_double(p.points.at(i, 1)) + "," +
            (src ? "source" : "target") + "," + (ds.labels ? std::to_string((*ds.labels)[row]) : "") + "\n";
  }
  if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + out_path.string());
  out << body;
}

}  // namespace dmat::embedding
