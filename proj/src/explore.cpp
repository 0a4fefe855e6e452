// Copyright 2026 The sensilogit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sensilogit/explore.hpp"

#include <cmath>
#include <ostream>

#include "sensilogit/error.hpp"
#include "sensilogit/format.hpp"

namespace sensilogit {

CAResult correspondence_analysis(const Eigen::MatrixXd& table, int axes) {
  if (table.rows() < 1 || table.cols() < 1) throw_data("empty table");
  if (axes < 1) throw_usage("at least one axis must be retained");
  if ((table.array() < 0.0).any() || !table.allFinite()) {
    throw_data("correspondence analysis needs non-negative counts");
  }
  const Eigen::VectorXd rsum = table.rowwise().sum();
  const Eigen::VectorXd csum = table.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < rsum.size(); ++i) {
    if (rsum(i) == 0.0) throw_data("zero margin in row " + std::to_string(i + 1));
  }
  for (Eigen::Index j = 0; j < csum.size(); ++j) {
    if (csum(j) == 0.0) throw_data("zero margin in column " + std::to_string(j + 1));
  }
  CAResult out;
  out.n = rsum.sum();
  const Eigen::VectorXd r = rsum / out.n;
  const Eigen::VectorXd c = csum / out.n;
  const Eigen::VectorXd rs = r.cwiseSqrt().cwiseInverse();
  const Eigen::VectorXd cs = c.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd s =
      rs.asDiagonal() * (table / out.n - r * c.transpose()) * cs.asDiagonal();
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
  // Entries of s are O(1), so smaller singular values are rounding residue.
  const double noise = 1e-12;
  Eigen::VectorXd sv = svd.singularValues();
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) <= noise) sv(k) = 0.0;
    out.singular_values.push_back(sv(k));
    out.total_inertia += sv(k) * sv(k);
  }
  const Eigen::Index keep = axes;
  out.row_coords = Eigen::MatrixXd::Zero(table.rows(), keep);
  out.col_coords = Eigen::MatrixXd::Zero(table.cols(), keep);
  for (Eigen::Index k = 0; k < keep; ++k) {
    const double sk = k < sv.size() ? sv(k) : 0.0;
    out.inertia_share.push_back(out.total_inertia > 0.0 ? sk * sk / out.total_inertia : 0.0);
    if (sk <= noise) continue;
    Eigen::VectorXd f = rs.asDiagonal() * svd.matrixU().col(k) * sk;
    Eigen::VectorXd g = cs.asDiagonal() * svd.matrixV().col(k) * sk;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      if (std::abs(f(i)) > 1e-10 * f.cwiseAbs().maxCoeff()) {
        if (f(i) < 0.0) {
          f = -f;
          g = -g;
        }
        break;
      }
    }
    out.row_coords.col(k) = f;
    out.col_coords.col(k) = g;
  }
  return out;
}

McaResult mca_coordinates(const OrdinalDataset& ds, int axes) {
  if (ds.empty()) throw_data("dataset is empty");
  const std::size_t nf = ds.formulations().size();
  const std::size_t na = ds.attributes().size();
  const auto nj = static_cast<std::size_t>(ds.scale().categories());
  std::vector<std::string> labels;
  std::vector<std::string> types;
  for (const auto& f : ds.formulations().names()) {
    labels.push_back(f);
    types.push_back("formulation");
  }
  for (const auto& a : ds.attributes().names()) {
    labels.push_back(a);
    types.push_back("attribute");
  }
  for (std::size_t j = 1; j <= nj; ++j) {
    labels.push_back(ds.scale().labels[j - 1]);
    types.push_back("category");
  }
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.size()),
                                            static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& o = ds.observations()[i];
    const auto row = static_cast<Eigen::Index>(i);
    z(row, static_cast<Eigen::Index>(o.formulation)) = 1.0;
    z(row, static_cast<Eigen::Index>(nf + o.attribute)) = 1.0;
    z(row, static_cast<Eigen::Index>(nf + na + static_cast<std::size_t>(o.response - 1))) = 1.0;
  }
  McaResult out;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    if (z.col(j).sum() > 0.0) {
      kept.push_back(j);
      out.labels.push_back(labels[static_cast<std::size_t>(j)]);
      out.types.push_back(types[static_cast<std::size_t>(j)]);
    } else {
      out.warnings.push_back(types[static_cast<std::size_t>(j)] + " '" +
                             labels[static_cast<std::size_t>(j)] + "' never observed; dropped");
    }
  }
  Eigen::MatrixXd zk(z.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) zk.col(static_cast<Eigen::Index>(j)) = z.col(kept[j]);
  out.ca = correspondence_analysis(zk, axes);
  return out;
}

void write_coords_csv(std::ostream& out, const McaResult& mca) {
  out << "label,axis1,axis2,type\n";
  for (std::size_t j = 0; j < mca.labels.size(); ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    const auto& cc = mca.ca.col_coords;
    out << csv_field(mca.labels[j]) << ',' << format_number(cc(row, 0)) << ','
        << format_number(cc.cols() > 1 ? cc(row, 1) : 0.0) << ',' << mca.types[j] << '\n';
  }
}

}  // namespace sensilogit
