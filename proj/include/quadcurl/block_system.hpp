// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "quadcurl/assembly.hpp"

namespace quadcurl {

struct FieldLayout {
  std::string name;
  std::shared_ptr<const FESpace> space;
  int offset = 0;
  int size = 0;
};

/// Block-structured linear system.
///
/// Every field owns one index range that serves both as its unknowns
/// (columns) and as the rows of the equation tested with its paired test
/// space. Blocks are keyed by (row field, column field) and accumulate.
/// RHS contributions that depend on a quantity computed elsewhere (a previous
/// stage of a sequential solve) are registered as input couplings and added
/// by `bind_input`.
class BlockSystem {
 public:
  struct InputCoupling {
    std::string row_field;
    std::string input;
    SparseMatrix op;
    double scale = 1.0;
  };

  void add_field(const std::string& name, std::shared_ptr<const FESpace> space) {
    if (index_.count(name)) throw std::invalid_argument("BlockSystem: duplicate field " + name);
    FieldLayout f{name, std::move(space), size_, 0};
    f.size = f.space->ndof();
    size_ += f.size;
    index_[name] = fields_.size();
    fields_.push_back(std::move(f));
    rhs_[name] = Eigen::VectorXd::Zero(fields_.back().size);
  }

  void add_block(const std::string& row, const std::string& col, const SparseMatrix& m, double scale = 1.0) {
    const auto& r = field(row);
    const auto& c = field(col);
    if (m.rows() != r.size || m.cols() != c.size)
      throw std::invalid_argument("BlockSystem: block (" + row + ", " + col + ") has inconsistent shape");
    auto key = std::make_pair(row, col);
    auto it = blocks_.find(key);
    if (it == blocks_.end()) {
      blocks_.emplace(key, SparseMatrix(scale * m));
    } else {
      it->second = SparseMatrix(it->second + scale * m);
    }
  }

  void add_rhs(const std::string& row, const Eigen::VectorXd& v, double scale = 1.0) {
    auto& r = rhs_.at(row);
    if (v.size() != r.size()) throw std::invalid_argument("BlockSystem: rhs size mismatch for " + row);
    r += scale * v;
  }

  void add_input(const std::string& row, const std::string& input, SparseMatrix op, double scale) {
    if (op.rows() != field(row).size) throw std::invalid_argument("BlockSystem: input operator row mismatch");
    inputs_.push_back({row, input, std::move(op), scale});
  }

  /// Add op * value to the rows of every coupling registered for `input`.
  void bind_input(const std::string& input, const Eigen::VectorXd& value) {
    bool found = false;
    for (const auto& c : inputs_) {
      if (c.input != input) continue;
      if (c.op.cols() != value.size()) throw std::invalid_argument("BlockSystem: bound input has wrong size");
      rhs_.at(c.row_field) += c.scale * (c.op * value);
      found = true;
    }
    if (!found) throw std::invalid_argument("BlockSystem: no coupling for input " + input);
  }

  /// Enforce zero mean of `name` through one bordered multiplier row.
  void set_zero_mean(const std::string& name) { zero_mean_field_ = name; }
  const std::optional<std::string>& zero_mean_field() const { return zero_mean_field_; }

  bool has_block(const std::string& row, const std::string& col) const {
    return blocks_.count({row, col}) != 0;
  }
  const SparseMatrix& block(const std::string& row, const std::string& col) const {
    auto it = blocks_.find({row, col});
    if (it == blocks_.end()) throw std::out_of_range("BlockSystem: no block (" + row + ", " + col + ")");
    return it->second;
  }
  const std::map<std::pair<std::string, std::string>, SparseMatrix>& blocks() const { return blocks_; }
  const Eigen::VectorXd& rhs(const std::string& name) const { return rhs_.at(name); }
  const std::vector<FieldLayout>& fields() const { return fields_; }
  const FieldLayout& field(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("BlockSystem: unknown field " + name);
    return fields_[it->second];
  }
  int size() const { return size_; }

  /// Global indices fixed by essential conditions (ascending).
  std::vector<int> eliminated() const {
    std::vector<int> out;
    for (const auto& f : fields_)
      for (int d : f.space->constrained()) out.push_back(f.offset + d);
    return out;
  }

  /// Blocks glued into one matrix, without constraints.
  SparseMatrix global_matrix() const {
    std::vector<Eigen::Triplet<double>> trips;
    for (const auto& [key, m] : blocks_) {
      const int ro = field(key.first).offset, co = field(key.second).offset;
      for (int r = 0; r < m.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(m, r); it; ++it) trips.emplace_back(ro + it.row(), co + it.col(), it.value());
    }
    SparseMatrix a(size_, size_);
    a.setFromTriplets(trips.begin(), trips.end());
    return a;
  }

  Eigen::VectorXd global_rhs() const {
    Eigen::VectorXd b(size_);
    for (const auto& f : fields_) b.segment(f.offset, f.size) = rhs_.at(f.name);
    return b;
  }

  /// Field-wise views of a global vector (bordered entries are dropped).
  std::map<std::string, Eigen::VectorXd> split(const Eigen::VectorXd& x) const {
    std::map<std::string, Eigen::VectorXd> out;
    for (const auto& f : fields_) out[f.name] = x.segment(f.offset, f.size);
    return out;
  }

  // Filled by apply_constraints.
  SparseMatrix matrix;
  Eigen::VectorXd vector;
  bool constrained = false;

 private:
  std::vector<FieldLayout> fields_;
  std::map<std::string, std::size_t> index_;
  std::map<std::pair<std::string, std::string>, SparseMatrix> blocks_;
  std::map<std::string, Eigen::VectorXd> rhs_;
  std::vector<InputCoupling> inputs_;
  std::optional<std::string> zero_mean_field_;
  int size_ = 0;
};

/// Build the solvable system: constrained rows and columns are zeroed with a
/// unit diagonal and zero right-hand side (homogeneous conditions only), and
/// a zero-mean field gets a bordered row/column holding the integrals of its
/// basis functions.
inline BlockSystem apply_constraints(const BlockSystem& sys) {
  BlockSystem out = sys;
  const int n = sys.size();
  std::vector<std::uint8_t> fixed(n, 0);
  for (int d : sys.eliminated()) fixed[d] = 1;

  const SparseMatrix a = sys.global_matrix();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(a.nonZeros() + n);
  for (int r = 0; r < a.outerSize(); ++r) {
    if (fixed[r]) continue;
    for (SparseMatrix::InnerIterator it(a, r); it; ++it)
      if (!fixed[it.col()]) trips.emplace_back(it.row(), it.col(), it.value());
  }
  for (int d = 0; d < n; ++d)
    if (fixed[d]) trips.emplace_back(d, d, 1.0);

  Eigen::VectorXd b = sys.global_rhs();
  for (int d = 0; d < n; ++d)
    if (fixed[d]) b[d] = 0.0;

  int total = n;
  if (const auto& zm = sys.zero_mean_field()) {
    const FieldLayout& f = sys.field(*zm);
    const Eigen::VectorXd w = assemble_load_scalar(*f.space, [](const Vec3&) { return 1.0; });
    for (int i = 0; i < f.size; ++i) {
      if (fixed[f.offset + i]) continue;
      trips.emplace_back(n, f.offset + i, w[i]);
      trips.emplace_back(f.offset + i, n, w[i]);
    }
    total = n + 1;
    b.conservativeResize(total);
    b[n] = 0.0;
  }
  out.matrix = SparseMatrix(total, total);
  out.matrix.setFromTriplets(trips.begin(), trips.end());
  out.matrix.makeCompressed();
  out.vector = std::move(b);
  out.constrained = true;
  return out;
}

/// Frobenius norm of A - A^T relative to the norm of A.
inline double asymmetry(const SparseMatrix& a) {
  const double na = a.norm();
  if (na == 0.0) return 0.0;
  const SparseMatrix at = a.transpose();
  return SparseMatrix(a - at).norm() / na;
}

}  // namespace quadcurl
