#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace linfvar {

using NodeIndex = std::size_t;

/// Tensor grid over an axis-aligned box; nodes are numbered with axis 0
/// varying fastest.
class DomainBox {
 public:
  DomainBox() = default;
  DomainBox(Eigen::VectorXd lo, Eigen::VectorXd hi, std::vector<int> resolution);

  int dim() const { return static_cast<int>(lo_.size()); }
  const Eigen::VectorXd& lo() const { return lo_; }
  const Eigen::VectorXd& hi() const { return hi_; }
  const std::vector<int>& resolution() const { return res_; }
  double spacing(int axis) const { return h_[static_cast<std::size_t>(axis)]; }
  double max_spacing() const;
  std::size_t node_count() const { return count_; }

  std::vector<int> multi_index(NodeIndex node) const;
  NodeIndex linear_index(const std::vector<int>& idx) const;
  Eigen::VectorXd coordinates(NodeIndex node) const;
  /// Neighbour `offset` steps along `axis`, or -1 when outside the box.
  long neighbour(NodeIndex node, int axis, int offset) const;
  /// Node whose coordinates equal x within 1e-9 of the spacing, if any.
  long find_node(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x, double slack = 0.0) const;

  bool operator==(const DomainBox& o) const;

 private:
  Eigen::VectorXd lo_, hi_;
  std::vector<int> res_;
  std::vector<double> h_;
  std::vector<std::size_t> stride_;
  std::size_t count_ = 0;
};

/// A set of grid nodes standing for a closed subdomain Ō. Boundary nodes are
/// masked nodes that touch an unmasked node or a face of the box; nodes in
/// the singular mask are skipped by every evaluation.
class Subdomain {
 public:
  Subdomain() = default;
  Subdomain(DomainBox parent, std::vector<char> mask, std::vector<char> singular = {});

  static Subdomain whole(const DomainBox& parent);
  static Subdomain from_box(const DomainBox& parent, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi);
  static Subdomain ball(const DomainBox& parent, const Eigen::VectorXd& center, double radius);

  const DomainBox& parent() const { return parent_; }
  bool masked(NodeIndex node) const { return mask_[node] != 0; }
  bool singular(NodeIndex node) const { return singular_[node] != 0; }

  /// Masked, non-singular nodes (boundary included).
  const std::vector<NodeIndex>& closure() const { return closure_; }
  const std::vector<NodeIndex>& boundary() const { return boundary_; }
  const std::vector<NodeIndex>& interior() const { return interior_; }
  bool is_boundary(NodeIndex node) const { return on_boundary_[node] != 0; }

  /// Bounding box of the masked nodes.
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  double diameter() const { return (upper_ - lower_).norm(); }
  /// True when the mask is exactly the set of nodes of its bounding box.
  bool is_box() const { return is_box_; }

  Subdomain with_singular(const std::vector<NodeIndex>& nodes) const;

 private:
  DomainBox parent_;
  std::vector<char> mask_, singular_, on_boundary_;
  std::vector<NodeIndex> closure_, boundary_, interior_;
  Eigen::VectorXd lower_, upper_;
  bool is_box_ = false;
};

}  // namespace linfvar
