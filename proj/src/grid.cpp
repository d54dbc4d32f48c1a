#include "linfvar/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "linfvar/errors.hpp"

namespace linfvar {

DomainBox::DomainBox(Eigen::VectorXd lo, Eigen::VectorXd hi, std::vector<int> resolution)
    : lo_(std::move(lo)), hi_(std::move(hi)), res_(std::move(resolution)) {
  const auto n = static_cast<std::size_t>(lo_.size());
  if (n == 0) throw InputError("domain must have at least one axis");
  if (static_cast<std::size_t>(hi_.size()) != n || res_.size() != n)
    throw InputError("domain lo/hi/resolution lengths differ");
  h_.resize(n);
  stride_.resize(n);
  count_ = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lo_[static_cast<Eigen::Index>(i)] < hi_[static_cast<Eigen::Index>(i)]))
      throw InputError("domain requires lo < hi on axis " + std::to_string(i + 1));
    if (res_[i] < 3) throw InputError("domain resolution must be at least 3 per axis");
    h_[i] = (hi_[static_cast<Eigen::Index>(i)] - lo_[static_cast<Eigen::Index>(i)]) / (res_[i] - 1);
    stride_[i] = count_;
    count_ *= static_cast<std::size_t>(res_[i]);
  }
}

double DomainBox::max_spacing() const { return *std::max_element(h_.begin(), h_.end()); }

std::vector<int> DomainBox::multi_index(NodeIndex node) const {
  std::vector<int> idx(res_.size());
  for (std::size_t i = 0; i < res_.size(); ++i) {
    idx[i] = static_cast<int>(node % static_cast<std::size_t>(res_[i]));
    node /= static_cast<std::size_t>(res_[i]);
  }
  return idx;
}

NodeIndex DomainBox::linear_index(const std::vector<int>& idx) const {
  if (idx.size() != res_.size()) throw InputError("multi-index has wrong length");
  NodeIndex node = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= res_[i]) throw InputError("multi-index outside the grid");
    node += static_cast<std::size_t>(idx[i]) * stride_[i];
  }
  return node;
}

Eigen::VectorXd DomainBox::coordinates(NodeIndex node) const {
  Eigen::VectorXd x(lo_.size());
  for (std::size_t i = 0; i < res_.size(); ++i) {
    const int k = static_cast<int>(node % static_cast<std::size_t>(res_[i]));
    node /= static_cast<std::size_t>(res_[i]);
    const auto e = static_cast<Eigen::Index>(i);
    // Last node is pinned to hi exactly.
    x[e] = (k == res_[i] - 1) ? hi_[e] : lo_[e] + k * h_[i];
  }
  return x;
}

long DomainBox::neighbour(NodeIndex node, int axis, int offset) const {
  const auto a = static_cast<std::size_t>(axis);
  const int k = static_cast<int>((node / stride_[a]) % static_cast<std::size_t>(res_[a]));
  const int j = k + offset;
  if (j < 0 || j >= res_[a]) return -1;
  return static_cast<long>(node) + static_cast<long>(offset) * static_cast<long>(stride_[a]);
}

long DomainBox::find_node(const Eigen::VectorXd& x) const {
  if (x.size() != lo_.size()) return -1;
  std::vector<int> idx(res_.size());
  for (std::size_t i = 0; i < res_.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    const double s = (x[e] - lo_[e]) / h_[i];
    const double r = std::round(s);
    if (std::abs(s - r) > 1e-9 || r < 0 || r > res_[i] - 1) return -1;
    idx[i] = static_cast<int>(r);
  }
  return static_cast<long>(linear_index(idx));
}

bool DomainBox::contains(const Eigen::VectorXd& x, double slack) const {
  if (x.size() != lo_.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] < lo_[i] - slack || x[i] > hi_[i] + slack) return false;
  return true;
}

bool DomainBox::operator==(const DomainBox& o) const {
  return res_ == o.res_ && lo_.size() == o.lo_.size() && lo_ == o.lo_ && hi_ == o.hi_;
}

Subdomain::Subdomain(DomainBox parent, std::vector<char> mask, std::vector<char> singular)
    : parent_(std::move(parent)), mask_(std::move(mask)), singular_(std::move(singular)) {
  const std::size_t count = parent_.node_count();
  if (mask_.size() != count) throw InputError("subdomain mask size does not match the grid");
  if (singular_.empty()) singular_.assign(count, 0);
  if (singular_.size() != count) throw InputError("singular mask size does not match the grid");
  on_boundary_.assign(count, 0);

  const int n = parent_.dim();
  lower_ = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  upper_ = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  std::vector<int> idx_lo(static_cast<std::size_t>(n), std::numeric_limits<int>::max());
  std::vector<int> idx_hi(static_cast<std::size_t>(n), -1);
  std::size_t masked_count = 0;

  for (NodeIndex node = 0; node < count; ++node) {
    if (!mask_[node]) continue;
    ++masked_count;
    const Eigen::VectorXd x = parent_.coordinates(node);
    lower_ = lower_.cwiseMin(x);
    upper_ = upper_.cwiseMax(x);
    const auto mi = parent_.multi_index(node);
    bool boundary = false;
    for (int a = 0; a < n; ++a) {
      idx_lo[static_cast<std::size_t>(a)] = std::min(idx_lo[static_cast<std::size_t>(a)], mi[static_cast<std::size_t>(a)]);
      idx_hi[static_cast<std::size_t>(a)] = std::max(idx_hi[static_cast<std::size_t>(a)], mi[static_cast<std::size_t>(a)]);
      for (int off : {-1, 1}) {
        const long nb = parent_.neighbour(node, a, off);
        if (nb < 0 || !mask_[static_cast<std::size_t>(nb)]) boundary = true;
      }
    }
    on_boundary_[node] = boundary ? 1 : 0;
    if (singular_[node]) continue;
    closure_.push_back(node);
    (boundary ? boundary_ : interior_).push_back(node);
  }
  if (masked_count == 0) throw InputError("subdomain contains no grid nodes");
  if (static_cast<std::size_t>(std::count(on_boundary_.begin(), on_boundary_.end(), 1)) ==
      masked_count)
    throw InputError("subdomain has no interior nodes");

  std::size_t box_count = 1;
  for (int a = 0; a < n; ++a)
    box_count *= static_cast<std::size_t>(idx_hi[static_cast<std::size_t>(a)] - idx_lo[static_cast<std::size_t>(a)] + 1);
  is_box_ = box_count == masked_count;
}

Subdomain Subdomain::whole(const DomainBox& parent) {
  return Subdomain(parent, std::vector<char>(parent.node_count(), 1));
}

Subdomain Subdomain::from_box(const DomainBox& parent, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi) {
  if (lo.size() != parent.dim() || hi.size() != parent.dim())
    throw InputError("subdomain bounds have the wrong dimension");
  std::vector<char> mask(parent.node_count(), 0);
  const double slack = 1e-9 * parent.max_spacing();
  for (NodeIndex node = 0; node < parent.node_count(); ++node) {
    const Eigen::VectorXd x = parent.coordinates(node);
    bool inside = true;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) inside = false;
    mask[node] = inside ? 1 : 0;
  }
  return Subdomain(parent, std::move(mask));
}

Subdomain Subdomain::ball(const DomainBox& parent, const Eigen::VectorXd& center, double radius) {
  std::vector<char> mask(parent.node_count(), 0);
  const double slack = 1e-9 * parent.max_spacing();
  for (NodeIndex node = 0; node < parent.node_count(); ++node)
    mask[node] = (parent.coordinates(node) - center).norm() <= radius + slack ? 1 : 0;
  return Subdomain(parent, std::move(mask));
}

Subdomain Subdomain::with_singular(const std::vector<NodeIndex>& nodes) const {
  std::vector<char> singular = singular_;
  for (NodeIndex node : nodes) {
    if (node >= singular.size()) throw InputError("singular node outside the grid");
    singular[node] = 1;
  }
  return Subdomain(parent_, mask_, std::move(singular));
}

}  // namespace linfvar
