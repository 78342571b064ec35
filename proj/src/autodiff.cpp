#include "wgr/autodiff.hpp"

#include <optional>
#include <sstream>
#include <stdexcept>

namespace wgr::ad {

namespace {

std::string shape_str(Index r, Index c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

[[noreturn]] void shape_error(const char* op, const Var& a, const Var& b) {
  throw std::invalid_argument(std::string("autodiff: shape mismatch in ") + op + ": " +
                              shape_str(a.rows(), a.cols()) + " vs " +
                              shape_str(b.rows(), b.cols()));
}

[[noreturn]] void shape_error(const char* op, const Var& a, const std::string& what) {
  throw std::invalid_argument(std::string("autodiff: shape mismatch in ") + op + ": " +
                              shape_str(a.rows(), a.cols()) + " " + what);
}

void same_shape(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, a, b);
}

Matrix leaky_mask(const Matrix& x, double slope) {
  return x.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
}

Matrix safe_recip_value(const Matrix& x) {
  return x.unaryExpr([](double v) { return v == 0.0 ? 0.0 : 1.0 / v; });
}

Matrix group_mean_value(const Matrix& x, Index group) {
  const Index n = x.rows() / group;
  Matrix out(n, x.cols());
  const double inv = 1.0 / static_cast<double>(group);
  for (Index i = 0; i < n; ++i) {
    auto row = out.row(i);
    row = x.row(i * group);
    for (Index j = 1; j < group; ++j) row += x.row(i * group + j);
    row *= inv;
  }
  return out;
}

Matrix group_repeat_value(const Matrix& x, Index group) {
  Matrix out(x.rows() * group, x.cols());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < group; ++j) out.row(i * group + j) = x.row(i);
  return out;
}

Matrix group_sum_value(const Matrix& x, Index group) {
  const Index n = x.rows() / group;
  Matrix out(n, x.cols());
  for (Index i = 0; i < n; ++i) {
    auto row = out.row(i);
    row = x.row(i * group);
    for (Index j = 1; j < group; ++j) row += x.row(i * group + j);
  }
  return out;
}

template <typename Expr>
void accumulate(Matrix& slot, const Eigen::MatrixBase<Expr>& contribution) {
  if (slot.size() == 0)
    slot = contribution;
  else
    slot += contribution;
}

void accumulate(Matrix& slot, Matrix&& contribution) {
  if (slot.size() == 0)
    slot = std::move(contribution);
  else
    slot += contribution;
}

template <typename Lhs, typename Rhs>
void accumulate_product(Matrix& slot, const Lhs& a, const Rhs& b) {
  if (slot.size() == 0)
    slot.noalias() = a * b;
  else
    slot.noalias() += a * b;
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::ScalarMul: return "scalar_mul";
    case Op::AddScalar: return "add_scalar";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::SafeRecip: return "safe_recip";
    case Op::Abs: return "abs";
    case Op::Sum: return "sum";
    case Op::ColSum: return "col_sum";
    case Op::RowSum: return "row_sum";
    case Op::AddRow: return "add_row";
    case Op::BroadcastRows: return "broadcast_rows";
    case Op::BroadcastCols: return "broadcast_cols";
    case Op::BroadcastScalar: return "broadcast_scalar";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceCols: return "slice_cols";
    case Op::PadCols: return "pad_cols";
    case Op::GroupMean: return "group_mean";
    case Op::GroupRepeat: return "group_repeat";
  }
  return "unknown";
}

int Tape::check(const Var& v) const {
  if (v.tape_ != this || v.id_ < 0 || static_cast<std::size_t>(v.id_) >= nodes_.size())
    throw std::invalid_argument("autodiff: variable does not belong to this tape");
  return v.id_;
}

Var Tape::handle(int id) {
  const Matrix& m = nodes_[static_cast<std::size_t>(id)].value;
  return Var(this, id, m.rows(), m.cols());
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return handle(static_cast<int>(nodes_.size() - 1));
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::add(const Var& a, const Var& b) {
  same_shape("add", a, b);
  Node n{Op::Add, check(a), check(b), 0.0, 0, 0, value(a) + value(b)};
  return push(std::move(n));
}

Var Tape::sub(const Var& a, const Var& b) {
  same_shape("sub", a, b);
  Node n{Op::Sub, check(a), check(b), 0.0, 0, 0, value(a) - value(b)};
  return push(std::move(n));
}

Var Tape::mul(const Var& a, const Var& b) {
  same_shape("mul", a, b);
  Node n{Op::Mul, check(a), check(b), 0.0, 0, 0, value(a).cwiseProduct(value(b))};
  return push(std::move(n));
}

Var Tape::scalar_mul(const Var& a, double alpha) {
  Node n{Op::ScalarMul, check(a), -1, alpha, 0, 0, alpha * value(a)};
  return push(std::move(n));
}

Var Tape::add_scalar(const Var& a, double alpha) {
  Node n{Op::AddScalar, check(a), -1, alpha, 0, 0, value(a).array() + alpha};
  return push(std::move(n));
}

Var Tape::matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  Node n{Op::MatMul, check(a), check(b), 0.0, 0, 0, value(a) * value(b)};
  return push(std::move(n));
}

Var Tape::transpose(const Var& a) {
  Node n{Op::Transpose, check(a), -1, 0.0, 0, 0, value(a).transpose()};
  return push(std::move(n));
}

Var Tape::leaky_relu(const Var& a, double slope) {
  Node n{Op::LeakyRelu, check(a), -1, slope, 0, 0,
         value(a).unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; })};
  return push(std::move(n));
}

Var Tape::square(const Var& a) {
  Node n{Op::Square, check(a), -1, 0.0, 0, 0, value(a).array().square()};
  return push(std::move(n));
}

Var Tape::sqrt(const Var& a) {
  Node n{Op::Sqrt, check(a), -1, 0.0, 0, 0, value(a).array().sqrt()};
  return push(std::move(n));
}

Var Tape::safe_recip(const Var& a) {
  Node n{Op::SafeRecip, check(a), -1, 0.0, 0, 0, safe_recip_value(value(a))};
  return push(std::move(n));
}

Var Tape::abs(const Var& a) {
  Node n{Op::Abs, check(a), -1, 0.0, 0, 0, value(a).cwiseAbs()};
  return push(std::move(n));
}

Var Tape::sum(const Var& a) {
  const Matrix& x = value(a);
  double s = 0.0;
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i) s += x(i, j);
  Node n{Op::Sum, check(a), -1, 0.0, 0, 0, Matrix::Constant(1, 1, s)};
  return push(std::move(n));
}

Var Tape::col_sum(const Var& a) {
  Node n{Op::ColSum, check(a), -1, 0.0, 0, 0, value(a).colwise().sum()};
  return push(std::move(n));
}

Var Tape::row_sum(const Var& a) {
  Node n{Op::RowSum, check(a), -1, 0.0, 0, 0, value(a).rowwise().sum()};
  return push(std::move(n));
}

Var Tape::add_row(const Var& a, const Var& b) {
  if (b.rows() != 1 || b.cols() != a.cols()) shape_error("add_row", a, b);
  Node n{Op::AddRow, check(a), check(b), 0.0, 0, 0, value(a).rowwise() + value(b).row(0)};
  return push(std::move(n));
}

Var Tape::broadcast_rows(const Var& a, Index rows) {
  if (a.rows() != 1) shape_error("broadcast_rows", a, "(expected a single row)");
  Node n{Op::BroadcastRows, check(a), -1, 0.0, 0, 0, value(a).replicate(rows, 1)};
  return push(std::move(n));
}

Var Tape::broadcast_cols(const Var& a, Index cols) {
  if (a.cols() != 1) shape_error("broadcast_cols", a, "(expected a single column)");
  Node n{Op::BroadcastCols, check(a), -1, 0.0, 0, 0, value(a).replicate(1, cols)};
  return push(std::move(n));
}

Var Tape::broadcast_scalar(const Var& a, Index rows, Index cols) {
  if (a.rows() != 1 || a.cols() != 1) shape_error("broadcast_scalar", a, "(expected 1x1)");
  Node n{Op::BroadcastScalar, check(a), -1, 0.0, 0, 0,
         Matrix::Constant(rows, cols, value(a)(0, 0))};
  return push(std::move(n));
}

Var Tape::concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) shape_error("concat_cols", a, b);
  Matrix out(a.rows(), a.cols() + b.cols());
  out << value(a), value(b);
  Node n{Op::ConcatCols, check(a), check(b), 0.0, 0, 0, std::move(out)};
  return push(std::move(n));
}

Var Tape::slice_cols(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    shape_error("slice_cols", a,
                "(columns " + std::to_string(start) + ".." + std::to_string(start + count) + ")");
  Node n{Op::SliceCols, check(a), -1, 0.0, start, count, value(a).middleCols(start, count)};
  return push(std::move(n));
}

Var Tape::pad_cols(const Var& a, Index start, Index total) {
  if (start < 0 || start + a.cols() > total)
    shape_error("pad_cols", a, "(target width " + std::to_string(total) + ")");
  Matrix out = Matrix::Zero(a.rows(), total);
  out.middleCols(start, a.cols()) = value(a);
  Node n{Op::PadCols, check(a), -1, 0.0, start, total, std::move(out)};
  return push(std::move(n));
}

Var Tape::group_mean(const Var& a, Index group) {
  if (group < 1 || a.rows() % group != 0)
    shape_error("group_mean", a, "(group size " + std::to_string(group) + ")");
  Node n{Op::GroupMean, check(a), -1, 0.0, group, 0, group_mean_value(value(a), group)};
  return push(std::move(n));
}

Var Tape::group_repeat(const Var& a, Index group) {
  if (group < 1) shape_error("group_repeat", a, "(group size " + std::to_string(group) + ")");
  Node n{Op::GroupRepeat, check(a), -1, 0.0, group, 0, group_repeat_value(value(a), group)};
  return push(std::move(n));
}

// Numeric reverse sweep ------------------------------------------------------

std::vector<Matrix> Tape::grad(const Var& root, std::span<const Var> wrt) const {
  const int r = check(root);
  if (root.rows() != 1 || root.cols() != 1)
    throw std::invalid_argument("autodiff: grad requires a 1x1 root, got " +
                                shape_str(root.rows(), root.cols()));

  const std::size_t count = static_cast<std::size_t>(r) + 1;
  std::vector<char> needed(count, 0), keep(count, 0);
  for (const Var& w : wrt) {
    const int id = check(w);
    if (id <= r) needed[static_cast<std::size_t>(id)] = keep[static_cast<std::size_t>(id)] = 1;
  }
  for (std::size_t i = 0; i < count; ++i) {
    const Node& n = nodes_[i];
    if ((n.lhs >= 0 && needed[static_cast<std::size_t>(n.lhs)]) ||
        (n.rhs >= 0 && needed[static_cast<std::size_t>(n.rhs)]))
      needed[i] = 1;
  }

  std::vector<Matrix> adj(count);
  if (needed[count - 1]) adj[count - 1] = Matrix::Ones(1, 1);

  for (int i = r; i >= 0; --i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    Matrix& g = adj[static_cast<std::size_t>(i)];
    if (g.size() == 0 || n.op == Op::Leaf) continue;
    const bool need_l = n.lhs >= 0 && needed[static_cast<std::size_t>(n.lhs)];
    const bool need_r = n.rhs >= 0 && needed[static_cast<std::size_t>(n.rhs)];
    Matrix* gl = need_l ? &adj[static_cast<std::size_t>(n.lhs)] : nullptr;
    Matrix* gr = need_r ? &adj[static_cast<std::size_t>(n.rhs)] : nullptr;
    const Matrix* a = n.lhs >= 0 ? &nodes_[static_cast<std::size_t>(n.lhs)].value : nullptr;
    const Matrix* b = n.rhs >= 0 ? &nodes_[static_cast<std::size_t>(n.rhs)].value : nullptr;

    switch (n.op) {
      case Op::Leaf: break;
      case Op::Add:
        if (gr) accumulate(*gr, g);
        if (gl) accumulate(*gl, keep[static_cast<std::size_t>(i)] ? Matrix(g) : std::move(g));
        break;
      case Op::Sub:
        if (gr) accumulate(*gr, -g);
        if (gl) accumulate(*gl, keep[static_cast<std::size_t>(i)] ? Matrix(g) : std::move(g));
        break;
      case Op::Mul:
        if (gl) accumulate(*gl, g.cwiseProduct(*b));
        if (gr) accumulate(*gr, g.cwiseProduct(*a));
        break;
      case Op::ScalarMul:
        if (gl) accumulate(*gl, n.alpha * g);
        break;
      case Op::AddScalar:
        if (gl) accumulate(*gl, keep[static_cast<std::size_t>(i)] ? Matrix(g) : std::move(g));
        break;
      case Op::MatMul:
        if (gl) accumulate_product(*gl, g, b->transpose());
        if (gr) accumulate_product(*gr, a->transpose(), g);
        break;
      case Op::Transpose:
        if (gl) accumulate(*gl, g.transpose());
        break;
      case Op::LeakyRelu:
        if (gl) {
          const double slope = n.alpha;
          accumulate(*gl, g.cwiseProduct(
                              a->unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; })));
        }
        break;
      case Op::Square:
        if (gl) accumulate(*gl, 2.0 * a->cwiseProduct(g));
        break;
      case Op::Sqrt:
        if (gl)
          accumulate(*gl, g.cwiseProduct(
                              n.value.unaryExpr([](double v) { return v == 0.0 ? 0.0 : 0.5 / v; })));
        break;
      case Op::SafeRecip:
        if (gl) accumulate(*gl, -g.cwiseProduct(n.value.cwiseProduct(n.value)));
        break;
      case Op::Abs:
        if (gl)
          accumulate(*gl, g.cwiseProduct(a->unaryExpr(
                              [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); })));
        break;
      case Op::Sum:
        if (gl) accumulate(*gl, Matrix::Constant(a->rows(), a->cols(), g(0, 0)));
        break;
      case Op::ColSum:
        if (gl) accumulate(*gl, g.replicate(a->rows(), 1));
        break;
      case Op::RowSum:
        if (gl) accumulate(*gl, g.replicate(1, a->cols()));
        break;
      case Op::AddRow:
        if (gr) accumulate(*gr, g.colwise().sum());
        if (gl) accumulate(*gl, keep[static_cast<std::size_t>(i)] ? Matrix(g) : std::move(g));
        break;
      case Op::BroadcastRows:
        if (gl) accumulate(*gl, g.colwise().sum());
        break;
      case Op::BroadcastCols:
        if (gl) accumulate(*gl, g.rowwise().sum());
        break;
      case Op::BroadcastScalar:
        if (gl) accumulate(*gl, Matrix::Constant(1, 1, g.sum()));
        break;
      case Op::ConcatCols:
        if (gl) accumulate(*gl, g.leftCols(a->cols()));
        if (gr) accumulate(*gr, g.rightCols(b->cols()));
        break;
      case Op::SliceCols:
        if (gl) {
          Matrix full = Matrix::Zero(a->rows(), a->cols());
          full.middleCols(n.p0, n.p1) = g;
          accumulate(*gl, full);
        }
        break;
      case Op::PadCols:
        if (gl) accumulate(*gl, g.middleCols(n.p0, a->cols()));
        break;
      case Op::GroupMean:
        if (gl) accumulate(*gl, group_repeat_value(g, n.p0) / static_cast<double>(n.p0));
        break;
      case Op::GroupRepeat:
        if (gl) accumulate(*gl, group_sum_value(g, n.p0));
        break;
    }
    if (!keep[static_cast<std::size_t>(i)]) g = Matrix();
  }

  std::vector<Matrix> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    const auto id = static_cast<std::size_t>(w.id());
    if (id < count && adj[id].size() != 0)
      out.push_back(adj[id]);
    else
      out.push_back(Matrix::Zero(w.rows(), w.cols()));
  }
  return out;
}

Matrix Tape::grad(const Var& root, const Var& wrt) const {
  return grad(root, std::span<const Var>(&wrt, 1)).front();
}

// Backward pass emitted as tape nodes ----------------------------------------

Var Tape::grad_as_graph(const Var& root, const Var& wrt) {
  const int r = check(root);
  const int w = check(wrt);
  if (root.rows() != 1 || root.cols() != 1)
    throw std::invalid_argument("autodiff: grad_as_graph requires a 1x1 root, got " +
                                shape_str(root.rows(), root.cols()));
  if (w > r) return leaf(Matrix::Zero(wrt.rows(), wrt.cols()));

  const std::size_t count = static_cast<std::size_t>(r) + 1;
  std::vector<char> depends(count, 0);
  depends[static_cast<std::size_t>(w)] = 1;
  for (std::size_t i = static_cast<std::size_t>(w) + 1; i < count; ++i) {
    const Node& n = nodes_[i];
    if ((n.lhs >= 0 && depends[static_cast<std::size_t>(n.lhs)]) ||
        (n.rhs >= 0 && depends[static_cast<std::size_t>(n.rhs)]))
      depends[i] = 1;
  }
  if (!depends[count - 1]) return leaf(Matrix::Zero(wrt.rows(), wrt.cols()));

  for (std::size_t i = static_cast<std::size_t>(w) + 1; i < count; ++i)
    if (depends[i] && nodes_[i].op == Op::Abs)
      throw std::invalid_argument(
          std::string("autodiff: no second-order rule for primitive '") + op_name(Op::Abs) +
          "' in the differentiated sub-graph");

  std::vector<std::optional<Var>> adj(count);
  adj[count - 1] = leaf(Matrix::Ones(1, 1));

  auto feed = [&](int id, Var contribution) {
    auto& slot = adj[static_cast<std::size_t>(id)];
    slot = slot ? add(*slot, contribution) : contribution;
  };

  for (int i = r; i > w; --i) {
    const auto ui = static_cast<std::size_t>(i);
    if (!depends[ui] || !adj[ui]) continue;
    // Copy the node header; pushes below may reallocate nodes_.
    const Op op = nodes_[ui].op;
    const int lhs = nodes_[ui].lhs;
    const int rhs = nodes_[ui].rhs;
    const double alpha = nodes_[ui].alpha;
    const Index p0 = nodes_[ui].p0;
    const Index p1 = nodes_[ui].p1;
    const bool need_l = lhs >= 0 && depends[static_cast<std::size_t>(lhs)];
    const bool need_r = rhs >= 0 && depends[static_cast<std::size_t>(rhs)];
    const Var g = *adj[ui];
    const Var self = handle(i);
    const Var a = lhs >= 0 ? handle(lhs) : Var();
    const Var b = rhs >= 0 ? handle(rhs) : Var();

    switch (op) {
      case Op::Leaf: break;
      case Op::Add:
        if (need_l) feed(lhs, g);
        if (need_r) feed(rhs, g);
        break;
      case Op::Sub:
        if (need_l) feed(lhs, g);
        if (need_r) feed(rhs, scalar_mul(g, -1.0));
        break;
      case Op::Mul:
        if (need_l) feed(lhs, mul(g, b));
        if (need_r) feed(rhs, mul(g, a));
        break;
      case Op::ScalarMul:
        if (need_l) feed(lhs, scalar_mul(g, alpha));
        break;
      case Op::AddScalar:
        if (need_l) feed(lhs, g);
        break;
      case Op::MatMul:
        if (need_l) feed(lhs, matmul(g, transpose(b)));
        if (need_r) feed(rhs, matmul(transpose(a), g));
        break;
      case Op::Transpose:
        if (need_l) feed(lhs, transpose(g));
        break;
      case Op::LeakyRelu:
        // The mask is piecewise constant, so it enters as a leaf.
        if (need_l) feed(lhs, mul(g, leaf(leaky_mask(value(a), alpha))));
        break;
      case Op::Square:
        if (need_l) feed(lhs, scalar_mul(mul(a, g), 2.0));
        break;
      case Op::Sqrt:
        if (need_l) feed(lhs, mul(g, scalar_mul(safe_recip(self), 0.5)));
        break;
      case Op::SafeRecip:
        if (need_l) feed(lhs, mul(g, scalar_mul(square(self), -1.0)));
        break;
      case Op::Abs: break;  // rejected above
      case Op::Sum:
        if (need_l) feed(lhs, broadcast_scalar(g, a.rows(), a.cols()));
        break;
      case Op::ColSum:
        if (need_l) feed(lhs, broadcast_rows(g, a.rows()));
        break;
      case Op::RowSum:
        if (need_l) feed(lhs, broadcast_cols(g, a.cols()));
        break;
      case Op::AddRow:
        if (need_l) feed(lhs, g);
        if (need_r) feed(rhs, col_sum(g));
        break;
      case Op::BroadcastRows:
        if (need_l) feed(lhs, col_sum(g));
        break;
      case Op::BroadcastCols:
        if (need_l) feed(lhs, row_sum(g));
        break;
      case Op::BroadcastScalar:
        if (need_l) feed(lhs, sum(g));
        break;
      case Op::ConcatCols:
        if (need_l) feed(lhs, slice_cols(g, 0, a.cols()));
        if (need_r) feed(rhs, slice_cols(g, a.cols(), b.cols()));
        break;
      case Op::SliceCols:
        if (need_l) feed(lhs, pad_cols(g, p0, a.cols()));
        break;
      case Op::PadCols:
        if (need_l) feed(lhs, slice_cols(g, p0, a.cols()));
        break;
      case Op::GroupMean:
        if (need_l) feed(lhs, scalar_mul(group_repeat(g, p0), 1.0 / static_cast<double>(p0)));
        break;
      case Op::GroupRepeat:
        if (need_l) feed(lhs, scalar_mul(group_mean(g, p0), static_cast<double>(p0)));
        break;
    }
    (void)p1;
  }

  const auto& result = adj[static_cast<std::size_t>(w)];
  return result ? *result : leaf(Matrix::Zero(wrt.rows(), wrt.cols()));
}

}  // namespace wgr::ad
