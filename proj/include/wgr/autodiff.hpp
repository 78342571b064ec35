#pragma once

// Reverse-mode automatic differentiation over dense Eigen matrices.
//
// A Tape records eagerly evaluated primitives; a Var is a handle into it.
// Every primitive with a second-order rule can have its backward pass
// replayed onto the tape (grad_as_graph), so gradients of expressions that
// contain input-gradients (double backprop) are ordinary reverse sweeps.
//
// Conventions: matrices are row-major in meaning (one sample per row), all
// arithmetic is 64-bit, reductions run sequentially in index order.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wgr::ad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  ScalarMul,
  AddScalar,
  MatMul,
  Transpose,
  LeakyRelu,
  Square,
  Sqrt,
  SafeRecip,
  Abs,
  Sum,
  ColSum,
  RowSum,
  AddRow,
  BroadcastRows,
  BroadcastCols,
  BroadcastScalar,
  ConcatCols,
  SliceCols,
  PadCols,
  GroupMean,
  GroupRepeat,
};

const char* op_name(Op op);

class Tape;

/// Handle to a tape node. Shape is fixed at creation.
class Var {
 public:
  Var() = default;

  int id() const { return id_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  /// Convenience for 1x1 nodes.
  double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, int id, Index rows, Index cols)
      : tape_(tape), id_(id), rows_(rows), cols_(cols) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
  Index rows_ = 0;
  Index cols_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Records a leaf. Leaves carry no inputs; any leaf can be differentiated
  /// against, so "constant" vs "variable" is decided by the wrt list.
  Var leaf(Matrix value);
  Var constant(Matrix value) { return leaf(std::move(value)); }

  const Matrix& value(const Var& v) const { return nodes_[check(v)].value; }
  Op op(const Var& v) const { return nodes_[check(v)].op; }
  std::size_t size() const { return nodes_.size(); }

  /// d(root)/d(wrt[k]) for each k by a numeric reverse sweep. root must be
  /// 1x1. Nodes unreachable from root get a zero gradient.
  std::vector<Matrix> grad(const Var& root, std::span<const Var> wrt) const;
  Matrix grad(const Var& root, const Var& wrt) const;

  /// Emits d(root)/d(wrt) as new tape nodes so that it can itself be
  /// differentiated. Throws if a node between wrt and root has no
  /// second-order rule.
  Var grad_as_graph(const Var& root, const Var& wrt);

  // Primitive constructors; the free functions below forward here.
  Var add(const Var& a, const Var& b);
  Var sub(const Var& a, const Var& b);
  Var mul(const Var& a, const Var& b);
  Var scalar_mul(const Var& a, double alpha);
  Var add_scalar(const Var& a, double alpha);
  Var matmul(const Var& a, const Var& b);
  Var transpose(const Var& a);
  Var leaky_relu(const Var& a, double slope);
  Var square(const Var& a);
  Var sqrt(const Var& a);
  Var safe_recip(const Var& a);
  Var abs(const Var& a);
  Var sum(const Var& a);
  Var col_sum(const Var& a);
  Var row_sum(const Var& a);
  /// a + 1 b: adds the 1 x p row b to every row of a.
  Var add_row(const Var& a, const Var& b);
  Var broadcast_rows(const Var& a, Index rows);
  Var broadcast_cols(const Var& a, Index cols);
  Var broadcast_scalar(const Var& a, Index rows, Index cols);
  Var concat_cols(const Var& a, const Var& b);
  Var slice_cols(const Var& a, Index start, Index count);
  Var pad_cols(const Var& a, Index start, Index total);
  Var group_mean(const Var& a, Index group);
  Var group_repeat(const Var& a, Index group);

 private:
  struct Node {
    Op op = Op::Leaf;
    int lhs = -1;
    int rhs = -1;
    double alpha = 0.0;  // slope / scale / offset
    Index p0 = 0;        // start column / group size
    Index p1 = 0;        // count / total columns
    Matrix value;
  };

  int check(const Var& v) const;
  Var push(Node node);
  Var handle(int id);

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }
inline double Var::scalar() const { return value()(0, 0); }

// Expression helpers ---------------------------------------------------------

inline Var operator+(const Var& a, const Var& b) { return a.tape()->add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return a.tape()->sub(a, b); }
inline Var operator*(double alpha, const Var& a) { return a.tape()->scalar_mul(a, alpha); }
inline Var operator-(const Var& a) { return a.tape()->scalar_mul(a, -1.0); }

inline Var mul(const Var& a, const Var& b) { return a.tape()->mul(a, b); }
inline Var add_scalar(const Var& a, double alpha) { return a.tape()->add_scalar(a, alpha); }
inline Var matmul(const Var& a, const Var& b) { return a.tape()->matmul(a, b); }
inline Var transpose(const Var& a) { return a.tape()->transpose(a); }
inline Var leaky_relu(const Var& a, double slope) { return a.tape()->leaky_relu(a, slope); }
inline Var square(const Var& a) { return a.tape()->square(a); }
inline Var sqrt(const Var& a) { return a.tape()->sqrt(a); }
inline Var safe_recip(const Var& a) { return a.tape()->safe_recip(a); }
inline Var abs(const Var& a) { return a.tape()->abs(a); }
inline Var sum(const Var& a) { return a.tape()->sum(a); }
inline Var col_sum(const Var& a) { return a.tape()->col_sum(a); }
inline Var row_sum(const Var& a) { return a.tape()->row_sum(a); }
inline Var add_row(const Var& a, const Var& b) { return a.tape()->add_row(a, b); }
inline Var broadcast_rows(const Var& a, Index rows) { return a.tape()->broadcast_rows(a, rows); }
inline Var broadcast_cols(const Var& a, Index cols) { return a.tape()->broadcast_cols(a, cols); }
inline Var concat_cols(const Var& a, const Var& b) { return a.tape()->concat_cols(a, b); }
inline Var slice_cols(const Var& a, Index start, Index count) {
  return a.tape()->slice_cols(a, start, count);
}
inline Var group_mean(const Var& a, Index group) { return a.tape()->group_mean(a, group); }
inline Var group_repeat(const Var& a, Index group) { return a.tape()->group_repeat(a, group); }

/// Mean over all entries.
inline Var mean(const Var& a) {
  return (1.0 / static_cast<double>(a.rows() * a.cols())) * sum(a);
}

/// Euclidean norm of every row, as an n x 1 column. The derivative at a
/// zero row is defined as zero.
inline Var row_norm(const Var& a) { return sqrt(row_sum(square(a))); }

}  // namespace wgr::ad
