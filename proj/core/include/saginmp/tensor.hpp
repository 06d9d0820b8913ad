#pragma once

#include <functional>
#include <vector>

#include "saginmp/matrix.hpp"

namespace saginmp::ad {

// Reverse-mode tape over small dense matrices. Nodes are created in
// topological order; backward() sweeps the tape in reverse. Parameters are
// bound leaves: their gradients accumulate into external storage so several
// backward passes can be snapshotted and combined.
class Tape {
 public:
  using Var = int;

  Var leaf(Mat v);                       // constant (no gradient escapes)
  Var param(const Mat& value, Mat* grad_sink);  // bound parameter leaf

  const Mat& val(Var x) const { return nodes_[x].val; }
  const Mat& grad(Var x) const { return nodes_[x].grad; }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var exp_(Var a);
  Var log_(Var a);
  Var tanh_(Var a);
  Var neg(Var a);
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);
  Var square(Var a);
  Var sum(Var a);   // -> 1x1
  Var mean(Var a);  // -> 1x1
  Var rowsum(Var a);               // r x c -> r x 1
  Var add_rowvec(Var a, Var b);    // (r x c) + broadcast (1 x c)
  Var concat_cols(const std::vector<Var>& xs);  // same rows
  Var stack_rows(const std::vector<Var>& xs);   // each 1 x c
  Var pick_per_row(Var x, std::vector<int> idx);  // -> r x 1
  Var softmax_rows(Var x);
  Var log_softmax_rows(Var x);
  Var minimum(Var a, Var b);              // elementwise; ties route to a
  Var clamp(Var a, double lo, double hi); // pass-through gradient strictly inside

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. loss must be
  // 1x1. Bound parameter leaves receive their gradient contributions.
  void backward(Var loss);
  void zero_grads();

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Mat val;
    Mat grad;
    std::function<void(Tape&)> back;  // empty for constants
    Mat* grad_sink = nullptr;
  };
  Var push(Mat v) {
    Node n;
    n.grad = Mat::zeros(v.rows, v.cols);
    n.val = std::move(v);
    nodes_.push_back(std::move(n));
    return static_cast<Var>(nodes_.size()) - 1;
  }
  std::vector<Node> nodes_;
  std::vector<std::pair<Mat*, Var>> param_cache_;
};

}  // namespace saginmp::ad
