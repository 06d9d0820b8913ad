#include "saginmp/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace saginmp::ad {

namespace {
void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}
}  // namespace

Tape::Var Tape::leaf(Mat v) { return push(std::move(v)); }

Tape::Var Tape::param(const Mat& value, Mat* grad_sink) {
  require(grad_sink != nullptr && grad_sink->rows == value.rows && grad_sink->cols == value.cols,
          "param: gradient sink shape mismatch");
  for (const auto& [sink, var] : param_cache_)
    if (sink == grad_sink) return var;  // one node per parameter per tape
  const Var x = push(value);
  nodes_[x].grad_sink = grad_sink;
  param_cache_.push_back({grad_sink, x});
  return x;
}

Tape::Var Tape::add(Var a, Var b) {
  require(val(a).same_shape(val(b)), "add: shape mismatch");
  Mat out = val(a);
  for (int i = 0; i < out.size(); ++i) out.a[i] += val(b).a[i];
  const Var y = push(std::move(out));
  nodes_[y].back = [a, b, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    for (int i = 0; i < g.size(); ++i) {
      t.nodes_[a].grad.a[i] += g.a[i];
      t.nodes_[b].grad.a[i] += g.a[i];
    }
  };
  return y;
}

Tape::Var Tape::sub(Var a, Var b) {
  require(val(a).same_shape(val(b)), "sub: shape mismatch");
  Mat out = val(a);
  for (int i = 0; i < out.size(); ++i) out.a[i] -= val(b).a[i];
  const Var y = push(std::move(out));
  nodes_[y].back = [a, b, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    for (int i = 0; i < g.size(); ++i) {
      t.nodes_[a].grad.a[i] += g.a[i];
      t.nodes_[b].grad.a[i] -= g.a[i];
    }
  };
  return y;
}

Tape::Var Tape::mul(Var a, Var b) {
  require(val(a).same_shape(val(b)), "mul: shape mismatch");
  Mat out = val(a);
  for (int i = 0; i < out.size(); ++i) out.a[i] *= val(b).a[i];
  const Var y = push(std::move(out));
  nodes_[y].back = [a, b, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    const Mat& av = t.nodes_[a].val;
    const Mat& bv = t.nodes_[b].val;
    for (int i = 0; i < g.size(); ++i) {
      t.nodes_[a].grad.a[i] += g.a[i] * bv.a[i];
      t.nodes_[b].grad.a[i] += g.a[i] * av.a[i];
    }
  };
  return y;
}

Tape::Var Tape::matmul(Var a, Var b) {
  require(val(a).cols == val(b).rows, "matmul: inner dimension mismatch");
  const Var y = push(saginmp::matmul(val(a), val(b)));
  nodes_[y].back = [a, b, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    const Mat bt = transposed(t.nodes_[b].val);
    const Mat at = transposed(t.nodes_[a].val);
    const Mat ga = saginmp::matmul(g, bt);
    const Mat gb = saginmp::matmul(at, g);
    for (int i = 0; i < ga.size(); ++i) t.nodes_[a].grad.a[i] += ga.a[i];
    for (int i = 0; i < gb.size(); ++i) t.nodes_[b].grad.a[i] += gb.a[i];
  };
  return y;
}

Tape::Var Tape::transpose(Var a) {
  const Var y = push(transposed(val(a)));
  nodes_[y].back = [a, y](Tape& t) {
    const Mat gt = transposed(t.nodes_[y].grad);
    for (int i = 0; i < gt.size(); ++i) t.nodes_[a].grad.a[i] += gt.a[i];
  };
  return y;
}

Tape::Var Tape::exp_(Var a) {
  Mat out = val(a);
  for (auto& x : out.a) x = std::exp(x);
  const Var y = push(std::move(out));
  nodes_[y].back = [a, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    const Mat& yv = t.nodes_[y].val;
    for (int i = 0; i < g.size(); ++i) t.nodes_[a].grad.a[i] += g.a[i] * yv.a[i];
  };
  return y;
}

Tape::Var Tape::log_(Var a) {
  Mat out = val(a);
  for (auto& x : out.a) x = std::log(x);
  const Var y = push(std::move(out));
  nodes_[y].back = [a, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    const Mat& av = t.nodes_[a].val;
    for (int i = 0; i < g.size(); ++i) t.nodes_[a].grad.a[i] += g.a[i] / av.a[i];
  };
  return y;
}

Tape::Var Tape::tanh_(Var a) {
  Mat out = val(a);
  for (auto& x : out.a) x = std::tanh(x);
  const Var y = push(std::move(out));
  nodes_[y].back = [a, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    const Mat& yv = t.nodes_[y].val;
    for (int i = 0; i < g.size(); ++i)
      t.nodes_[a].grad.a[i] += g.a[i] * (1.0 - yv.a[i] * yv.a[i]);
  };
  return y;
}

Tape::Var Tape::neg(Var a) { return scale(a, -1.0); }

Tape::Var Tape::scale(Var a, double c) {
  Mat out = val(a);
  for (auto& x : out.a) x *= c;
  const Var y = push(std::move(out));
  nodes_[y].back = [a, y, c](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    for (int i = 0; i < g.size(); ++i) t.nodes_[a].grad.a[i] += c * g.a[i];
  };
  return y;
}

Tape::Var Tape::add_scalar(Var a, double c) {
  Mat out = val(a);
  for (auto& x : out.a) x += c;
  const Var y = push(std::move(out));
  nodes_[y].back = [a, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    for (int i = 0; i < g.size(); ++i) t.nodes_[a].grad.a[i] += g.a[i];
  };
  return y;
}

Tape::Var Tape::square(Var a) {
  Mat out = val(a);
  for (auto& x : out.a) x *= x;
  const Var y = push(std::move(out));
  nodes_[y].back = [a, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    const Mat& av = t.nodes_[a].val;
    for (int i = 0; i < g.size(); ++i) t.nodes_[a].grad.a[i] += 2.0 * g.a[i] * av.a[i];
  };
  return y;
}

Tape::Var Tape::sum(Var a) {
  double s = 0.0;
  for (double x : val(a).a) s += x;
  const Var y = push(Mat::from(1, 1, {s}));
  nodes_[y].back = [a, y](Tape& t) {
    const double g = t.nodes_[y].grad.a[0];
    for (auto& ga : t.nodes_[a].grad.a) ga += g;
  };
  return y;
}

Tape::Var Tape::mean(Var a) {
  const int n = val(a).size();
  double s = 0.0;
  for (double x : val(a).a) s += x;
  const Var y = push(Mat::from(1, 1, {s / n}));
  nodes_[y].back = [a, y, n](Tape& t) {
    const double g = t.nodes_[y].grad.a[0] / n;
    for (auto& ga : t.nodes_[a].grad.a) ga += g;
  };
  return y;
}

Tape::Var Tape::rowsum(Var a) {
  const Mat& av = val(a);
  Mat out(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < av.cols; ++j) s += av(i, j);
    out(i, 0) = s;
  }
  const Var y = push(std::move(out));
  nodes_[y].back = [a, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    Mat& ga = t.nodes_[a].grad;
    for (int i = 0; i < ga.rows; ++i)
      for (int j = 0; j < ga.cols; ++j) ga(i, j) += g(i, 0);
  };
  return y;
}

Tape::Var Tape::add_rowvec(Var a, Var b) {
  const Mat& av = val(a);
  const Mat& bv = val(b);
  require(bv.rows == 1 && bv.cols == av.cols, "add_rowvec: b must be 1 x cols(a)");
  Mat out = av;
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < av.cols; ++j) out(i, j) += bv(0, j);
  const Var y = push(std::move(out));
  nodes_[y].back = [a, b, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    Mat& ga = t.nodes_[a].grad;
    Mat& gb = t.nodes_[b].grad;
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) {
        ga(i, j) += g(i, j);
        gb(0, j) += g(i, j);
      }
  };
  return y;
}

Tape::Var Tape::concat_cols(const std::vector<Var>& xs) {
  require(!xs.empty(), "concat_cols: empty input");
  const int rows = val(xs[0]).rows;
  int cols = 0;
  for (Var x : xs) {
    require(val(x).rows == rows, "concat_cols: row mismatch");
    cols += val(x).cols;
  }
  Mat out(rows, cols);
  int off = 0;
  for (Var x : xs) {
    const Mat& v = val(x);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < v.cols; ++j) out(i, off + j) = v(i, j);
    off += v.cols;
  }
  const Var y = push(std::move(out));
  nodes_[y].back = [xs, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    int off2 = 0;
    for (Var x : xs) {
      Mat& gx = t.nodes_[x].grad;
      for (int i = 0; i < gx.rows; ++i)
        for (int j = 0; j < gx.cols; ++j) gx(i, j) += g(i, off2 + j);
      off2 += gx.cols;
    }
  };
  return y;
}

Tape::Var Tape::stack_rows(const std::vector<Var>& xs) {
  require(!xs.empty(), "stack_rows: empty input");
  const int cols = val(xs[0]).cols;
  for (Var x : xs)
    require(val(x).rows == 1 && val(x).cols == cols, "stack_rows: rows must be 1 x c");
  Mat out(static_cast<int>(xs.size()), cols);
  for (size_t i = 0; i < xs.size(); ++i)
    for (int j = 0; j < cols; ++j) out(static_cast<int>(i), j) = val(xs[i])(0, j);
  const Var y = push(std::move(out));
  nodes_[y].back = [xs, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    for (size_t i = 0; i < xs.size(); ++i) {
      Mat& gx = t.nodes_[xs[i]].grad;
      for (int j = 0; j < gx.cols; ++j) gx(0, j) += g(static_cast<int>(i), j);
    }
  };
  return y;
}

Tape::Var Tape::pick_per_row(Var x, std::vector<int> idx) {
  const Mat& xv = val(x);
  require(static_cast<int>(idx.size()) == xv.rows, "pick_per_row: index count mismatch");
  Mat out(xv.rows, 1);
  for (int i = 0; i < xv.rows; ++i) {
    require(idx[i] >= 0 && idx[i] < xv.cols, "pick_per_row: index out of range");
    out(i, 0) = xv(i, idx[i]);
  }
  const Var y = push(std::move(out));
  nodes_[y].back = [x, y, idx = std::move(idx)](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    Mat& gx = t.nodes_[x].grad;
    for (int i = 0; i < g.rows; ++i) gx(i, idx[i]) += g(i, 0);
  };
  return y;
}

Tape::Var Tape::softmax_rows(Var x) {
  Mat out = val(x);
  for (int i = 0; i < out.rows; ++i) {
    double mx = out(i, 0);
    for (int j = 1; j < out.cols; ++j) mx = std::max(mx, out(i, j));
    double s = 0.0;
    for (int j = 0; j < out.cols; ++j) {
      out(i, j) = std::exp(out(i, j) - mx);
      s += out(i, j);
    }
    for (int j = 0; j < out.cols; ++j) out(i, j) /= s;
  }
  const Var y = push(std::move(out));
  nodes_[y].back = [x, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    const Mat& yv = t.nodes_[y].val;
    Mat& gx = t.nodes_[x].grad;
    for (int i = 0; i < g.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < g.cols; ++j) dot += g(i, j) * yv(i, j);
      for (int j = 0; j < g.cols; ++j) gx(i, j) += yv(i, j) * (g(i, j) - dot);
    }
  };
  return y;
}

Tape::Var Tape::log_softmax_rows(Var x) {
  Mat out = val(x);
  for (int i = 0; i < out.rows; ++i) {
    double mx = out(i, 0);
    for (int j = 1; j < out.cols; ++j) mx = std::max(mx, out(i, j));
    double s = 0.0;
    for (int j = 0; j < out.cols; ++j) s += std::exp(out(i, j) - mx);
    const double lse = mx + std::log(s);
    for (int j = 0; j < out.cols; ++j) out(i, j) -= lse;
  }
  const Var y = push(std::move(out));
  nodes_[y].back = [x, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    const Mat& yv = t.nodes_[y].val;  // log-probs
    Mat& gx = t.nodes_[x].grad;
    for (int i = 0; i < g.rows; ++i) {
      double gsum = 0.0;
      for (int j = 0; j < g.cols; ++j) gsum += g(i, j);
      for (int j = 0; j < g.cols; ++j) gx(i, j) += g(i, j) - std::exp(yv(i, j)) * gsum;
    }
  };
  return y;
}

Tape::Var Tape::minimum(Var a, Var b) {
  require(val(a).same_shape(val(b)), "minimum: shape mismatch");
  Mat out = val(a);
  for (int i = 0; i < out.size(); ++i) out.a[i] = std::min(out.a[i], val(b).a[i]);
  const Var y = push(std::move(out));
  nodes_[y].back = [a, b, y](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    const Mat& av = t.nodes_[a].val;
    const Mat& bv = t.nodes_[b].val;
    for (int i = 0; i < g.size(); ++i) {
      if (av.a[i] <= bv.a[i])
        t.nodes_[a].grad.a[i] += g.a[i];
      else
        t.nodes_[b].grad.a[i] += g.a[i];
    }
  };
  return y;
}

Tape::Var Tape::clamp(Var a, double lo, double hi) {
  Mat out = val(a);
  for (auto& x : out.a) x = std::min(hi, std::max(lo, x));
  const Var y = push(std::move(out));
  nodes_[y].back = [a, y, lo, hi](Tape& t) {
    const Mat& g = t.nodes_[y].grad;
    const Mat& av = t.nodes_[a].val;
    for (int i = 0; i < g.size(); ++i)
      if (av.a[i] > lo && av.a[i] < hi) t.nodes_[a].grad.a[i] += g.a[i];
  };
  return y;
}

void Tape::backward(Var loss) {
  require(val(loss).rows == 1 && val(loss).cols == 1, "backward: loss must be scalar");
  nodes_[loss].grad.a[0] = 1.0;
  for (int i = loss; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back) n.back(*this);
    if (n.grad_sink) {
      for (int k = 0; k < n.grad.size(); ++k) n.grad_sink->a[k] += n.grad.a[k];
    }
  }
}

void Tape::zero_grads() {
  for (auto& n : nodes_) n.grad.fill(0.0);
}

}  // namespace saginmp::ad
