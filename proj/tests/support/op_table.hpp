#pragma once

// The full table of differentiable tape operations used by the learner,
// checked against central finite differences. Shared by the unit suite and
// the acceptance suite (which runs it at full depth).

#include <string>
#include <vector>

#include "support/fd_check.hpp"

namespace saginmp::testing {

struct OpFdResult {
  std::string worst_op;
  double max_rel_err = 0.0;
  int cases = 0;
};

inline OpFdResult check_all_ops(int reps, std::uint64_t seed, double step = 1e-4) {
  using ad::Tape;
  OpFdResult out;
  Rng rng(seed);
  for (int rep = 0; rep < reps; ++rep) {
    const int r = 1 + static_cast<int>(rng.uniform_index(4));
    const int c = 1 + static_cast<int>(rng.uniform_index(4));
    Rng wrng(seed + 1000 + rep);

    auto run = [&](const std::string& name,
                   std::function<Tape::Var(Tape&, const std::vector<Tape::Var>&)> op,
                   std::vector<Mat> inputs) {
      const GraphBuilder b = with_weights(op, inputs, wrng);
      const FdReport rep2 = fd_check(b, std::move(inputs), step);
      ++out.cases;
      if (rep2.max_rel_err > out.max_rel_err) {
        out.max_rel_err = rep2.max_rel_err;
        out.worst_op = name;
      }
    };

    run("add", [](Tape& t, const std::vector<Tape::Var>& v) { return t.add(v[0], v[1]); },
        {random_mat(rng, r, c), random_mat(rng, r, c)});
    run("sub", [](Tape& t, const std::vector<Tape::Var>& v) { return t.sub(v[0], v[1]); },
        {random_mat(rng, r, c), random_mat(rng, r, c)});
    run("mul", [](Tape& t, const std::vector<Tape::Var>& v) { return t.mul(v[0], v[1]); },
        {random_mat(rng, r, c), random_mat(rng, r, c)});
    run("matmul", [](Tape& t, const std::vector<Tape::Var>& v) { return t.matmul(v[0], v[1]); },
        {random_mat(rng, r, 3), random_mat(rng, 3, c)});
    run("transpose", [](Tape& t, const std::vector<Tape::Var>& v) { return t.transpose(v[0]); },
        {random_mat(rng, r, c)});
    run("exp", [](Tape& t, const std::vector<Tape::Var>& v) { return t.exp_(v[0]); },
        {random_mat(rng, r, c)});
    run("log", [](Tape& t, const std::vector<Tape::Var>& v) { return t.log_(v[0]); },
        {random_pos_mat(rng, r, c)});
    run("tanh", [](Tape& t, const std::vector<Tape::Var>& v) { return t.tanh_(v[0]); },
        {random_mat(rng, r, c)});
    run("scale_add_scalar",
        [](Tape& t, const std::vector<Tape::Var>& v) {
          return t.add_scalar(t.scale(v[0], -1.7), 0.3);
        },
        {random_mat(rng, r, c)});
    run("square", [](Tape& t, const std::vector<Tape::Var>& v) { return t.square(v[0]); },
        {random_mat(rng, r, c)});
    run("sum", [](Tape& t, const std::vector<Tape::Var>& v) { return t.sum(v[0]); },
        {random_mat(rng, r, c)});
    run("mean", [](Tape& t, const std::vector<Tape::Var>& v) { return t.mean(v[0]); },
        {random_mat(rng, r, c)});
    run("rowsum", [](Tape& t, const std::vector<Tape::Var>& v) { return t.rowsum(v[0]); },
        {random_mat(rng, r, c)});
    run("add_rowvec",
        [](Tape& t, const std::vector<Tape::Var>& v) { return t.add_rowvec(v[0], v[1]); },
        {random_mat(rng, r, c), random_mat(rng, 1, c)});
    run("concat_cols",
        [](Tape& t, const std::vector<Tape::Var>& v) { return t.concat_cols({v[0], v[1]}); },
        {random_mat(rng, r, c), random_mat(rng, r, 2)});
    run("stack_rows",
        [](Tape& t, const std::vector<Tape::Var>& v) { return t.stack_rows({v[0], v[1]}); },
        {random_mat(rng, 1, c), random_mat(rng, 1, c)});
    run("softmax_rows",
        [](Tape& t, const std::vector<Tape::Var>& v) { return t.softmax_rows(v[0]); },
        {random_mat(rng, r, c)});
    run("log_softmax_rows",
        [](Tape& t, const std::vector<Tape::Var>& v) { return t.log_softmax_rows(v[0]); },
        {random_mat(rng, r, c)});

    {
      std::vector<int> idx(r);
      for (int i = 0; i < r; ++i) idx[i] = static_cast<int>(rng.uniform_index(c));
      run("pick_per_row",
          [idx](Tape& t, const std::vector<Tape::Var>& v) { return t.pick_per_row(v[0], idx); },
          {random_mat(rng, r, c)});
    }
    {
      Mat a = random_mat(rng, r, c);
      Mat b = a;
      for (auto& x : b.a) x += rng.bernoulli(0.5) ? 0.5 : -0.5;
      run("minimum",
          [](Tape& t, const std::vector<Tape::Var>& v) { return t.minimum(v[0], v[1]); }, {a, b});
    }
    {
      Mat a = random_mat(rng, r, c, -0.8, 0.8);
      for (auto& x : a.a)
        if (std::fabs(std::fabs(x) - 1.0) < 0.05) x = 0.5;
      run("clamp",
          [](Tape& t, const std::vector<Tape::Var>& v) { return t.clamp(v[0], -1.0, 1.0); },
          {a});
    }
  }
  return out;
}

}  // namespace saginmp::testing
