#include <algorithm>
#include <cmath>
#include <numeric>

#include "det6d/error.hpp"
#include "det6d/nn.hpp"
#include "det6d/optim.hpp"
#include "doctest.h"

using namespace det6d;
using namespace det6d::nn;

namespace {

// Triple loops, no Eigen products.
Tensor2 naive_forward(const MlpParams& p, const Tensor2& x) {
  Tensor2 cur = x;
  for (const DenseLayer& l : p.layers) {
    Tensor2 next(cur.rows(), l.weights.rows());
    for (Eigen::Index r = 0; r < cur.rows(); ++r) {
      for (Eigen::Index o = 0; o < l.weights.rows(); ++o) {
        double s = l.bias[o];
        for (Eigen::Index i = 0; i < l.weights.cols(); ++i) s += l.weights(o, i) * cur(r, i);
        if (l.activation == Activation::kRelu) s = s > 0 ? s : 0;
        if (l.activation == Activation::kSigmoid) s = 1 / (1 + std::exp(-s));
        next(r, o) = s;
      }
    }
    cur = next;
  }
  return cur;
}

Tensor2 random_tensor(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Tensor2 t(r, c);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = uniform(rng, -1, 1);
  return t;
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("mlp_forward basics") {
    MlpParams id;
    id.layers.push_back({Tensor2::Identity(3, 3), Vector::Zero(3), Activation::kNone});
    Rng rng(1);
    const Tensor2 x = random_tensor(4, 3, rng);
    CHECK(mlp_forward(id, x).y == x);

    MlpParams one;
    Tensor2 w(1, 1);
    w << 2;
    Vector b(1);
    b << 1;
    one.layers.push_back({w, b, Activation::kNone});
    Tensor2 x1(1, 1);
    x1 << 3;
    CHECK(mlp_forward(one, x1).y(0, 0) == 7.0);
  }

  TEST_CASE("mlp_forward matches naive loops") {
    Rng rng(2);
    const std::vector<Eigen::Index> widths{7, 5, 3};
    MlpParams p = make_mlp(4, widths, Activation::kRelu, Activation::kSigmoid, rng);
    for (auto& l : p.layers) {
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = uniform(rng, -0.5, 0.5);
    }
    const Tensor2 x = random_tensor(9, 4, rng);
    CHECK((mlp_forward(p, x).y - naive_forward(p, x)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(p.parameter_count() == 4 * 7 + 7 + 7 * 5 + 5 + 5 * 3 + 3);
  }

  TEST_CASE("mlp_backward") {
    Rng rng(3);
    const std::vector<Eigen::Index> widths{6, 2};
    const MlpParams p = make_mlp(3, widths, Activation::kRelu, Activation::kNone, rng);
    const Tensor2 x = random_tensor(5, 3, rng);
    const MlpForward f = mlp_forward(p, x);
    const MlpBackward b = mlp_backward(p, f.cache, Tensor2::Zero(5, 2));
    CHECK(b.dx.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& g : b.grads.weights) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& g : b.grads.bias) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(mlp_forward(p, random_tensor(2, 4, rng)), Error);
  }

  TEST_CASE("flatten round trip") {
    Rng rng(4);
    const std::vector<Eigen::Index> widths{3, 2};
    const MlpParams p = make_mlp(2, widths, Activation::kRelu, Activation::kNone, rng);
    std::vector<double> flat;
    append_flat(p, flat);
    CHECK(flat.size() == p.parameter_count());
    MlpParams q = make_mlp(2, widths, Activation::kRelu, Activation::kNone, rng);
    CHECK(load_flat(q, flat, 0) == flat.size());
    CHECK(mlp_forward(q, Tensor2::Ones(1, 2)).y == mlp_forward(p, Tensor2::Ones(1, 2)).y);
  }

  TEST_CASE("pointnet_aggregate") {
    Rng rng(5);
    const std::vector<Eigen::Index> hw{8, 6}, gw{5, 4};
    const MlpParams h = make_mlp(3, hw, Activation::kRelu, Activation::kRelu, rng);
    const MlpParams g = make_mlp(6, gw, Activation::kRelu, Activation::kNone, rng);

    const Tensor2 single = random_tensor(1, 3, rng);
    const Tensor2 ref = naive_forward(g, naive_forward(h, single));
    CHECK((pointnet_aggregate(h, g, single).feature - ref).cwiseAbs().maxCoeff() < 1e-12);

    const Tensor2 group = random_tensor(10, 3, rng);
    const Tensor2 out = pointnet_aggregate(h, g, group).feature;
    std::vector<Eigen::Index> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    for (int trial = 0; trial < 5; ++trial) {
      std::shuffle(perm.begin(), perm.end(), rng);
      Tensor2 shuffled(10, 3);
      for (Eigen::Index i = 0; i < 10; ++i) shuffled.row(i) = group.row(perm[i]);
      CHECK(pointnet_aggregate(h, g, shuffled).feature == out);
    }
    CHECK_THROWS_AS(pointnet_aggregate(h, g, Tensor2(0, 3)), Error);
  }

  TEST_CASE("pointnet gradient with distinct maxima") {
    Rng rng(6);
    const std::vector<Eigen::Index> hw{4}, gw{3};
    const MlpParams h = make_mlp(2, hw, Activation::kNone, Activation::kNone, rng);
    const MlpParams g = make_mlp(4, gw, Activation::kNone, Activation::kNone, rng);
    const Tensor2 group = random_tensor(5, 2, rng);
    const Tensor2 up = random_tensor(1, 3, rng);
    DifferentiableFn f = [&](const Vector& x, Vector* grad) {
      const Tensor2 grp = Eigen::Map<const Tensor2>(x.data(), 5, 2);
      const PointNetForward fw = pointnet_aggregate(h, g, grp);
      if (grad) {
        const PointNetBackward b = pointnet_backward(h, g, fw.cache, up);
        *grad = Eigen::Map<const Vector>(b.dgroup.data(), b.dgroup.size());
      }
      return (fw.feature.array() * up.array()).sum();
    };
    const Vector x = Eigen::Map<const Vector>(group.data(), group.size());
    CHECK(grad_check(f, x).max_rel_error < 1e-6);
  }
}
