#include <doctest.h>

#include <cmath>
#include <functional>

#include "scar/layers.hpp"
#include "scar/rng.hpp"
#include "test_support.hpp"

using namespace scar;
using scar::testing::max_abs_diff;
using scar::testing::random_tensor;

namespace {

// Naive seven-loop convolution, the correctness reference for the
// im2col + GEMM path.
template <typename T>
Tensor<T> conv_reference(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int dilation) {
  const int in_ch = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int out_ch = w.dim(0), k = w.dim(2);
  const int pad = dilation * (k - 1) / 2;
  Tensor<T> y({out_ch, h, wd});
  for (int o = 0; o < out_ch; ++o)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < wd; ++xx) {
        double acc = b.data[o];
        for (int c = 0; c < in_ch; ++c)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int sy = yy - pad + ky * dilation;
              const int sx = xx - pad + kx * dilation;
              if (sy < 0 || sy >= h || sx < 0 || sx >= wd) continue;
              acc += static_cast<double>(x.at(c, sy, sx)) *
                     static_cast<double>(w.data[((o * in_ch + c) * k + ky) * k + kx]);
            }
        y.at(o, yy, xx) = static_cast<T>(acc);
      }
  return y;
}

// Central-difference gradient of loss() w.r.t. one scalar.
double numeric_grad(const std::function<double()>& loss, double& x, double h = 1e-4) {
  const double saved = x;
  x = saved + h;
  const double up = loss();
  x = saved - h;
  const double down = loss();
  x = saved;
  return (up - down) / (2.0 * h);
}

bool grad_close(double analytic, double numeric, double tol = 1e-3) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale < tol;
}

}  // namespace

TEST_CASE("conv forward matches the naive reference") {
  Rng rng(3);
  for (int trial = 0; trial < 8; ++trial) {
    const int in_ch = rng.uniform_int(1, 5);
    const int out_ch = rng.uniform_int(1, 5);
    const int k = trial % 2 ? 1 : 3;
    const int dilation = k == 3 ? rng.uniform_int(1, 2) : 1;
    const int h = rng.uniform_int(3, 9), w = rng.uniform_int(3, 9);
    Conv2d<double> conv("c", in_ch, out_ch, k, dilation);
    for (auto& v : conv.weight().value.data) v = rng.uniform(-1.0, 1.0);
    for (auto& v : conv.bias().value.data) v = rng.uniform(-0.5, 0.5);
    const auto x = random_tensor<double>({in_ch, h, w}, rng);
    const auto got = conv.forward(x);
    const auto ref = conv_reference(x, conv.weight().value, conv.bias().value, dilation);
    CHECK(max_abs_diff(got, ref) < 1e-10);
  }
}

TEST_CASE("conv gradients match central differences") {
  Rng rng(5);
  Conv2d<double> conv("c", 2, 3, 3, 2);
  for (auto& v : conv.weight().value.data) v = rng.uniform(-0.5, 0.5);
  for (auto& v : conv.bias().value.data) v = rng.uniform(-0.2, 0.2);
  auto x = random_tensor<double>({2, 5, 6}, rng);
  const auto gy = random_tensor<double>({3, 5, 6}, rng);

  auto loss = [&]() {
    Conv2d<double> c2 = conv;
    const auto y = c2.forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) s += y.data[i] * gy.data[i];
    return s;
  };

  conv.weight().zero_grad();
  conv.bias().zero_grad();
  conv.forward(x);
  const auto gx = conv.backward(gy);

  for (std::size_t i = 0; i < conv.weight().value.data.size(); i += 7) {
    const double num = numeric_grad(loss, conv.weight().value.data[i]);
    CHECK(grad_close(conv.weight().grad.data[i], num));
  }
  for (std::size_t i = 0; i < conv.bias().value.data.size(); ++i) {
    const double num = numeric_grad(loss, conv.bias().value.data[i]);
    CHECK(grad_close(conv.bias().grad.data[i], num));
  }
  for (std::size_t i = 0; i < x.data.size(); i += 5) {
    const double num = numeric_grad(loss, x.data[i]);
    CHECK(grad_close(gx.data[i], num));
  }
}

TEST_CASE("maxpool halves dims and routes gradients to the argmax") {
  Tensor<double> x({1, 4, 4});
  for (int i = 0; i < 16; ++i) x.data[i] = i;
  MaxPool2<double> pool;
  const auto y = pool.forward(x);
  CHECK(y.shape == std::vector<int>{1, 2, 2});
  CHECK(y.at(0, 0, 0) == 5.0);
  CHECK(y.at(0, 1, 1) == 15.0);

  Tensor<double> gy({1, 2, 2});
  gy.fill(1.0);
  const auto gx = pool.backward(gy);
  CHECK(gx.at(0, 1, 1) == 1.0);
  CHECK(gx.at(0, 0, 0) == 0.0);
  double total = 0.0;
  for (double v : gx.data) total += v;
  CHECK(total == 4.0);
}

TEST_CASE("relu clamps and masks gradients") {
  Tensor<double> x({1, 1, 4});
  x.data = {-1.0, 0.0, 2.0, -3.0};
  ReLU<double> relu;
  const auto y = relu.forward(x);
  CHECK(y.data == std::vector<double>{0.0, 0.0, 2.0, 0.0});
  Tensor<double> gy({1, 1, 4});
  gy.fill(1.0);
  const auto gx = relu.backward(gy);
  CHECK(gx.data == std::vector<double>{0.0, 0.0, 1.0, 0.0});
}

TEST_CASE("x8 upsample preserves the map sum on interior-dominated grids") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const int h = rng.uniform_int(4, 12), w = rng.uniform_int(4, 12);
    Tensor<double> x({1, h, w});
    // mass only on interior cells; the border ring stays zero
    for (int y = 1; y < h - 1; ++y)
      for (int xx = 1; xx < w - 1; ++xx) x.at(0, y, xx) = rng.uniform(0.0, 2.0);
    BilinearUpsample<double> up(8);
    const auto y = up.forward(x);
    CHECK(y.shape == std::vector<int>{1, h * 8, w * 8});
    double in_sum = 0.0, out_sum = 0.0;
    for (double v : x.data) in_sum += v;
    for (double v : y.data) out_sum += v;
    CHECK(out_sum == doctest::Approx(in_sum).epsilon(1e-4));
  }
}

TEST_CASE("upsample backward is the transpose of forward") {
  Rng rng(13);
  auto x = random_tensor<double>({2, 3, 4}, rng);
  const auto gy = random_tensor<double>({2, 24, 32}, rng);
  BilinearUpsample<double> up(8);
  up.forward(x);
  const auto gx = up.backward(gy);
  for (std::size_t i = 0; i < x.data.size(); i += 3) {
    auto loss = [&]() {
      BilinearUpsample<double> u2(8);
      const auto y = u2.forward(x);
      double s = 0.0;
      for (std::size_t k = 0; k < y.data.size(); ++k) s += y.data[k] * gy.data[k];
      return s;
    };
    const double num = numeric_grad(loss, x.data[i]);
    CHECK(grad_close(gx.data[i], num));
  }
}

TEST_CASE("msra and gaussian init produce the documented scales") {
  Rng rng(17);
  Conv2d<double> a("a", 16, 16, 3);
  a.init(rng, InitKind::Gaussian001);
  double var = 0.0;
  for (double v : a.weight().value.data) var += v * v;
  var /= a.weight().value.numel();
  CHECK(std::sqrt(var) == doctest::Approx(0.01).epsilon(0.15));

  Conv2d<double> b("b", 16, 16, 3);
  b.init(rng, InitKind::Msra);
  var = 0.0;
  for (double v : b.weight().value.data) var += v * v;
  var /= b.weight().value.numel();
  CHECK(std::sqrt(var) == doctest::Approx(std::sqrt(2.0 / (16 * 9))).epsilon(0.15));
}
