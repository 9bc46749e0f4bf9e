#include <doctest.h>

#include <random>

#include "dpsrefine/fcp.hpp"
#include "support/oracles.hpp"

using namespace dpsrefine;
using oracles::random_spec;
using oracles::rel_l2;

TEST_CASE("fcp_weights: constant magnitude and single hot bin") {
  ComplexSpectrogram ones(3, 4, 1);
  for (auto& v : ones.data) v = {1.0, 0.0};
  const auto w1 = fcp_weights(ones, 1e-3);
  CHECK(!w1.degenerate);
  for (int l = 0; l < 3; ++l)
    for (int k = 0; k < 4; ++k)
      CHECK(w1.at(l, k) == doctest::Approx(1.0 + 1e-3).epsilon(1e-15));

  ComplexSpectrogram hot(2, 3, 1);
  hot.at(1, 2) = {10.0, 0.0};
  const auto w2 = fcp_weights(hot, 1e-3);
  CHECK(w2.at(1, 2) == doctest::Approx(100.1).epsilon(1e-15));
  CHECK(w2.at(0, 0) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("fcp_weights: dense oracle match and degenerate all-zero target") {
  std::mt19937_64 rng(41);
  const auto Y = random_spec(9, 5, 3, rng);
  const auto w = fcp_weights(Y, 1e-3);
  const auto expected = oracles::dense_fcp_weights(Y, 1e-3);
  for (int l = 0; l < Y.frames; ++l)
    for (int k = 0; k < Y.bins; ++k)
      CHECK(w.at(l, k) ==
            doctest::Approx(expected[l * Y.bins + k]).epsilon(1e-12));

  const ComplexSpectrogram zero(4, 3, 2);
  const auto wz = fcp_weights(zero, 1e-3);
  CHECK(wz.degenerate);
  for (int l = 0; l < 4; ++l)
    for (int k = 0; k < 3; ++k) CHECK(wz.at(l, k) == 1.0);
}

TEST_CASE("estimate_filter: exact fit Y = 2X gives a unit-tap filter") {
  std::mt19937_64 rng(42);
  const auto X = random_spec(20, 4, 1, rng);
  ComplexSpectrogram Y = X;
  for (auto& v : Y.data) v *= 2.0;

  FcpParams p;
  p.n_taps = 5;
  const auto H = estimate_filter(X, Y, p);
  const auto fit = apply_filter(H, X);
  CHECK(rel_l2(fit, Y) < 1e-6);
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(H.at(0, k, 0) - cdouble{2.0, 0.0}) < 1e-6);
    for (int n = 1; n < 5; ++n) CHECK(std::abs(H.at(n, k, 0)) < 1e-6);
  }
}

TEST_CASE("estimate_filter recovers a known filter from noise-free synthesis") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 5; ++trial) {
    const int true_taps = 1 + static_cast<int>(rng() % 4);
    const int C = 1 + static_cast<int>(rng() % 3);
    const auto X = random_spec(64, 5, 1, rng);

    MultiFrameFilter h_true(true_taps, 5, C);
    std::normal_distribution<double> g;
    for (auto& v : h_true.data) v = {g(rng), g(rng)};

    const auto Y = apply_filter(h_true, X);
    FcpParams p;
    p.n_taps = true_taps + 2;
    const auto H = estimate_filter(X, Y, p);

    MultiFrameFilter padded(p.n_taps, 5, C);
    for (int n = 0; n < true_taps; ++n)
      for (int k = 0; k < 5; ++k)
        for (int c = 0; c < C; ++c) padded.at(n, k, c) = h_true.at(n, k, c);
    CHECK(rel_l2(H, padded) < 1e-6);
  }
}

TEST_CASE("estimate_filter matches the dense weighted-pseudoinverse oracle") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    const int L = 16, K = 5, C = 1 + static_cast<int>(rng() % 3);
    const auto X = random_spec(L, K, 1, rng);
    const auto Y = random_spec(L, K, C, rng);
    FcpParams p;
    p.n_taps = 3;
    const auto H = estimate_filter(X, Y, p);
    const auto H_oracle = oracles::dense_estimate_filter(X, Y, p, kRidgeRel);
    CHECK(rel_l2(H, H_oracle) < 1e-8);
  }
}

TEST_CASE("estimate_filter optimality: normal-equation residual equals the ridge term") {
  std::mt19937_64 rng(45);
  const int L = 24, K = 3, C = 2, N = 4;
  const auto X = random_spec(L, K, 1, rng);
  const auto Y = random_spec(L, K, C, rng);
  FcpParams p;
  p.n_taps = N;
  const auto H = estimate_filter(X, Y, p);
  const auto lam = fcp_weights(Y, p.eps);

  for (int k = 0; k < K; ++k) {
    // trace of A^H W A for the ridge magnitude
    double tr = 0.0;
    for (int n = 0; n < N; ++n)
      for (int m = n; m < L; ++m) tr += std::norm(X.at(m - n, k)) / lam.at(m, k);
    const double delta = kRidgeRel * tr / N;

    for (int c = 0; c < C; ++c) {
      double scale = 0.0;
      for (int n = 0; n < N; ++n) {
        // g_n = sum_m conj(x[m-n]) w_m (y_m - sum_j h_j x[m-j])
        cdouble gn = 0.0;
        for (int m = n; m < L; ++m) {
          cdouble fit = 0.0;
          for (int j = 0; j < N && j <= m; ++j) fit += H.at(j, k, c) * X.at(m - j, k);
          gn += std::conj(X.at(m - n, k)) * (Y.at(m, k, c) - fit) / lam.at(m, k);
        }
        const cdouble expect = delta * H.at(n, k, c);
        CHECK(std::abs(gn - expect) < 1e-8 * (1.0 + std::abs(expect) + tr));
        scale += std::abs(gn);
      }
      (void)scale;
    }
  }
}

TEST_CASE("estimate_filter is scale-consistent in the target") {
  std::mt19937_64 rng(46);
  const auto X = random_spec(20, 4, 1, rng);
  const auto Y = random_spec(20, 4, 2, rng);
  const cdouble c{-1.25, 0.5};
  ComplexSpectrogram Yc = Y;
  for (auto& v : Yc.data) v *= c;

  FcpParams p;
  p.n_taps = 3;
  const auto H = estimate_filter(X, Y, p);
  const auto Hc = estimate_filter(X, Yc, p);
  MultiFrameFilter scaled = H;
  for (auto& v : scaled.data) v *= c;
  CHECK(rel_l2(Hc, scaled) < 1e-9);
}

TEST_CASE("apply_filter: identity tap, delay tap, and the nested-loop oracle") {
  std::mt19937_64 rng(47);
  const auto X = random_spec(12, 3, 1, rng);

  MultiFrameFilter ident(4, 3, 2);
  for (int k = 0; k < 3; ++k)
    for (int c = 0; c < 2; ++c) ident.at(0, k, c) = 1.0;
  const auto rep = apply_filter(ident, X);
  for (int l = 0; l < 12; ++l)
    for (int k = 0; k < 3; ++k)
      for (int c = 0; c < 2; ++c) CHECK(rep.at(l, k, c) == X.at(l, k));

  MultiFrameFilter delay(4, 3, 1);
  for (int k = 0; k < 3; ++k) delay.at(1, k, 0) = 1.0;
  const auto d = apply_filter(delay, X);
  for (int k = 0; k < 3; ++k) {
    CHECK(d.at(0, k, 0) == cdouble{});
    for (int l = 1; l < 12; ++l) CHECK(d.at(l, k, 0) == X.at(l - 1, k));
  }

  MultiFrameFilter h(3, 3, 2);
  std::normal_distribution<double> g;
  for (auto& v : h.data) v = {g(rng), g(rng)};
  CHECK(rel_l2(apply_filter(h, X), oracles::naive_apply_filter(h, X)) < 1e-14);
}

TEST_CASE("apply_filter_adjoint: identity filter sums channels; dot-product identity") {
  std::mt19937_64 rng(48);
  const auto R = random_spec(10, 3, 3, rng);

  MultiFrameFilter ident(2, 3, 3);
  for (int k = 0; k < 3; ++k)
    for (int c = 0; c < 3; ++c) ident.at(0, k, c) = 1.0;
  const auto summed = apply_filter_adjoint(ident, R);
  for (int l = 0; l < 10; ++l)
    for (int k = 0; k < 3; ++k) {
      cdouble s = 0.0;
      for (int c = 0; c < 3; ++c) s += R.at(l, k, c);
      CHECK(std::abs(summed.at(l, k) - s) < 1e-14);
    }

  for (int trial = 0; trial < 10; ++trial) {
    const int L = 4 + static_cast<int>(rng() % 12);
    const int K = 1 + static_cast<int>(rng() % 4);
    const int C = 1 + static_cast<int>(rng() % 4);
    const int N = 1 + static_cast<int>(rng() % 5);
    const auto X = random_spec(L, K, 1, rng);
    const auto R2 = random_spec(L, K, C, rng);
    MultiFrameFilter h(N, K, C);
    std::normal_distribution<double> g;
    for (auto& v : h.data) v = {g(rng), g(rng)};

    const double lhs = oracles::re_inner(apply_filter(h, X), R2);
    const double rhs = oracles::re_inner(X, apply_filter_adjoint(h, R2));
    CHECK(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(lhs)));
  }

  ComplexSpectrogram zeroR(10, 3, 3);
  const auto z = apply_filter_adjoint(ident, zeroR);
  for (const auto& v : z.data) CHECK(v == cdouble{});
}

TEST_CASE("align: self-alignment, per-bin complex gain inversion, scalar closed form") {
  std::mt19937_64 rng(49);
  const auto X_ref = random_spec(16, 4, 1, rng);

  const auto self = align(X_ref, X_ref, 1e-3);
  CHECK(rel_l2(self, X_ref) < 1e-8);

  ComplexSpectrogram X0 = X_ref;
  std::normal_distribution<double> g;
  std::vector<cdouble> gains(4);
  for (int k = 0; k < 4; ++k) gains[k] = cdouble{g(rng), g(rng)} + cdouble{2.0, 0.0};
  for (int l = 0; l < 16; ++l)
    for (int k = 0; k < 4; ++k) X0.at(l, k) *= gains[k];
  CHECK(rel_l2(align(X0, X_ref, 1e-3), X_ref) < 1e-7);

  // Random pair: gain per bin equals the weighted projection ratio.
  const auto A = random_spec(16, 4, 1, rng);
  const auto B = random_spec(16, 4, 1, rng);
  const auto out = align(A, B, 1e-3);
  const auto lam = fcp_weights(B, 1e-3);
  for (int k = 0; k < 4; ++k) {
    cdouble num = 0.0;
    double den = 0.0;
    for (int l = 0; l < 16; ++l) {
      num += std::conj(A.at(l, k)) * B.at(l, k) / lam.at(l, k);
      den += std::norm(A.at(l, k)) / lam.at(l, k);
    }
    const cdouble gain = num / (den * (1.0 + kRidgeRel));
    for (int l = 0; l < 16; ++l)
      CHECK(std::abs(out.at(l, k) - gain * A.at(l, k)) < 1e-9 * (1.0 + std::abs(gain)));
  }
}

TEST_CASE("estimate_filter survives silent bins with zero taps") {
  std::mt19937_64 rng(51);
  auto X = random_spec(16, 4, 1, rng);
  for (int l = 0; l < 16; ++l) X.at(l, 2) = 0.0;  // one silent input bin
  const auto Y = random_spec(16, 4, 2, rng);
  FcpParams p;
  p.n_taps = 3;
  const auto H = estimate_filter(X, Y, p);
  CHECK(H.all_finite());
  for (int n = 0; n < 3; ++n)
    for (int c = 0; c < 2; ++c) CHECK(H.at(n, 2, c) == cdouble{});
}

TEST_CASE("estimate_filter input validation") {
  std::mt19937_64 rng(50);
  const auto X = random_spec(8, 3, 1, rng);
  const auto Y = random_spec(8, 4, 2, rng);
  FcpParams p;
  CHECK_THROWS_AS(estimate_filter(X, Y, p), InvalidInput);

  FcpParams bad;
  bad.n_taps = 0;
  CHECK_THROWS_AS(estimate_filter(X, X, bad), InvalidConfig);

  MultiFrameFilter h(2, 5, 1);
  CHECK_THROWS_AS(apply_filter(h, X), InvalidInput);
}
