#include <doctest.h>

#include <cmath>
#include <vector>

#include "ucrlb/harness.hpp"
#include "ucrlb/random.hpp"

using namespace ucrlb;

namespace {

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("same key replays the same sequence") {
  Stream a(derive_key({7, 3, 1, 0}));
  Stream b(derive_key({7, 3, 1, 0}));
  for (int i = 0; i < 1000; ++i) REQUIRE(a() == b());

  Stream c = a;
  const auto first = a.uniform();
  CHECK(c.uniform() == first);
  CHECK(a == c);
}

TEST_CASE("derive_key depends on order and on every part") {
  CHECK(derive_key({1, 2}) != derive_key({2, 1}));
  CHECK(derive_key({1, 2}) != derive_key({1, 2, 0}));
  CHECK(derive_key({0, 0, 0, 1}) != derive_key({0, 0, 1, 0}));
}

TEST_CASE("uniform draws stay in [0,1) with the right mean") {
  Stream s(42);
  double total = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    total += u;
  }
  // sd of the mean is sqrt(1/12 / 1e5) ~ 9.1e-4
  CHECK(std::abs(total / 100000.0 - 0.5) < 4e-3);
}

TEST_CASE("pair streams of one trial look independent") {
  TrialStreams streams = make_streams(11, 2, 3, 2);
  for (State s1 = 0; s1 < 3; ++s1) {
    for (Action a1 = 0; a1 < 2; ++a1) {
      for (State s2 = 0; s2 < 3; ++s2) {
        for (Action a2 = 0; a2 < 2; ++a2) {
          if (s1 * 2 + a1 >= s2 * 2 + a2) continue;
          Stream x = streams.pair(s1, a1);
          Stream y = streams.pair(s2, a2);
          std::vector<double> xs(10000), ys(10000);
          for (int i = 0; i < 10000; ++i) {
            xs[i] = x.uniform();
            ys[i] = y.uniform();
          }
          CHECK(std::abs(correlation(xs, ys)) < 0.05);
        }
      }
    }
  }
}

TEST_CASE("streams differ across trials and seeds") {
  const auto a = make_streams(0, 0, 2, 2);
  const auto b = make_streams(0, 1, 2, 2);
  const auto c = make_streams(1, 0, 2, 2);
  CHECK(a.pair_streams[0].key() != b.pair_streams[0].key());
  CHECK(a.pair_streams[0].key() != c.pair_streams[0].key());
  CHECK(a.agent.key() != a.masking.key());
}

TEST_CASE("beta sampler matches its mean") {
  Stream s(5);
  for (const auto& [alpha, beta] : std::vector<std::pair<double, double>>{{0.5, 0.5}, {0.8 + 1.0 / 64, 0.2 - 1.0 / 64}, {3.0, 7.0}}) {
    const int n = 100000;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = sample_beta(s, alpha, beta);
      REQUIRE(x >= 0.0);
      REQUIRE(x <= 1.0);
      total += x;
    }
    const double mean = alpha / (alpha + beta);
    const double var = alpha * beta / ((alpha + beta) * (alpha + beta) * (alpha + beta + 1.0));
    CHECK(std::abs(total / n - mean) < 4.0 * std::sqrt(var / n));
  }
}
