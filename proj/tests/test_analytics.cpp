#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "odlc/analytics.hpp"
#include "odlc/numeric.hpp"
#include "odlc/valley_engine.hpp"

using namespace odlc;

namespace {

BaseloadModel model(int T, std::vector<double> f, double sigma, double eps2) {
  std::vector<double> mean(static_cast<std::size_t>(T));
  for (int k = 0; k < T; ++k) mean[k] = 60.0 + 4.0 * std::sin(0.5 * k);
  return BaseloadModel{mean, CausalFilter(std::move(f)), sigma, eps2};
}

// The published double sum, term by term.
double prop4_direct(int T, double eps1, double eps2, const CausalFilter& f) {
  double h = 0.0;
  for (int k = 1; k <= T; ++k) h += 1.0 / k;
  double pairs = 0.0;
  for (int a = 0; a < T; ++a) {
    for (int b = 0; b < T; ++b) {
      pairs += (double(T) / (std::max(a, b) + 1) - 1.0) *
               std::abs(f.cumulative(a) * f.cumulative(b));
    }
  }
  return eps1 * eps1 * (1.0 - h / T) + eps2 * eps2 / (double(T) * T) * pairs;
}

// Largest V over every vertex of the error box, computed by actually running
// the engine. The variance is convex in (a, e), so the box maximum sits at a
// vertex.
double vertex_max(const BaseloadModel& m, const ArrivalModel& arr, bool vary_a, bool vary_e) {
  const int T = m.horizon();
  const int bits = (vary_a ? T : 0) + (vary_e ? T : 0);
  double best = 0.0;
  for (long mask = 0; mask < (1L << bits); ++mask) {
    ScenarioDraw sc;
    sc.a.assign(T, arr.lambda);
    sc.e.assign(T, 0.0);
    int bit = 0;
    if (vary_a) {
      for (int k = 0; k < T; ++k, ++bit) sc.a[k] += ((mask >> bit) & 1) ? arr.eps1 : -arr.eps1;
    }
    if (vary_e) {
      for (int k = 0; k < T; ++k, ++bit) sc.e[k] = ((mask >> bit) & 1) ? m.eps2 : -m.eps2;
    }
    sc.realized_baseload = realized_baseload(m, sc.e);
    best = std::max(best, run_valley_mpc(sc, m, arr).variance);
  }
  return best;
}

double filter_sum_direct(int T, const CausalFilter& f, int shift) {
  double acc = 0.0;
  for (int t = 0; t < T; ++t) {
    const double F = f.cumulative(t);
    acc += F * F * (T - t + shift) / (t + 1.0);
  }
  return acc / (double(T) * T);
}

}  // namespace

TEST_CASE("load variance") {
  CHECK(load_variance(std::vector<double>{4.0, 4.0, 4.0}) == 0.0);
  CHECK(load_variance(std::vector<double>{1.0, 3.0}) == 1.0);
  CHECK(load_variance(std::vector<double>{0.0, 0.0, 3.0}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS(load_variance(std::vector<double>{}));
}

TEST_CASE("error matrices reproduce the engine's deviation from the mean") {
  // Perturbing one error coordinate moves d - mean(d) by the matching column.
  for (int T : {2, 5, 9}) {
    const auto m = model(T, {1.0, -0.5, 0.3}, 0.0, 0.0);
    const ArrivalModel arr{7.0, 0.0, 0.0};
    const auto B = arrival_error_matrix(T);
    const auto C = baseload_error_matrix(T, m.filter);
    ScenarioDraw base;
    base.a.assign(T, arr.lambda);
    base.e.assign(T, 0.0);
    base.realized_baseload = m.mean_profile;
    const auto d0 = run_valley_mpc(base, m, arr).d;
    auto centered = [](std::vector<double> d) {
      double mean = 0.0;
      for (double x : d) mean += x;
      mean /= double(d.size());
      for (double& x : d) x -= mean;
      return d;
    };
    const auto c0 = centered(d0);
    for (int j = 0; j < T; ++j) {
      auto sa = base;
      sa.a[j] += 1.0;
      const auto ca = centered(run_valley_mpc(sa, m, arr).d);
      auto se = base;
      se.e[j] = 1.0;
      se.realized_baseload = realized_baseload(m, se.e);
      const auto ce = centered(run_valley_mpc(se, m, arr).d);
      for (int i = 0; i < T; ++i) {
        CHECK(ca[i] - c0[i] == doctest::Approx(B(i, j)).epsilon(1e-9).scale(1.0));
        CHECK(ce[i] - c0[i] == doctest::Approx(C(i, j)).epsilon(1e-9).scale(1.0));
      }
    }
  }
  CHECK(arrival_error_matrix(3)(0, 0) == 0.0);
  CHECK(arrival_error_matrix(3)(2, 1) == doctest::Approx(1.0 / 6.0));
  CHECK(arrival_error_matrix(3)(0, 2) == doctest::Approx(-1.0 / 3.0));
  // An identity filter collapses C onto B.
  CHECK(baseload_error_matrix(6, CausalFilter::identity()).isApprox(arrival_error_matrix(6)));
}

TEST_CASE("decomposition splits the realized variance") {
  const int T = 6;
  const auto m = model(T, {1.0, 0.5, 0.25}, 0.6, 1.0);
  const ArrivalModel arr{10.0, 1.5, 3.0};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto sc = sample_scenario(m, arr, T, seed);
    const double v = run_valley_mpc(sc, m, arr).variance;
    const auto parts = v_decomposition(sc, m.filter, arr.lambda, T);
    CHECK(parts.total() == doctest::Approx(v).epsilon(1e-9));
  }
  ScenarioDraw quiet;
  quiet.a.assign(T, 10.0);
  quiet.e.assign(T, 0.0);
  quiet.realized_baseload = m.mean_profile;
  const auto zero = v_decomposition(quiet, m.filter, 10.0, T);
  CHECK(zero.v1 == 0.0);
  CHECK(zero.v2 == 0.0);
  CHECK(zero.cross == 0.0);

  // One silent source leaves no cross term.
  auto only_a = sample_scenario(model(T, {1.0}, 0.0, 0.0), arr, T, 4);
  CHECK(v_decomposition(only_a, m.filter, 10.0, T).cross == 0.0);
}

TEST_CASE("expected variance equals the trace form") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int T : {1, 2, 3, 7, 20, 64}) {
    std::vector<double> f{1.0, u(gen), u(gen), u(gen)};
    const CausalFilter filter(f);
    const double s = 1.3, sigma = 0.7;
    const auto B = arrival_error_matrix(T);
    const auto C = baseload_error_matrix(T, filter);
    const double trace_form = (s * s * (B * B.transpose()).trace() +
                               sigma * sigma * (C * C.transpose()).trace()) / T;
    CHECK(expected_variance(T, s, sigma, filter) == doctest::Approx(trace_form).epsilon(1e-12));
  }
  CHECK(expected_variance(2, 1.0, 0.0, CausalFilter::identity()) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(expected_variance(2, 0.0, 1.0, CausalFilter::identity()) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(expected_variance(9, 0.0, 0.0, CausalFilter::identity()) == 0.0);
}

TEST_CASE("worst case: fast evaluation matches the double sum") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int T : {1, 2, 3, 10, 37, 200}) {
    const CausalFilter f({1.0, u(gen), u(gen), u(gen), u(gen)});
    const double e1 = 0.5 + std::abs(u(gen)), e2 = 0.5 + std::abs(u(gen));
    CHECK(worst_case_variance(T, {e1, e2}, f) ==
          doctest::Approx(prop4_direct(T, e1, e2, f)).epsilon(1e-12));
    double h = 0.0;
    for (int k = 1; k <= T; ++k) h += 1.0 / k;
    CHECK(worst_case_variance(T, {e1, e2}, f) >= e1 * e1 * (1.0 - h / T));
  }
  CHECK(worst_case_variance(2, {1.0, 0.0}, CausalFilter::identity()) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(worst_case_variance(2, {0.0, 1.0}, CausalFilter::identity()) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(worst_case_variance(5, {0.0, 0.0}, CausalFilter::identity()) == 0.0);
}

TEST_CASE("worst case: vertex enumeration of the engine") {
  for (int T : {2, 3, 5, 8}) {
    const auto m = model(T, {1.0, -0.7, 0.4}, 0.0, 0.6);
    const ArrivalModel arr{5.0, 0.0, 1.1};
    const ArrivalModel quiet{5.0, 0.0, 0.0};
    const auto m_quiet = BaseloadModel{m.mean_profile, m.filter, 0.0, 0.0};
    CAPTURE(T);
    // Each source alone: the published closed form is the exact supremum.
    CHECK(vertex_max(m_quiet, arr, true, false) ==
          doctest::Approx(worst_case_variance(T, {1.1, 0.0}, m.filter)).epsilon(1e-9));
    CHECK(vertex_max(m, quiet, false, true) ==
          doctest::Approx(worst_case_variance(T, {0.0, 0.6}, m.filter)).epsilon(1e-9));
    const double adv_a = run_valley_mpc(adversarial_scenario(m_quiet, arr, T), m_quiet, arr).variance;
    CHECK(adv_a == doctest::Approx(worst_case_variance(T, {1.1, 0.0}, m.filter)).epsilon(1e-9));
    if (T <= 5) {
      // Both sources: the supremum includes the coupling term.
      const double joint = vertex_max(m, arr, true, true);
      CHECK(joint == doctest::Approx(coupled_worst_case_variance(T, {1.1, 0.6}, m.filter)).epsilon(1e-9));
      const double adv = run_valley_mpc(adversarial_scenario(m, arr, T), m, arr).variance;
      CHECK(adv == doctest::Approx(joint).epsilon(1e-9));
      CHECK(joint >= worst_case_variance(T, {1.1, 0.6}, m.filter));
    }
  }
}

TEST_CASE("coupled worst case reduces to the closed form with one source") {
  const CausalFilter f({1.0, 0.3, -0.2});
  for (int T : {2, 7, 40}) {
    CHECK(coupled_worst_case_variance(T, {1.5, 0.0}, f) ==
          doctest::Approx(worst_case_variance(T, {1.5, 0.0}, f)).epsilon(1e-12));
    CHECK(coupled_worst_case_variance(T, {0.0, 0.8}, f) ==
          doctest::Approx(worst_case_variance(T, {0.0, 0.8}, f)).epsilon(1e-12));
    CHECK(coupled_worst_case_variance(T, {1.5, 0.8}, f) > worst_case_variance(T, {1.5, 0.8}, f));
  }
}

TEST_CASE("concentration rate") {
  CHECK(lambda1(2, CausalFilter::identity()) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lambda1(50, CausalFilter({0.0})) == doctest::Approx(std::log(50.0) / 50.0));
  for (int T : {2, 3, 10, 100}) {
    const CausalFilter f({1.0, 0.5, 0.25});
    CHECK(lambda1(T, f) == doctest::Approx(std::max(std::log(T) / T, filter_sum_direct(T, f, 1))));
    CHECK(lambda1_trace(T, f) == doctest::Approx(std::max(std::log(T) / T, filter_sum_direct(T, f, -1))));
    CHECK(lambda1_trace(T, f) <= lambda1(T, f));
  }
  CHECK_THROWS(lambda1(1, CausalFilter::identity()));
}

TEST_CASE("Bernstein tail") {
  const ErrorBounds eb{1.0, 0.5};
  CHECK(bernstein_tail(0.0, 2.0, eb, 0.3) == 1.0);
  for (double x : {0.1, 1.0, 7.0}) CHECK(bernstein_tail(2 * x, 2.0, eb, 0.3) < bernstein_tail(x, 2.0, eb, 0.3));
  CHECK(bernstein_tail(1.0, 2.0, ErrorBounds{}, 0.3) == 0.0);
  CHECK_THROWS(bernstein_tail(-1.0, 2.0, eb, 0.3));

  // Precise baseload, s = ε, dev = E V: exponent (c²/(2+c))·s²/(16ε²) at c = 1.
  const int T = 40;
  const double eps = 1.7;
  const double ev = eps * eps * std::log(double(T)) / T;
  const double l1 = std::log(double(T)) / T;
  CHECK(bernstein_tail(ev, ev, ErrorBounds{eps, 0.0}, l1) ==
        doctest::Approx(std::exp(-1.0 / 48.0)).epsilon(1e-13));
}

TEST_CASE("percentile bound inverts the tail") {
  const ErrorBounds eb{1.2, 0.4};
  const double ev = 0.8, l1 = 0.15;
  const double pb = percentile_bound(0.9, ev, eb, l1);
  CHECK(bernstein_tail(pb - ev, ev, eb, l1) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(percentile_bound(1e-12, ev, eb, l1) == doctest::Approx(ev).epsilon(1e-5));
  CHECK_THROWS(percentile_bound(1.0, ev, eb, l1));

  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const ErrorBounds b{0.1 + 3 * u(gen), 0.1 + 3 * u(gen)};
    const double e = 5 * u(gen), lam = 0.01 + u(gen), eta = 0.05 + 0.9 * u(gen);
    double lo = 0.0, hi = 1.0;
    while (bernstein_tail(hi, e, b, lam) > 1.0 - eta) hi *= 2.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (bernstein_tail(mid, e, b, lam) > 1.0 - eta ? lo : hi) = mid;
    }
    CHECK(percentile_bound(eta, e, b, lam) - e == doctest::Approx(hi).epsilon(1e-10));
  }
}

TEST_CASE("variance bound and Chebyshev") {
  CHECK(variance_upper_bound(2, {1.0, 0.0}, 1.0, 0.0, CausalFilter::identity()) ==
        doctest::Approx(std::pow(2 * std::log(2.0), 2)).epsilon(1e-14));
  CHECK(variance_upper_bound(2, {0.0, 1.0}, 0.0, 1.0, CausalFilter::identity()) ==
        doctest::Approx(16.0).epsilon(1e-14));
  CHECK(variance_upper_bound(9, {0.0, 0.0}, 1.0, 1.0, CausalFilter::identity()) == 0.0);
  CHECK(chebyshev_tail(2.0, 1.0) == 0.25);
  CHECK(chebyshev_tail(0.5, 1.0) == 1.0);
  CHECK_THROWS(chebyshev_tail(0.0, 1.0));
}

TEST_CASE("decay in the horizon") {
  std::vector<double> f(1000);
  for (int t = 0; t < 1000; ++t) f[t] = 1.0 / (1.0 + t);
  const CausalFilter filter(f);
  double prev_ev = INFINITY, prev_l1 = INFINITY, prev_vb = INFINITY;
  for (int T : {10, 100, 1000}) {
    const double ev = expected_variance(T, 1.0, 1.0, filter);
    const double l1 = lambda1(T, filter);
    const double vb = variance_upper_bound(T, {1.0, 1.0}, 1.0, 1.0, filter);
    CHECK(ev < prev_ev);
    CHECK(l1 < prev_l1);
    CHECK(vb < prev_vb);
    prev_ev = ev;
    prev_l1 = l1;
    prev_vb = vb;
  }
}

TEST_CASE("analytic report") {
  const auto m = model(24, {1.0, 0.5, 0.25}, 0.5, 0.8);
  const ArrivalModel arr{30.0, 2.0, 3.4};
  const auto r = make_analytic_report(m, arr, 11);
  CHECK(r.tail_curve.size() == 11);
  CHECK(r.tail_curve.front().bound == 1.0);
  CHECK(r.tail_curve.back().bound == doctest::Approx(1e-3).epsilon(1e-9));
  CHECK(r.percentile_bound_90 > r.expected_v);
  CHECK(r.coupled_worst_case_v >= r.worst_case_v);
  CHECK(r.lambda1 >= r.lambda1_trace);
  CHECK_THROWS(make_analytic_report(model(1, {1.0}, 0.0, 0.0), arr));
}
