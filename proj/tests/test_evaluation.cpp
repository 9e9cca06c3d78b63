#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "poleloc/evaluation.hpp"
#include "poleloc/random.hpp"
#include "test_helpers.hpp"

using namespace poleloc;

namespace {

PoleMap map_of(std::initializer_list<Point2> centers) {
  PoleMap map;
  for (const Point2& c : centers) map.poles.push_back({c.x, c.y, 0.2, 1});
  return map;
}

/// Reference matcher: sort every in-bound pair, accept greedily.
MatchReport oracle_match(const PoleMap& detected, const PoleMap& truth,
                         double max_dist) {
  struct P {
    double d;
    std::size_t i, j;
  };
  std::vector<P> pairs;
  for (std::size_t i = 0; i < detected.poles.size(); ++i)
    for (std::size_t j = 0; j < truth.poles.size(); ++j) {
      const double d = std::hypot(detected.poles[i].x - truth.poles[j].x,
                                  detected.poles[i].y - truth.poles[j].y);
      if (d <= max_dist) pairs.push_back({d, i, j});
    }
  std::sort(pairs.begin(), pairs.end(), [](const P& a, const P& b) {
    return std::tie(a.d, a.i, a.j) < std::tie(b.d, b.i, b.j);
  });
  std::vector<bool> iu(detected.poles.size()), ju(truth.poles.size());
  MatchReport r;
  for (const P& p : pairs) {
    if (iu[p.i] || ju[p.j]) continue;
    iu[p.i] = ju[p.j] = true;
    r.true_positives++;
    r.match_distances.push_back(p.d);
  }
  r.false_positives = static_cast<int>(detected.poles.size()) - r.true_positives;
  r.false_negatives = static_cast<int>(truth.poles.size()) - r.true_positives;
  return r;
}

std::vector<TimedPose> timed(std::initializer_list<TimedPose> poses) {
  return poses;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("identical maps match perfectly") {
  const PoleMap m = map_of({{1, 1}, {5, -2}, {-3, 4}});
  const auto r = match_poles(m, m, 1.0);
  CHECK(r.true_positives == 3);
  CHECK(r.false_positives == 0);
  CHECK(r.false_negatives == 0);
  for (double d : r.match_distances) CHECK(d == 0.0);
}

TEST_CASE("empty detections: all truth missed, precision defined as 0") {
  const PoleMap truth = map_of({{1, 1}, {5, -2}});
  const auto r = match_poles(PoleMap{}, truth, 1.0);
  CHECK(r.true_positives == 0);
  CHECK(r.false_negatives == 2);
  const auto m = prf1(r);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
}

TEST_CASE("matching agrees with the sort-all-pairs oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    PoleMap det, truth;
    const int nd = static_cast<int>(rng.uniform01() * 20);
    const int nt = static_cast<int>(rng.uniform01() * 20);
    for (int i = 0; i < nd; ++i)
      det.poles.push_back({rng.uniform(-10, 10), rng.uniform(-10, 10), 0.2, 1});
    for (int i = 0; i < nt; ++i)
      truth.poles.push_back(
          {rng.uniform(-10, 10), rng.uniform(-10, 10), 0.2, 1});
    const double max_dist = rng.uniform(0.3, 3.0);

    const auto a = match_poles(det, truth, max_dist);
    const auto b = oracle_match(det, truth, max_dist);
    CHECK(a.true_positives == b.true_positives);
    CHECK(a.false_positives == b.false_positives);
    CHECK(a.false_negatives == b.false_negatives);
    REQUIRE(a.match_distances.size() == b.match_distances.size());
    for (std::size_t i = 0; i < a.match_distances.size(); ++i)
      CHECK(a.match_distances[i] == doctest::Approx(b.match_distances[i]));

    // TP is symmetric, FP/FN swap
    const auto s = match_poles(truth, det, max_dist);
    CHECK(s.true_positives == a.true_positives);
    CHECK(s.false_positives == a.false_negatives);
    CHECK(s.false_negatives == a.false_positives);

    // one-to-one: TP bounded by both sides
    CHECK(a.true_positives <= std::min(nd, nt));
  }
}

TEST_CASE("prf1 on hand-computed counts") {
  MatchReport r;
  r.true_positives = 1;
  const auto perfect = prf1(r);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  MatchReport r2;
  r2.true_positives = 2;
  r2.false_positives = 1;
  r2.false_negatives = 3;
  const auto m = prf1(r2);
  CHECK(m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.recall == doctest::Approx(2.0 / 5.0));
  CHECK(m.f1 == doctest::Approx(0.5));
}

TEST_CASE("f1 is the harmonic mean whenever defined") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    MatchReport r;
    r.true_positives = 1 + static_cast<int>(rng.uniform01() * 50);
    r.false_positives = static_cast<int>(rng.uniform01() * 50);
    r.false_negatives = static_cast<int>(rng.uniform01() * 50);
    const auto m = prf1(r);
    REQUIRE(m.precision > 0.0);
    REQUIRE(m.recall > 0.0);
    CHECK(m.f1 ==
          doctest::Approx(2.0 / (1.0 / m.precision + 1.0 / m.recall)));
  }
}

TEST_CASE("trajectory errors: exact estimate gives zeros") {
  const auto truth = timed({{0.0, {0, 0, 0}},
                            {1.0, {1, 0, 0.1}},
                            {2.0, {2, 0, 0.2}}});
  const auto e = trajectory_errors(truth, truth);
  CHECK(e.mean_pos == 0.0);
  CHECK(e.rmse_pos == 0.0);
  CHECK(e.mean_ang_deg == 0.0);
  CHECK(e.rmse_ang_deg == 0.0);
  CHECK(e.samples == 3);
}

TEST_CASE("constant lateral offset: mean equals rmse equals the offset") {
  std::vector<TimedPose> truth, est;
  for (int i = 0; i <= 10; ++i) {
    truth.push_back({static_cast<double>(i), {i * 1.0, 0.0, 0.0}});
    est.push_back({static_cast<double>(i), {i * 1.0, 1.0, 0.0}});
  }
  const auto e = trajectory_errors(est, truth);
  CHECK(e.mean_pos == doctest::Approx(1.0));
  CHECK(e.rmse_pos == doctest::Approx(1.0));
  CHECK(e.mean_ang_deg == doctest::Approx(0.0));
}

TEST_CASE("interpolated truth with injected errors matches recomputation") {
  Rng rng(11);
  std::vector<TimedPose> truth;
  for (int i = 0; i <= 50; ++i)
    truth.push_back({i * 0.5,
                     {i * 1.0, std::sin(i * 0.2), normalize_angle(i * 0.05)}});

  std::vector<TimedPose> est;
  std::vector<double> pos_errors, ang_errors;
  for (int i = 0; i < 40; ++i) {
    // off-grid timestamps force interpolation
    const double t = rng.uniform(0.01, 24.9);
    // reference interpolation (independent implementation)
    const int k = static_cast<int>(t / 0.5);
    const double f = (t - truth[k].timestamp) /
                     (truth[k + 1].timestamp - truth[k].timestamp);
    Pose2D ref;
    ref.x = truth[k].pose.x + f * (truth[k + 1].pose.x - truth[k].pose.x);
    ref.y = truth[k].pose.y + f * (truth[k + 1].pose.y - truth[k].pose.y);
    ref.theta = normalize_angle(
        truth[k].pose.theta +
        f * angle_diff(truth[k + 1].pose.theta, truth[k].pose.theta));

    const double dx = rng.uniform(-0.5, 0.5);
    const double dy = rng.uniform(-0.5, 0.5);
    const double dth = rng.uniform(-0.3, 0.3);
    est.push_back({t, {ref.x + dx, ref.y + dy,
                       normalize_angle(ref.theta + dth)}});
    pos_errors.push_back(std::hypot(dx, dy));
    ang_errors.push_back(std::abs(rad_to_deg(dth)));
  }
  std::sort(est.begin(), est.end(),
            [](const TimedPose& a, const TimedPose& b) {
              return a.timestamp < b.timestamp;
            });
  std::sort(pos_errors.begin(), pos_errors.end());
  std::sort(ang_errors.begin(), ang_errors.end());

  const auto e = trajectory_errors(est, truth);
  double sp = 0, sp2 = 0, sa = 0, sa2 = 0;
  for (double p : pos_errors) {
    sp += p;
    sp2 += p * p;
  }
  for (double a : ang_errors) {
    sa += a;
    sa2 += a * a;
  }
  const double n = static_cast<double>(pos_errors.size());
  CHECK(e.mean_pos == doctest::Approx(sp / n).epsilon(1e-9));
  CHECK(e.rmse_pos == doctest::Approx(std::sqrt(sp2 / n)).epsilon(1e-9));
  CHECK(e.mean_ang_deg == doctest::Approx(sa / n).epsilon(1e-9));
  CHECK(e.rmse_ang_deg == doctest::Approx(std::sqrt(sa2 / n)).epsilon(1e-9));
}

TEST_CASE("heading errors live in [0, 180] degrees") {
  std::vector<TimedPose> truth{{0.0, {0, 0, deg_to_rad(179)}},
                               {1.0, {1, 0, deg_to_rad(179)}}};
  std::vector<TimedPose> est{{0.5, {0.5, 0, deg_to_rad(-179)}}};
  const auto e = trajectory_errors(est, truth);
  CHECK(e.mean_ang_deg == doctest::Approx(2.0).epsilon(1e-9));  // wrap, not 358
}

TEST_CASE("disjoint time ranges are an error") {
  const auto truth = timed({{0.0, {0, 0, 0}}, {1.0, {1, 0, 0}}});
  const auto est = timed({{5.0, {0, 0, 0}}, {6.0, {1, 0, 0}}});
  CHECK_THROWS_AS(trajectory_errors(est, truth), FormatError);
  CHECK_THROWS_AS(trajectory_errors({}, truth), FormatError);
}

TEST_CASE("report renderings carry all fields") {
  MatchReport r;
  r.true_positives = 2;
  r.false_positives = 1;
  r.false_negatives = 3;
  const std::string rep = extraction_report(r);
  CHECK(rep.find("precision 0.666666667") != std::string::npos);
  CHECK(rep.find("recall 0.4") != std::string::npos);
  CHECK(rep.find("f1 0.5") != std::string::npos);
  const std::string csv = extraction_csv_row(r, true);
  CHECK(csv.find("tp,fp,fn") != std::string::npos);
  CHECK(csv.find("2,1,3,") != std::string::npos);

  TrajectoryErrors e;
  e.mean_pos = 0.25;
  e.rmse_pos = 0.5;
  e.mean_ang_deg = 1.0;
  e.rmse_ang_deg = 2.0;
  e.samples = 7;
  CHECK(trajectory_report(e).find("rmse_pos_m 0.5") != std::string::npos);
  CHECK(trajectory_csv_row(e, false).find("7,0.25,0.5,1,2") !=
        std::string::npos);
}

}  // TEST_SUITE
