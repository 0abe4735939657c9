#include <doctest.h>

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>

#include "msense/error.hpp"
#include "msense/tracking.hpp"
#include "test_util.hpp"

using namespace msense;

namespace {

Object3D obj(const Point3& p, int cls = 0) {
  Object3D o;
  o.centroid = p;
  o.aabb.min = o.aabb.max = p;
  o.class_id = cls;
  o.confidence = 1.0;
  return o;
}

Track track_at(const Point3& p, const Point3& v = Point3::Zero(), std::int64_t id = 1) {
  Track t;
  t.id = id;
  t.state << p, v;
  t.covariance = 0.01 * TrackCovariance::Identity();
  t.hits = 1;
  return t;
}

double min_eigen(const TrackCovariance& c) {
  return Eigen::SelfAdjointEigenSolver<TrackCovariance>(c).eigenvalues().minCoeff();
}

// Exhaustive optimum with the same objective as associate(): matched distance
// plus `gate` per unmatched track or object.
double brute_force_cost(const std::vector<Track>& tracks, const std::vector<Object3D>& objs,
                        double gate) {
  const std::size_t m = objs.size();
  std::vector<int> assign(tracks.size(), -1);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::vector<bool>&, double)> rec =
      [&](std::size_t i, std::vector<bool>& used, double cost) {
        if (i == tracks.size()) {
          const auto used_n = std::count(used.begin(), used.end(), true);
          best = std::min(best, cost + gate * static_cast<double>(m - used_n));
          return;
        }
        rec(i + 1, used, cost + gate);
        for (std::size_t j = 0; j < m; ++j) {
          if (used[j] || objs[j].class_id != tracks[i].class_id) continue;
          double d = (tracks[i].position() - objs[j].centroid).norm();
          if (d > gate) continue;
          used[j] = true;
          rec(i + 1, used, cost + d);
          used[j] = false;
        }
      };
  std::vector<bool> used(m, false);
  rec(0, used, 0.0);
  return best;
}

}  // namespace

TEST_SUITE("tracking") {
  TEST_CASE("predict examples") {
    TrackerParams p;
    Track t = track_at({0, 0, 0}, {1, 0, 0});
    CHECK(predict(t, 1.0, p).position().isApprox(Point3(1, 0, 0)));
    Track same = predict(t, 0.0, p);
    CHECK(same.state == t.state);
    CHECK(same.covariance.isApprox(t.covariance));
    Track still = track_at({2, 3, 4});
    double prev = still.covariance.trace();
    for (double dt : {0.1, 0.5, 2.0}) {
      Track s = predict(still, dt, p);
      CHECK(s.position() == still.position());
      CHECK(s.covariance.trace() >= prev);
      CHECK(s.misses == still.misses);
    }
    CHECK_THROWS_AS(predict(t, -0.1, p), Error);
  }

  TEST_CASE("associate examples") {
    std::vector<Track> one = {track_at({0, 0, 0})};
    std::vector<Object3D> objs = {obj({0.1, 0, 0}), obj({5, 0, 0})};
    Association a = associate(one, objs, 1.0);
    REQUIRE(a.matches.size() == 1);
    CHECK(a.matches[0].track == 0);
    CHECK(a.matches[0].object == 0);
    CHECK(a.unmatched_objects == std::vector<std::size_t>{1});

    Association empty = associate(one, std::vector<Object3D>{}, 1.0);
    CHECK(empty.matches.empty());
    CHECK(empty.unmatched_tracks == std::vector<std::size_t>{0});

    std::vector<Track> two = {track_at({0, 0, 0}, {}, 1), track_at({1, 0, 0}, {}, 2)};
    std::vector<Object3D> crossed = {obj({0.9, 0, 0}), obj({0.1, 0, 0})};
    Association b = associate(two, crossed, 2.0);
    REQUIRE(b.matches.size() == 2);
    std::sort(b.matches.begin(), b.matches.end(),
              [](const Match& x, const Match& y) { return x.track < y.track; });
    CHECK(b.matches[0].object == 1);
    CHECK(b.matches[1].object == 0);
    CHECK(b.total_cost() == doctest::Approx(0.2));
  }

  TEST_CASE("associate respects the gate and classes and matches brute force") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> count(0, 5), cls(0, 1);
    const double gate = 1.5;
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<Track> tracks;
      std::vector<Object3D> objs;
      const int nt = count(rng), no = count(rng);
      for (int i = 0; i < nt; ++i) {
        tracks.push_back(track_at(testing::random_point(rng, -2, 2), {}, i + 1));
        tracks.back().class_id = cls(rng);
      }
      for (int j = 0; j < no; ++j) objs.push_back(obj(testing::random_point(rng, -2, 2), cls(rng)));
      Association a = associate(tracks, objs, gate);
      for (const auto& m : a.matches) {
        CHECK(m.distance <= gate);
        CHECK(tracks[m.track].class_id == objs[m.object].class_id);
      }
      CHECK(a.matches.size() + a.unmatched_tracks.size() == tracks.size());
      CHECK(a.matches.size() + a.unmatched_objects.size() == objs.size());
      const double cost = a.total_cost() + gate * static_cast<double>(a.unmatched_tracks.size() +
                                                                      a.unmatched_objects.size());
      CHECK(cost == doctest::Approx(brute_force_cost(tracks, objs, gate)).epsilon(1e-9));
    }
  }

  TEST_CASE("update examples") {
    TrackerParams p;
    Track t = track_at({1, 1, 1});
    Track u = update(t, obj({1, 1, 1}), p);
    CHECK(u.position().isApprox(t.position()));
    CHECK(u.covariance.trace() < t.covariance.trace());
    CHECK(u.hits == t.hits + 1);
    CHECK(u.misses == 0);

    Track almost = t;
    almost.hits = p.confirm_hits - 1;
    CHECK(update(almost, obj({1, 1, 1}), p).status == TrackStatus::kConfirmed);

    TrackerParams noisy = p;
    noisy.measurement_noise = 1e9;
    CHECK(kalman_gain(t, noisy).norm() < 1e-6);

    Track dead = t;
    dead.status = TrackStatus::kDeleted;
    try {
      update(dead, obj({0, 0, 0}), p);
      FAIL("expected a lifecycle error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kLifecycle);
    }
  }

  TEST_CASE("covariance stays symmetric and PSD") {
    TrackerParams p;
    std::mt19937_64 rng(32);
    Track t = track_at({0, 0, 0});
    t.covariance = TrackCovariance::Identity();
    for (int i = 0; i < 200; ++i) {
      t = predict(t, 0.1, p);
      CHECK((t.covariance - t.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(min_eigen(t.covariance) >= -1e-9);
      t = update(t, obj(testing::random_point(rng, -0.1, 0.1)), p);
      CHECK((t.covariance - t.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(min_eigen(t.covariance) >= -1e-9);
    }
  }

  TEST_CASE("repeated detection confirms exactly one track") {
    TrackerParams p;
    Tracker tr(p);
    StepResult r;
    for (int i = 0; i < p.confirm_hits; ++i) {
      std::vector<Object3D> o = {obj({1, 2, 0.9})};
      r = tr.step(o, 0.1 * i);
    }
    REQUIRE(r.tracks.size() == 1);
    CHECK(r.tracks[0].status == TrackStatus::kConfirmed);
  }

  TEST_CASE("a track is deleted after max_misses + 1 empty steps") {
    TrackerParams p;
    Tracker tr(p);
    std::vector<Object3D> o = {obj({0, 0, 0})};
    tr.step(o, 0.0);
    const std::int64_t id = tr.tracks().at(0).id;
    for (int i = 1; i <= p.max_misses; ++i) {
      StepResult r = tr.step({}, 0.1 * i);
      CHECK(r.tracks.size() == 1);
      CHECK(r.dead.empty());
    }
    StepResult last = tr.step({}, 0.1 * (p.max_misses + 1));
    CHECK(last.tracks.empty());
    CHECK(last.dead == std::vector<std::int64_t>{id});
  }

  TEST_CASE("constant velocity through a three frame gap keeps its id") {
    TrackerParams p;
    Tracker tr(p);
    std::set<std::int64_t> ids;
    for (int f = 0; f < 50; ++f) {
      const double t = 0.1 * f;
      std::vector<Object3D> o;
      if (f < 20 || f >= 23) o.push_back(obj({1.0 * t, 3.0, 0.9}));
      StepResult r = tr.step(o, t);
      for (const auto& tk : r.tracks) ids.insert(tk.id);
      CHECK(r.tracks.size() == 1);
    }
    CHECK(ids.size() == 1);
    CHECK(tr.tracks().at(0).status == TrackStatus::kConfirmed);
  }

  TEST_CASE("noise-free tracking locks on after two updates") {
    TrackerParams p;
    p.process_noise_accel = 0.0;
    p.measurement_noise = 0.0;
    Tracker tr(p);
    const Point3 v(0.7, -0.4, 0.1);
    for (int f = 0; f < 6; ++f) {
      const double t = 0.1 * f;
      if (f >= 2) {
        Track pred = predict(tr.tracks().at(0), 0.1, p);
        CHECK((pred.position() - v * t).norm() < 1e-6);
      }
      std::vector<Object3D> o = {obj(v * t)};
      tr.step(o, t);
    }
  }

  TEST_CASE("ids are unique and born/dead are disjoint") {
    std::mt19937_64 rng(33);
    TrackerParams p;
    Tracker tr(p);
    std::set<std::int64_t> seen_born;
    for (int f = 0; f < 100; ++f) {
      std::vector<Object3D> o;
      for (int i = 0; i < static_cast<int>(rng() % 4); ++i) o.push_back(obj(testing::random_point(rng, -5, 5)));
      StepResult r = tr.step(o, 0.1 * f);
      for (auto id : r.born) {
        CHECK(seen_born.insert(id).second);
        CHECK(std::find(r.dead.begin(), r.dead.end(), id) == r.dead.end());
      }
      CHECK(std::is_sorted(r.tracks.begin(), r.tracks.end(),
                           [](const Track& a, const Track& b) { return a.id < b.id; }));
    }
  }

  TEST_CASE("decreasing timestamps are an ordering error") {
    Tracker tr;
    tr.step({}, 1.0);
    try {
      tr.step({}, 0.5);
      FAIL("expected an ordering error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kOrdering);
    }
  }

  TEST_CASE("solve_assignment on a small matrix") {
    Eigen::MatrixXd c(3, 3);
    c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
    std::vector<int> a = solve_assignment(c);
    double total = 0;
    for (int i = 0; i < 3; ++i) total += c(i, a[i]);
    CHECK(total == doctest::Approx(5.0));
  }
}
