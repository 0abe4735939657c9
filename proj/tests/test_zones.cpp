#include <doctest.h>

#include "msense/error.hpp"
#include "msense/zones.hpp"

using namespace msense;

namespace {

Zone unit_square(bool alarm = false) {
  return {"sq", {{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 0.0, 2.0, alarm};
}

Track at(std::int64_t id, const Point3& p) {
  Track t;
  t.id = id;
  t.state.head<3>() = p;
  t.status = TrackStatus::kConfirmed;
  return t;
}

std::vector<Event> feed(ZoneMonitor& m, std::int64_t id, std::initializer_list<Point3> path) {
  std::vector<Event> out;
  int f = 0;
  for (const auto& p : path) {
    std::vector<Track> snap = {at(id, p)};
    auto ev = m.step(snap, 0.1 * ++f);
    out.insert(out.end(), ev.begin(), ev.end());
  }
  return out;
}

const Point3 kIn(0.5, 0.5, 1.0);
const Point3 kOut(1.5, 0.5, 1.0);

}  // namespace

TEST_SUITE("zones") {
  TEST_CASE("containment examples") {
    Zone z = unit_square();
    CHECK(zone_contains(z, {0.5, 0.5, 1}));
    CHECK_FALSE(zone_contains(z, {1.5, 0.5, 1}));
    CHECK_FALSE(zone_contains(z, {0.5, 0.5, 2.0}));
    CHECK(zone_contains(z, {0.5, 0.5, 0.0}));
    CHECK(zone_contains(z, {1.0, 1.0, 1.0}));
    CHECK(zone_contains(z, {0.0, 0.5, 1.0}));
  }

  TEST_CASE("footprint validation") {
    CHECK_NOTHROW(unit_square().validate());
    Zone cw{"cw", {{0, 0}, {0, 1}, {1, 1}, {1, 0}}, 0, 2, false};
    CHECK_THROWS_AS(cw.validate(), Error);
    Zone line{"line", {{0, 0}, {1, 0}, {2, 0}}, 0, 2, false};
    CHECK_THROWS_AS(line.validate(), Error);
    Zone concave{"c", {{0, 0}, {2, 0}, {1, 0.5}, {2, 2}, {0, 2}}, 0, 2, false};
    CHECK_THROWS_AS(concave.validate(), Error);
    Zone flat = unit_square();
    flat.z_max = flat.z_min;
    CHECK_THROWS_AS(flat.validate(), Error);
    Zone two{"two", {{0, 0}, {1, 0}}, 0, 2, false};
    CHECK_THROWS_AS(two.validate(), Error);
  }

  TEST_CASE("in for two frames then out for two frames") {
    ZoneMonitor m({unit_square()});
    std::vector<Event> ev;
    for (int f = 1; f <= 4; ++f) {
      std::vector<Track> snap = {at(1, f <= 2 ? kIn : kOut)};
      for (auto& e : m.step(snap, f)) ev.push_back(e);
    }
    REQUIRE(ev.size() == 2);
    CHECK(ev[0].kind == EventKind::kZoneEntry);
    CHECK(ev[0].timestamp == 2.0);
    CHECK(ev[1].kind == EventKind::kZoneExit);
    CHECK(ev[1].timestamp == 4.0);
    CHECK(ev[0].ref_id == "sq");
    CHECK(ev[0].track_id == 1);
  }

  TEST_CASE("single frame flicker is absorbed") {
    ZoneMonitor m({unit_square()});
    CHECK(feed(m, 1, {kIn, kOut, kIn, kOut, kIn, kOut, kIn, kOut}).empty());
  }

  TEST_CASE("never inside means no events") {
    ZoneMonitor m({unit_square()});
    CHECK(feed(m, 1, {kOut, kOut, kOut, {5, 5, 1}}).empty());
  }

  TEST_CASE("alarm flag and occupants") {
    ZoneMonitor m({unit_square(true)});
    auto ev = feed(m, 7, {kIn, kIn});
    REQUIRE(ev.size() == 1);
    CHECK_FALSE(m.is_alarm(ev[0]));
    CHECK(m.occupants().at("sq") == std::vector<std::int64_t>{7});
    auto out = feed(m, 7, {kOut, kOut});
    REQUIRE(out.size() == 1);
    CHECK(m.is_alarm(out[0]));
    CHECK(m.occupants().at("sq").empty());
  }

  TEST_CASE("entries and exits alternate per track and zone") {
    ZoneMonitor m({unit_square()});
    auto ev = feed(m, 3, {kIn, kIn, kOut, kIn, kIn, kOut, kOut, kIn, kIn, kIn, kOut, kOut});
    REQUIRE(ev.size() == 4);
    for (std::size_t i = 0; i < ev.size(); ++i) {
      CHECK(ev[i].kind == (i % 2 == 0 ? EventKind::kZoneEntry : EventKind::kZoneExit));
    }
  }
}
