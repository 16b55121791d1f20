#include <doctest.h>

#include "stempush/config.hpp"
#include "stempush/rng.hpp"
#include "stempush/rollout_log.hpp"
#include "stempush/strfmt.hpp"
#include "stempush/sync.hpp"
#include "stempush/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

using namespace stempush;

namespace {

TactileFrame frame_at(double t) { return make_frame(8, t); }

Action action_at(double t, double x = 0.0) {
  Action a;
  a.timestamp = t;
  a.pose.position.x() = x;
  return a;
}

// Exhaustive nearest-match pairing used as the oracle for synchronize().
struct OraclePair {
  double frame_t;
  double action_t;
};
std::vector<OraclePair> brute_force_sync(std::vector<double> frame_ts,
                                         std::vector<double> action_ts, double tol) {
  std::sort(frame_ts.begin(), frame_ts.end());
  std::vector<OraclePair> out;
  for (double ft : frame_ts) {
    double best = 0.0;
    double best_d = 1e300;
    for (double at : action_ts) {
      const double d = std::abs(at - ft);
      if (d < best_d - 1e-18 || (std::abs(d - best_d) <= 1e-18 && at < best)) {
        best_d = d;
        best = at;
      }
    }
    if (best_d <= tol) out.push_back({ft, best});
  }
  return out;
}

}  // namespace

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(3.0 * M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(2.0 * M_PI + 0.25) == doctest::Approx(0.25));
  for (double a = -20.0; a <= 20.0; a += 0.37) {
    const double w = wrap_angle(a);
    CHECK(w > -M_PI - 1e-15);
    CHECK(w <= M_PI + 1e-15);
    CHECK(std::abs(std::sin(w) - std::sin(a)) < 1e-12);
    CHECK(std::abs(std::cos(w) - std::cos(a)) < 1e-12);
  }
}

TEST_CASE("pose euler round-trips through the rotation matrix") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    Pose p;
    p.position = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    p.euler = Vec3(rng.uniform(-1.4, 1.4), rng.uniform(-1.4, 1.4), rng.uniform(-3.1, 3.1));
    const Pose q = pose_from_rotation(p.position, p.rotation());
    CHECK((q.rotation() - p.rotation()).norm() < 1e-9);
  }
}

TEST_CASE("rng is deterministic and splits into distinct streams") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  bool any_diff = false;
  Rng a2(42);
  for (int i = 0; i < 100; ++i) any_diff |= (a2.next_u64() != c.next_u64());
  CHECK(any_diff);

  Rng parent(7);
  Rng s1 = parent.split(1);
  Rng s2 = parent.split(2);
  Rng s1b = parent.split(1);
  bool split_diff = false;
  for (int i = 0; i < 100; ++i) {
    const uint64_t v1 = s1.next_u64();
    split_diff |= (v1 != s2.next_u64());
    CHECK(v1 == s1b.next_u64());
  }
  CHECK(split_diff);
}

TEST_CASE("rng uniform and normal have sane moments") {
  Rng rng(5);
  double sum = 0.0, sum2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(sum2 / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12).epsilon(0.05));

  double nsum = 0.0, nsum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.normal();
    nsum += g;
    nsum2 += g * g;
  }
  CHECK(nsum / n == doctest::Approx(0.0).epsilon(1.0).scale(0.05));
  CHECK(nsum2 / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("synchronize pairs dense 1 kHz actions with sub-ms skew") {
  std::vector<TactileFrame> frames = {frame_at(0.0), frame_at(1.0 / 60), frame_at(2.0 / 60)};
  std::vector<Action> actions;
  for (int i = 0; i <= 34; ++i) actions.push_back(action_at(i * 0.001));
  const SyncResult r = synchronize(frames, actions, 0.01);
  REQUIRE(r.samples.size() == 3);
  CHECK(r.dropped == 0);
  for (const auto& s : r.samples) CHECK(s.skew <= 0.0005 + 1e-12);
}

TEST_CASE("synchronize drops frames outside tolerance") {
  const SyncResult r = synchronize({frame_at(0.5)}, {action_at(0.0)}, 0.01);
  CHECK(r.samples.empty());
  CHECK(r.dropped == 1);
}

TEST_CASE("synchronize rejects an empty action stream") {
  CHECK_THROWS_AS(synchronize({frame_at(0.0)}, {}, 0.01), ValidationError);
}

TEST_CASE("synchronize matches the exhaustive pairing oracle on jittered streams") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> frame_ts, action_ts;
    const int nf = 5 + rng.uniform_int(0, 35);
    const int na = 5 + rng.uniform_int(0, 55);
    for (int i = 0; i < nf; ++i) frame_ts.push_back(rng.uniform(0.0, 1.0));
    for (int i = 0; i < na; ++i) action_ts.push_back(rng.uniform(0.0, 1.0));
    const double tol = rng.uniform(0.005, 0.08);

    std::vector<TactileFrame> frames;
    std::vector<Action> actions;
    for (double t : frame_ts) frames.push_back(frame_at(t));
    for (double t : action_ts) actions.push_back(action_at(t));

    const SyncResult got = synchronize(frames, actions, tol);
    const auto want = brute_force_sync(frame_ts, action_ts, tol);
    REQUIRE(got.samples.size() == want.size());
    CHECK(got.dropped + static_cast<int>(got.samples.size()) == nf);
    for (size_t i = 0; i < want.size(); ++i) {
      CHECK(got.samples[i].frame.timestamp == want[i].frame_t);
      CHECK(got.samples[i].action.timestamp == want[i].action_t);
    }

    // Delivery-order insensitivity: shuffle both streams, same pairing.
    std::vector<TactileFrame> frames2 = frames;
    std::vector<Action> actions2 = actions;
    for (size_t i = frames2.size(); i > 1; --i) {
      std::swap(frames2[i - 1], frames2[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    }
    for (size_t i = actions2.size(); i > 1; --i) {
      std::swap(actions2[i - 1], actions2[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    }
    const SyncResult got2 = synchronize(frames2, actions2, tol);
    REQUIRE(got2.samples.size() == got.samples.size());
    for (size_t i = 0; i < got.samples.size(); ++i) {
      CHECK(got2.samples[i].frame.timestamp == got.samples[i].frame.timestamp);
      CHECK(got2.samples[i].action.timestamp == got.samples[i].action.timestamp);
    }
  }
}

TEST_CASE("resample_actions produces floor(duration*rate)+1 samples") {
  std::vector<Action> actions;
  for (int i = 0; i <= 1000; ++i) actions.push_back(action_at(i * 0.001));
  const auto out = resample_actions(actions, 60.0);
  CHECK(out.size() == 61);
  for (size_t k = 0; k < out.size(); ++k) {
    CHECK(out[k].timestamp == doctest::Approx(k / 60.0).epsilon(1e-12));
  }
}

TEST_CASE("resample_actions keeps constant content constant") {
  std::vector<Action> actions;
  for (int i = 0; i <= 500; ++i) actions.push_back(action_at(i * 0.001, 3.25));
  for (const auto& a : resample_actions(actions, 50.0)) {
    CHECK(a.pose.position.x() == 3.25);
  }
}

TEST_CASE("resample_actions tracks a linear ramp within half a source step") {
  std::vector<Action> actions;
  for (int i = 0; i <= 1000; ++i) actions.push_back(action_at(i * 0.001, i * 0.001));
  for (const auto& a : resample_actions(actions, 60.0)) {
    CHECK(std::abs(a.pose.position.x() - a.timestamp) <= 0.0005 + 1e-12);
  }
}

TEST_CASE("resample_actions validates input") {
  CHECK_THROWS_AS(resample_actions({action_at(0.0), action_at(0.0)}, 10.0), ValidationError);
  CHECK_THROWS_AS(resample_actions({action_at(0.0), action_at(0.1)}, 100.0), ValidationError);
}

TEST_CASE("config rejects unknown keys and type changes") {
  CHECK_THROWS_WITH_AS(static_cast<void>(Config::from_json(Json{{"simm", Json::object()}})),
                       doctest::Contains("simm"), ValidationError);
  CHECK_THROWS_AS(static_cast<void>(Config::from_json(Json{{"sim", Json{{"mu_k", "soft"}}}})),
                  ValidationError);
  const Config ok = Config::from_json(Json{{"sim", Json{{"mu_k", 0.25}}}});
  CHECK(ok.num("sim.mu_k") == 0.25);
  CHECK(ok.num("sim.mu_s") == Config::defaults().num("sim.mu_s"));
}

TEST_CASE("config overrides and hashing") {
  Config cfg = Config::defaults();
  const uint64_t h0 = cfg.hash();
  cfg.apply_override("bench.gamma", "0.05");
  CHECK(cfg.num("bench.gamma") == 0.05);
  CHECK(cfg.hash() != h0);
  CHECK_THROWS_AS(cfg.apply_override("bench.nope", "1"), ValidationError);
  CHECK_THROWS_AS(cfg.apply_override("bench.gamma", "true"), ValidationError);
  cfg.apply_override("control.controller", "pd");
  CHECK(cfg.str("control.controller") == "pd");

  // Subtree hash only reacts to the named subtree.
  Config a = Config::defaults();
  Config b = Config::from_json(Json{{"bench", Json{{"gamma", 0.5}}}});
  CHECK(a.subtree_hash({"sim", "tactile"}) == b.subtree_hash({"sim", "tactile"}));
  Config c = Config::from_json(Json{{"sim", Json{{"mu_k", 0.21}}}});
  CHECK(a.subtree_hash({"sim", "tactile"}) != c.subtree_hash({"sim", "tactile"}));
}

TEST_CASE("config environment overrides") {
  ::setenv("STEMPUSH_SIM__MU_K", "0.271", 1);
  ::setenv("STEMPUSH_CONTROL__CONTROLLER", "openloop", 1);
  Config cfg = Config::defaults();
  cfg.apply_env();
  CHECK(cfg.num("sim.mu_k") == 0.271);
  CHECK(cfg.str("control.controller") == "openloop");
  ::unsetenv("STEMPUSH_SIM__MU_K");
  ::unsetenv("STEMPUSH_CONTROL__CONTROLLER");
}

TEST_CASE("shipped default config file matches the built-in defaults") {
  const Config cfg = Config::from_file(std::string(STEMPUSH_SOURCE_DIR) + "/configs/default.json");
  CHECK(cfg.tree() == Config::default_tree());
}

TEST_CASE("fmt_double round-trips exactly") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform_int(-12, 12));
    CHECK(parse_double(fmt_double(v)) == v);
  }
  CHECK(fmt_double(0.5) == "0.5");
  CHECK(fmt_int(-42) == "-42");
}

TEST_CASE("rollout log csv round-trips frame records") {
  RolloutLog log;
  log.frame_hz = 60.0;
  for (int i = 0; i < 5; ++i) {
    FrameRecord f;
    f.t = i / 60.0;
    if (i >= 2) {
      f.u_true = 0.31 + 0.01 * i;
      f.u_measured = 0.30 + 0.01 * i;
      f.in_contact = true;
      f.sticking = (i % 2) == 0;
    }
    f.ee_pose << 0.1 * i, -0.2, 0.3, 0.0, 0.0, 0.8;
    f.a_ref << 0.0, 0.02, 0.0, 0.0, 0.0, 0.0;
    f.a_res = -0.05 * i;
    f.contact_axis = Vec3(0, 0, -1);
    f.command = f.a_ref;
    f.command.tail<3>() += f.a_res * f.contact_axis;
    f.normal_force = 1.5 * i;
    f.tangential_force = -0.3 * i;
    f.comp_time_ms = 0.123;
    log.frames.push_back(f);
  }

  std::stringstream ss(log.csv());
  const ParsedFrameCsv parsed = read_frame_csv(ss);
  REQUIRE(parsed.frames.size() == log.frames.size());
  for (size_t i = 0; i < parsed.frames.size(); ++i) {
    const auto& a = parsed.frames[i];
    const auto& b = log.frames[i];
    CHECK(a.t == b.t);
    CHECK(a.u_true.has_value() == b.u_true.has_value());
    if (a.u_true) CHECK(*a.u_true == *b.u_true);
    CHECK(a.ee_pose == b.ee_pose);
    CHECK(a.a_ref == b.a_ref);
    CHECK(a.a_res == b.a_res);
    CHECK(a.command == b.command);
    CHECK(a.normal_force == b.normal_force);
    CHECK(a.in_contact == b.in_contact);
    CHECK(a.sticking == b.sticking);
    CHECK(a.comp_time_ms == 0.0);  // timings excluded by default
  }

  // With timings requested the column exists and survives parsing.
  std::stringstream st(log.csv(true));
  const ParsedFrameCsv with_t = read_frame_csv(st);
  CHECK(with_t.frames[1].comp_time_ms == 0.123);
}
