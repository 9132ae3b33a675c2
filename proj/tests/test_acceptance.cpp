// Acceptance suite: end-to-end checks of the angle estimator, the tracker,
// the metrics, and the CLI against the synthetic ground-truth oracle. Each
// test prints one PASS/FAIL line.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <optional>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "camot/metrics.hpp"
#include "camot/pipeline.hpp"

using namespace camot;
namespace fs = std::filesystem;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class Acceptance : public ::testing::Test {
protected:
  void label(int num, const std::string& what) {
    num_ = num;
    what_ = what;
  }
  void TearDown() override {
    std::printf("[CRITERION %2d] %s -- %s\n", num_, HasFailure() ? "FAIL" : "PASS",
                what_.c_str());
    std::fflush(stdout);
  }

private:
  int num_ = 0;
  std::string what_;
};

// Scene family for the angle criteria: the 50 mm camera of the run defaults,
// mounted higher as the viewing angle steepens.
double mount_height(double theta_deg) {
  if (theta_deg <= 5.0) return 1.8;
  if (theta_deg <= 15.0) return 6.0;
  if (theta_deg <= 30.0) return 10.0;
  if (theta_deg <= 45.0) return 15.0;
  return 20.0;
}

synth::SceneSpec angle_scene(double theta_deg, double noise, unsigned seed) {
  synth::SceneSpec spec;
  spec.cam = CameraIntrinsics::from_focal_mm(50.0, 1920, 1080);
  spec.theta_star = deg2rad(theta_deg);
  spec.cam_height = mount_height(theta_deg);
  spec.n_objects = 25;
  spec.n_frames = 60;
  spec.fps = 30.0;
  spec.noise = noise;
  spec.seed = seed;
  spec.motion = synth::MotionModel::linear;
  return spec;
}

std::vector<BBox> select_frame_boxes(const std::vector<BBox>& dets, const CameraIntrinsics& cam,
                                     int n_plane) {
  std::vector<BBox> out;
  for (int i : select_boxes(dets, cam, n_plane)) out.push_back(dets[static_cast<size_t>(i)]);
  return out;
}

} // namespace

TEST_F(Acceptance, C01_AngleRecovery) {
  label(1, "smoothed angle within 2 deg (noiseless) / 4 deg (1 px jitter) after warm-up");
  for (const double theta_deg : {5.0, 15.0, 30.0, 45.0, 60.0}) {
    for (const double noise : {0.0, 1.0}) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto spec = angle_scene(theta_deg, noise, 11);
      const auto frames = synth::project_scene(synth::generate_scene(spec));

      EstimatorConfig cfg;
      cfg.fps = spec.fps;
      AngleHistory hist(cfg.window());
      std::optional<FrameGeometry> prev;
      const double tol = noise > 0.0 ? 4.0 : 2.0;
      for (const auto& f : frames) {
        const FrameGeometry g = estimate_frame(f.frame, f.detections, spec.cam, cfg,
                                               prev ? &*prev : nullptr, hist);
        if (f.frame > 15) {
          EXPECT_LT(std::abs(rad2deg(g.theta) - theta_deg), tol)
              << "theta*=" << theta_deg << " noise=" << noise << " frame=" << f.frame;
        }
        prev = g;
      }
      EXPECT_LT(seconds_since(t0), 5.0) << "scene runtime budget";
    }
  }
}

TEST_F(Acceptance, C02_ErrorAtTruth) {
  label(2, "composite error below tau_eps = 1e-4 at the generating angle, every frame");
  EstimatorConfig cfg; // default weights 0.6 / 0.3 / 0.1
  int frames_checked = 0;
  for (const double theta_deg : {5.0, 15.0, 30.0, 45.0, 60.0}) {
    const auto spec = angle_scene(theta_deg, 0.0, 23);
    const auto frames = synth::project_scene(synth::generate_scene(spec));
    for (const auto& f : frames) {
      const auto boxes = select_frame_boxes(f.detections, spec.cam, cfg.n_plane);
      if (boxes.size() < 3) continue;
      const auto r = angle_error(spec.theta_star, boxes, spec.cam, cfg);
      EXPECT_LT(r.eps, 1e-4) << "theta*=" << theta_deg << " frame=" << f.frame;
      ++frames_checked;
    }
  }
  EXPECT_GE(frames_checked, 250);
}

TEST_F(Acceptance, C03_DepthRoundTrip) {
  label(3, "exact lift recovers ground truth; closed-form mode within 5% of exact");
  for (const double theta_deg : {5.0, 15.0, 30.0, 45.0, 60.0}) {
    const auto spec = angle_scene(theta_deg, 0.0, 7);
    const auto frames = synth::project_scene(synth::generate_scene(spec));
    double worst_exact = 0.0, worst_exact_rel = 0.0, worst_gap = 0.0;
    for (const auto& f : frames) {
      for (size_t i = 0; i < f.detections.size(); ++i) {
        const auto& det = f.detections[i];
        const LiftedObject le =
            lift_detection(det, spec.theta_star, spec.cam, spec.H, LiftMode::exact);
        const LiftedObject lp =
            lift_detection(det, spec.theta_star, spec.cam, spec.H, LiftMode::paper);
        for (const auto& g : f.gt.objects) {
          if (g.id != f.det_object_ids[i]) continue;
          const double err = (le.centroid.vec() - g.centroid.vec()).norm();
          worst_exact = std::max(worst_exact, err);
          worst_exact_rel = std::max(worst_exact_rel, err / g.centroid.z);
        }
        worst_gap = std::max(worst_gap,
                             (le.centroid.vec() - lp.centroid.vec()).norm() / le.centroid.z);
      }
    }
    // Exact mode recovers the generating cylinder everywhere, which covers
    // both the central-column 1e-6 clause and the 2%-of-depth clause.
    EXPECT_LT(worst_exact, 1e-6) << "theta*=" << theta_deg;
    EXPECT_LT(worst_exact_rel, 0.02) << "theta*=" << theta_deg;
    EXPECT_LT(worst_gap, 0.05) << "theta*=" << theta_deg;
  }
}

TEST_F(Acceptance, C04_AssumedHeightInvariance) {
  label(4, "optimizer's angle unchanged within 1e-6 rad under scaling of the assumed height");
  synth::SceneSpec spec = angle_scene(23.7, 0.0, 5);
  spec.n_frames = 1;
  const auto frames = synth::project_scene(synth::generate_scene(spec));
  EstimatorConfig cfg;
  cfg.tau_eps = 1e-12; // run both searches to full convergence
  cfg.simplex_tol = 1e-9;
  cfg.max_iters = 300;
  const auto boxes = select_frame_boxes(frames[0].detections, spec.cam, cfg.n_plane);
  ASSERT_GE(boxes.size(), 3u);

  EstimatorConfig base = cfg;
  base.H = 1.7;
  const double theta_ref = optimize_angle(boxes, spec.cam, base, 0.0).theta;
  EXPECT_LT(std::abs(theta_ref - spec.theta_star), deg2rad(0.1));
  for (const double s : {0.5, 2.0, 3.0, 10.0}) {
    EstimatorConfig scaled = cfg;
    scaled.H = 1.7 * s;
    const double theta_s = optimize_angle(boxes, spec.cam, scaled, 0.0).theta;
    EXPECT_LT(std::abs(theta_s - theta_ref), 1e-6) << "scale " << s;
  }
}

TEST_F(Acceptance, C05_DegeneracyIdentities) {
  label(5, "angle-aware similarity at 90 deg equals DIoU exactly; factor at 0 deg is 2");
  EXPECT_DOUBLE_EQ(angle_factor(0.0), 2.0);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> upos(0.0, 1800.0), usz(5.0, 400.0);
  for (int i = 0; i < 10000; ++i) {
    const BBox a{upos(rng), upos(rng), usz(rng), usz(rng), 0.9};
    const BBox b{upos(rng), upos(rng), usz(rng), usz(rng), 0.9};
    ASSERT_EQ(angle_aware_similarity(a, b, kPi / 2.0), diou(a, b));
  }
}

namespace {

// Criterion 6 fixture: one pedestrian walks away from the camera (Z = 5 m to
// 15 m) while another approaches on a neighboring lane (15 m to 5 m), passing
// mid-sequence. Background pairs meet at adjacent depths and turn around,
// which is where constant-velocity predictions overshoot and vertical
// mis-association becomes possible.
struct CrossingScenario {
  std::map<long, std::vector<BBox>> dets;
  std::vector<io::TrackRow> gt;
};

CrossingScenario crossing_scenario(unsigned seed) {
  synth::SceneSpec base;
  base.cam = CameraIntrinsics::from_focal_mm(18.75, 1920, 1080); // f_px = 1000
  base.theta_star = deg2rad(30.0);
  base.cam_height = 2.0;
  base.n_objects = 2;
  base.n_frames = 84; // one phase; the scenario spans two
  base.fps = 30.0;
  base.noise = 1.5;
  base.motion = synth::MotionModel::crossing;
  const double th = base.theta_star;
  const double h = base.cam_height;
  const double T_total = 2.0 * base.n_frames - 1.0;

  std::mt19937_64 rng(seed * 7919 + 13);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  synth::World w1;
  w1.spec = base;
  w1.spec.seed = seed;
  {
    synth::WorldObject a, b;
    const double g_near = (5.0 - h * std::sin(th)) / std::cos(th);
    const double g_far = (15.0 - h * std::sin(th)) / std::cos(th);
    a.id = 1;
    a.x0 = -0.25;
    a.g0 = g_near;
    a.vg = (g_far - g_near) / T_total;
    b.id = 2;
    b.x0 = 0.25;
    b.g0 = g_far;
    b.vg = (g_near - g_far) / T_total;
    w1.objects.push_back(a);
    w1.objects.push_back(b);

    int id = 3;
    const double TT = base.n_frames - 1.0;
    for (int p = 0; p < 7; ++p) {
      const double gbase = 6.0 + 8.0 * p / 6.0 + 0.8 * (u01(rng) - 0.5);
      const double dg = 0.85 + 0.30 * u01(rng);
      const double z1 = h * std::sin(th) + gbase * std::cos(th);
      const double span = (0.50 + 0.12 * u01(rng)) * (0.5 * base.cam.width / base.cam.f_px) * z1;
      const double phase = (u01(rng) - 0.5) * 0.15 * span;
      synth::WorldObject wa, wb;
      wa.id = id++;
      wa.g0 = gbase;
      wa.x0 = -span + phase;
      wa.vx = span / TT;
      wb.id = id++;
      wb.g0 = gbase + dg;
      wb.x0 = span + phase;
      wb.vx = -span / TT;
      w1.objects.push_back(wa);
      w1.objects.push_back(wb);
    }
  }
  // Second phase: everyone advanced one phase; the background pairs turn back.
  synth::World w2 = w1;
  w2.spec.seed = seed ^ 0xabcdef12345678ULL;
  for (auto& o : w2.objects) {
    o.x0 = o.x(base.n_frames);
    o.g0 = o.g(base.n_frames);
    if (o.id > 2) {
      o.vx = -o.vx;
      o.vg = -o.vg;
    }
  }

  CrossingScenario out;
  long frame = 0;
  for (const auto& phase_frames : {synth::project_scene(w1), synth::project_scene(w2)}) {
    for (const auto& f : phase_frames) {
      ++frame;
      out.dets[frame] = f.detections;
      for (const auto& o : f.gt.objects) {
        if (o.visible) out.gt.push_back({frame, o.id, o.box});
      }
    }
  }
  return out;
}

long run_crossing(const CrossingScenario& sc, bool ablated) {
  io::RunConfig cfg;
  cfg.cam = CameraIntrinsics::from_focal_mm(18.75, 1920, 1080);
  if (ablated) {
    cfg.trk.use_angle_aware = false; // phi forced to 1
    cfg.trk.use_depth = false;       // inverse-depth channel frozen
  }
  const auto run = pipeline::run_track(sc.dets, cfg);
  std::vector<io::TrackRow> pred;
  for (const auto& r : run.results) pred.push_back({r.frame, r.id, r.box});
  return metrics::clear_mot(sc.gt, pred).idsw;
}

} // namespace

TEST_F(Acceptance, C06_TrackingBenefit) {
  label(6, "angle-aware + depth tracker never worse on switches over 20 seeded crossings");
  const auto t0 = std::chrono::steady_clock::now();
  long total_full = 0, total_ablated = 0;
  int strict = 0;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const CrossingScenario sc = crossing_scenario(seed);
    const long f = run_crossing(sc, false);
    const long a = run_crossing(sc, true);
    total_full += f;
    total_ablated += a;
    if (f < a) ++strict;
  }
  std::printf("    crossing suite: IDSw full=%ld ablated=%ld, strict improvements=%d\n",
              total_full, total_ablated, strict);
  EXPECT_LE(total_full, total_ablated);
  EXPECT_GE(strict, 1);
  EXPECT_LT(seconds_since(t0), 60.0);
}

namespace {

// Exhaustive IDF1 over injections of ground-truth ids onto prediction ids.
double idf1_bijection_oracle(const std::vector<io::TrackRow>& gt,
                             const std::vector<io::TrackRow>& pred, double gate = 0.5) {
  std::map<long, std::vector<io::TrackRow>> gtf, prf;
  for (const auto& r : gt) gtf[r.frame].push_back(r);
  for (const auto& r : pred) prf[r.frame].push_back(r);
  std::map<std::pair<int, int>, long> overlap;
  std::set<int> gset, pset;
  long total_gt = 0, total_pred = 0;
  for (const auto& [f, G] : gtf) {
    total_gt += static_cast<long>(G.size());
    for (const auto& g : G) gset.insert(g.id);
    const auto it = prf.find(f);
    if (it == prf.end()) continue;
    for (const auto& g : G)
      for (const auto& p : it->second)
        if (iou(g.box, p.box) >= gate) ++overlap[{g.id, p.id}];
  }
  for (const auto& [f, P] : prf) {
    total_pred += static_cast<long>(P.size());
    for (const auto& p : P) pset.insert(p.id);
  }
  const std::vector<int> gids(gset.begin(), gset.end());
  std::vector<int> pids(pset.begin(), pset.end());
  while (pids.size() < gids.size()) pids.push_back(-1000 - static_cast<int>(pids.size()));
  std::sort(pids.begin(), pids.end());
  long best = 0;
  do {
    long s = 0;
    for (size_t i = 0; i < gids.size(); ++i) {
      const auto it = overlap.find({gids[i], pids[i]});
      if (it != overlap.end()) s += it->second;
    }
    best = std::max(best, s);
  } while (std::next_permutation(pids.begin(), pids.end()));
  const long den = total_gt + total_pred;
  return den > 0 ? 2.0 * static_cast<double>(best) / static_cast<double>(den) : 1.0;
}

} // namespace

TEST_F(Acceptance, C07_MetricsCorrectness) {
  label(7, "CLEAR-MOT and IDF1 match hand-traced values and the bijection oracle");
  // Hand-traced toy: two objects over four frames, one mid-sequence id change.
  std::vector<io::TrackRow> gt, pred;
  const auto box_at = [](double x, double y) { return BBox{x, y, 10, 20, 1.0}; };
  for (long f = 1; f <= 4; ++f) {
    gt.push_back({f, 1, box_at(100, 100)});
    gt.push_back({f, 2, box_at(300, 100)});
    pred.push_back({f, 11, box_at(100, 100)});
    pred.push_back({f, f <= 2 ? 12 : 13, box_at(300, 100)});
  }
  const auto rep = metrics::evaluate(gt, pred);
  EXPECT_EQ(rep.idsw, 1);
  EXPECT_EQ(rep.fp, 0);
  EXPECT_EQ(rep.fn, 0);
  EXPECT_NEAR(rep.mota, 1.0 - 1.0 / 8.0, 1e-12);
  // IDF1 by exhaustive bijection: 1->11 keeps 4 frames, 2->{12 or 13} keeps 2.
  EXPECT_NEAR(rep.idf1, 2.0 * 6.0 / 16.0, 1e-12);
  EXPECT_NEAR(rep.idf1, idf1_bijection_oracle(gt, pred), 1e-12);

  // Randomized small instances (at most 5 identities per side) against the
  // exhaustive oracle.
  std::mt19937_64 rng(71);
  std::uniform_int_distribution<int> unids(1, 5), uframes(3, 7), umiss(0, 4);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<io::TrackRow> g2, p2;
    const int n_gt = unids(rng), n_pred = unids(rng), frames = uframes(rng);
    for (long f = 1; f <= frames; ++f) {
      for (int i = 0; i < n_gt; ++i) {
        if (umiss(rng) == 0) continue;
        g2.push_back({f, i + 1, box_at(200.0 * i, 100.0)});
      }
      for (int j = 0; j < n_pred; ++j) {
        if (umiss(rng) == 0) continue;
        p2.push_back({f, 100 + j, box_at(200.0 * (j % n_gt), 100.0)});
      }
    }
    EXPECT_NEAR(metrics::idf1(g2, p2).idf1, idf1_bijection_oracle(g2, p2), 1e-12)
        << "trial " << trial;
  }

  // Perfect prediction sanity.
  const auto perfect = metrics::evaluate(gt, gt);
  EXPECT_NEAR(perfect.mota, 1.0, 1e-12);
  EXPECT_NEAR(perfect.idf1, 1.0, 1e-12);
}

TEST_F(Acceptance, C08_OptimizerSanity) {
  label(8, "Nelder-Mead reaches the quadratic minimum within 1e-4 in at most 60 evaluations");
  NelderMeadOptions opt;
  opt.lo = 0.0;
  opt.hi = kPi / 2.0 - 0.01;
  opt.tau_eps = 0.0;
  opt.simplex_tol = 1e-6;
  opt.max_iters = 100;
  const auto r = nelder_mead_1d([](double x) { return (x - 0.4) * (x - 0.4); }, 0.0, opt);
  EXPECT_NEAR(r.x, 0.4, 1e-4);
  EXPECT_LE(r.evaluations, 60);
  std::printf("    quadratic: x=%.8f after %d evaluations\n", r.x, r.evaluations);
}

TEST_F(Acceptance, C09_ThroughputProxy) {
  label(9, "angle estimation + tracking under 10 ms per frame with 40 detections");
  synth::SceneSpec spec;
  spec.cam = CameraIntrinsics::from_focal_mm(18.75, 1920, 1080);
  spec.theta_star = deg2rad(25.0);
  spec.cam_height = 6.0;
  spec.n_objects = 44; // about 40 visible detections per frame
  spec.n_frames = 600;
  spec.fps = 30.0;
  spec.noise = 0.5;
  spec.seed = 31;
  spec.motion = synth::MotionModel::linear;
  const auto frames = synth::project_scene(synth::generate_scene(spec));

  io::RunConfig cfg;
  cfg.cam = spec.cam;
  Tracker tracker(cfg.trk, cfg.cam, cfg.est.H);
  AngleHistory hist(cfg.est.window());
  std::optional<FrameGeometry> prev;

  double total_dets = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& f : frames) {
    const FrameGeometry g = estimate_frame(f.frame, f.detections, spec.cam, cfg.est,
                                           prev ? &*prev : nullptr, hist);
    tracker.step(f.detections, g);
    total_dets += static_cast<double>(f.detections.size());
    prev = g;
  }
  const double elapsed = seconds_since(t0);
  const double per_frame_ms = 1000.0 * elapsed / static_cast<double>(frames.size());
  std::printf("    %.0f frames, mean %.1f detections/frame, %.3f ms/frame (%.0f FPS)\n",
              static_cast<double>(frames.size()), total_dets / frames.size(), per_frame_ms,
              1000.0 / per_frame_ms);
  EXPECT_GE(total_dets / frames.size(), 35.0);
  EXPECT_LT(per_frame_ms, 10.0);
}

TEST_F(Acceptance, C10_CliDeterminism) {
  label(10, "two identical CLI track runs produce byte-identical result files");
  const fs::path dir = fs::path(::testing::TempDir()) / "camot_cli_det";
  fs::create_directories(dir);
  const std::string cli = CAMOT_CLI_PATH;
  const std::string scene_dir = (dir / "s1").string();

  const std::string synth_cmd = cli + " synth --objects 20 --theta 30 --frames 60 --seed 7 --out " +
                                scene_dir + " > /dev/null";
  ASSERT_EQ(std::system(synth_cmd.c_str()), 0);
  ASSERT_TRUE(fs::exists(scene_dir + "/det.txt"));
  ASSERT_TRUE(fs::exists(scene_dir + "/gt.txt"));
  ASSERT_TRUE(fs::exists(scene_dir + "/gt_geom.csv"));

  // synth determinism: the same invocation reproduces det.txt byte for byte
  const std::string scene_dir2 = (dir / "s2").string();
  const std::string synth_cmd2 = cli + " synth --objects 20 --theta 30 --frames 60 --seed 7 --out " +
                                 scene_dir2 + " > /dev/null";
  ASSERT_EQ(std::system(synth_cmd2.c_str()), 0);

  const auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  EXPECT_EQ(slurp(scene_dir + "/det.txt"), slurp(scene_dir2 + "/det.txt"));

  const std::string r1 = (dir / "r1.txt").string();
  const std::string r2 = (dir / "r2.txt").string();
  const std::string track_base = cli + " track --det " + scene_dir + "/det.txt --f-px 1000 --out ";
  ASSERT_EQ(std::system((track_base + r1 + " > /dev/null").c_str()), 0);
  ASSERT_EQ(std::system((track_base + r2 + " > /dev/null").c_str()), 0);
  const std::string c1 = slurp(r1);
  EXPECT_FALSE(c1.empty());
  EXPECT_EQ(c1, slurp(r2));

  // and the evaluation round works end to end
  const std::string eval_cmd =
      cli + " eval --gt " + scene_dir + "/gt.txt --result " + r1 + " > /dev/null";
  EXPECT_EQ(std::system(eval_cmd.c_str()), 0);
}
